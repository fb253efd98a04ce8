// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <fstream>
#include <sstream>

#include "neaf/neural.hpp"

namespace neaf {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format stores little-endian doubles");

namespace {
constexpr const char* kMagic = "NEAF1";

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}
}  // namespace

void save_model(const AngleFieldModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << kMagic << '\n';
  for (const ParamEntry& e : model_layout()) {
    out << e.name << ' ' << e.rows << ' ' << e.cols << '\n';
  }
  out << '\n';
  out.write(reinterpret_cast<const char*>(model.params.data()),
            std::streamsize(model.params.size()) * 8);
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

AngleFieldModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw BadMagic(path.string() + ": empty file");
  }
  strip_cr(line);
  if (line != kMagic) {
    if (line.starts_with("NEAF")) {
      throw VersionMismatch(path.string() + ": unsupported version '" + line + "'");
    }
    throw BadMagic(path.string() + ": not an angle-field checkpoint");
  }
  for (const ParamEntry& e : model_layout()) {
    if (!std::getline(in, line)) {
      throw TruncatedFile(path.string() + ": header ended early");
    }
    strip_cr(line);
    std::istringstream ls(line);
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    if (!(ls >> name >> rows >> cols) || name != e.name || rows != e.rows ||
        cols != e.cols) {
      throw ParseError(path.string() + ": unexpected header line '" + line +
                       "', wanted '" + e.name + "'");
    }
  }
  if (!std::getline(in, line)) {
    throw TruncatedFile(path.string() + ": missing header separator");
  }
  strip_cr(line);
  if (!line.empty()) {
    throw ParseError(path.string() + ": missing blank line after header");
  }

  AngleFieldModel model;
  const std::streamsize expected = std::streamsize(model.params.size()) * 8;
  in.read(reinterpret_cast<char*>(model.params.data()), expected);
  if (in.gcount() != expected) {
    throw TruncatedFile(path.string() + ": payload has " +
                        std::to_string(in.gcount()) + " of " +
                        std::to_string(expected) + " bytes");
  }
  char extra = 0;
  in.read(&extra, 1);
  if (in.gcount() != 0) {
    throw TruncatedFile(path.string() + ": trailing bytes after payload");
  }
  return model;
}

}  // namespace neaf
