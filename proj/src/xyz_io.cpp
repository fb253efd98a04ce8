// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#include "neaf/xyz_io.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace neaf {

namespace {

// Parses up to `max_fields + 1` doubles; returns the count actually found.
int parse_fields(const std::string& line, std::array<double, 7>& out) {
  const char* p = line.data();
  const char* end = p + line.size();
  int count = 0;
  while (true) {
    while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
    if (p == end) break;
    if (count >= int(out.size())) return count + 1;  // too many fields
    auto [next, ec] = std::from_chars(p, end, out[std::size_t(count)]);
    if (ec != std::errc{} || next == p) return -1;
    p = next;
    ++count;
  }
  return count;
}

}  // namespace

LabeledCloud read_xyz(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  LabeledCloud cloud;
  std::string line;
  int fields = 0;  // 0 until the first data line fixes the layout
  std::size_t line_no = 0;
  std::array<double, 7> v{};
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const int n = parse_fields(line, v);
    if (n != 3 && n != 6) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 3 or 6 numeric fields");
    }
    if (fields == 0) {
      fields = n;
    } else if (fields != n) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": mixed 3- and 6-field lines");
    }
    const Vec3 p(v[0], v[1], v[2]);
    if (!p.allFinite()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": non-finite coordinate");
    }
    cloud.points.push_back(p);
    if (n == 6) {
      const Vec3 nrm(v[3], v[4], v[5]);
      if (!nrm.allFinite() || nrm.norm() < 1e-12) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": invalid normal");
      }
      // Keep unit normals bit-exact; rescale anything further off.
      if (std::abs(nrm.norm() - 1.0) <= 1e-9) {
        cloud.normals.push_back(UnitVec3(nrm));
      } else {
        cloud.normals.push_back(UnitVec3::normalized(nrm));
      }
    }
  }
  if (cloud.points.empty()) {
    throw ParseError(path.string() + ": no points");
  }
  return cloud;
}

std::string format_double(double value) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, p);
}

void write_xyz(const std::filesystem::path& path, const LabeledCloud& cloud) {
  if (cloud.has_normals() && cloud.normals.size() != cloud.points.size()) {
    throw LengthMismatch("write_xyz: normals/points length mismatch");
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    os << format_double(p.x()) << ' ' << format_double(p.y()) << ' '
       << format_double(p.z());
    if (cloud.has_normals()) {
      const Vec3& n = cloud.normals[i].vec();
      os << ' ' << format_double(n.x()) << ' ' << format_double(n.y()) << ' '
         << format_double(n.z());
    }
    os << '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << os.str())) {
    throw IoError("cannot write " + path.string());
  }
}

void write_point_errors(const std::filesystem::path& path,
                        const LabeledCloud& cloud,
                        const std::vector<double>& errors_deg) {
  if (errors_deg.size() != cloud.points.size()) {
    throw LengthMismatch("write_point_errors: errors/points length mismatch");
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    os << format_double(p.x()) << ' ' << format_double(p.y()) << ' '
       << format_double(p.z()) << ' ' << format_double(errors_deg[i]) << '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << os.str())) {
    throw IoError("cannot write " + path.string());
  }
}

}  // namespace neaf
