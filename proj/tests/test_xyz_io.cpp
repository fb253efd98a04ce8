// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>

#include "neaf/xyz_io.hpp"
#include "test_support.hpp"

using namespace neaf;
using neaf::test::TempDir;
using neaf::test::slurp;

namespace {
void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}
}  // namespace

TEST_CASE("read_xyz parses 3- and 6-field files with comments") {
  TempDir dir;
  const auto p3 = dir.file("three.xyz");
  write_text(p3, "# header\n1 2 3\n\n 4 5 6 \n");
  const LabeledCloud c3 = read_xyz(p3);
  REQUIRE(c3.points.size() == 2);
  CHECK(!c3.has_normals());
  CHECK(c3.points[1] == Vec3(4, 5, 6));

  const auto p6 = dir.file("six.xyz");
  write_text(p6, "0 0 0 0 0 1\n1 0 0 0 1 0\n");
  const LabeledCloud c6 = read_xyz(p6);
  REQUIRE(c6.points.size() == 2);
  REQUIRE(c6.has_normals());
  CHECK(c6.normals[1].y() == 1.0);
}

TEST_CASE("read_xyz rejects malformed input") {
  TempDir dir;
  const auto mixed = dir.file("mixed.xyz");
  write_text(mixed, "1 2 3\n1 2 3 0 0 1\n");
  CHECK_THROWS_AS(read_xyz(mixed), ParseError);

  const auto bad = dir.file("bad.xyz");
  write_text(bad, "1 2 zebra\n");
  CHECK_THROWS_AS(read_xyz(bad), ParseError);

  const auto wide = dir.file("wide.xyz");
  write_text(wide, "1 2 3 4\n");
  CHECK_THROWS_AS(read_xyz(wide), ParseError);

  const auto empty = dir.file("empty.xyz");
  write_text(empty, "# nothing\n");
  CHECK_THROWS_AS(read_xyz(empty), ParseError);

  CHECK_THROWS_AS(read_xyz(dir.file("missing.xyz")), IoError);

  const auto zero_normal = dir.file("zn.xyz");
  write_text(zero_normal, "1 2 3 0 0 0\n");
  CHECK_THROWS_AS(read_xyz(zero_normal), ParseError);
}

TEST_CASE("write/read round-trip preserves values bitwise") {
  TempDir dir;
  LabeledCloud cloud;
  cloud.points.emplace_back(0.1, -2.5e-17, 3.0);
  cloud.points.emplace_back(1.0 / 3.0, 2.0 / 7.0, -1e300);
  cloud.normals.push_back(UnitVec3::normalized(Vec3(1, 2, 3)));
  cloud.normals.push_back(UnitVec3::normalized(Vec3(-1, 0.25, 0.5)));

  const auto path = dir.file("cloud.xyz");
  write_xyz(path, cloud);
  const LabeledCloud back = read_xyz(path);
  REQUIRE(back.points.size() == cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    CHECK(back.points[i] == cloud.points[i]);
    CHECK(back.normals[i].vec() == cloud.normals[i].vec());
  }

  // Writing the re-read cloud reproduces the file byte for byte.
  const auto path2 = dir.file("cloud2.xyz");
  write_xyz(path2, back);
  CHECK(slurp(path) == slurp(path2));
}
