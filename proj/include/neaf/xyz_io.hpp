// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "neaf/geometry.hpp"

namespace neaf {

/// Reads a whitespace-separated XYZ text file: 3 fields per line (x y z) or
/// 6 fields (x y z nx ny nz).  Lines starting with '#' and blank lines are
/// ignored.  Mixing 3- and 6-field lines is rejected.
LabeledCloud read_xyz(const std::filesystem::path& path);

/// Writes a cloud in the same format; normals are emitted when present.
/// Floats are printed in shortest round-trip form, so write/read/write is
/// byte-stable.
void write_xyz(const std::filesystem::path& path, const LabeledCloud& cloud);

/// Writes one "x y z err_degrees" line per point, for error-map rendering.
void write_point_errors(const std::filesystem::path& path,
                        const LabeledCloud& cloud,
                        const std::vector<double>& errors_deg);

/// Shortest round-trip decimal form of a double (locale-independent).
std::string format_double(double value);

}  // namespace neaf
