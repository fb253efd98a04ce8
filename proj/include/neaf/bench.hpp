// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "neaf/baselines.hpp"
#include "neaf/geometry.hpp"
#include "neaf/inference.hpp"
#include "neaf/neural.hpp"

namespace neaf {

enum class ShapeKind { Plane, Sphere, Cylinder, Torus };
enum class DensityMode { Uniform, Stripes, Gradient };

/// One synthetic benchmark cloud: an analytic surface sampled under a
/// density mode, with per-coordinate Gaussian noise expressed as a fraction
/// of the bounding-box diagonal.  Ground-truth normals are the analytic
/// surface normals at the pre-noise positions.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::Plane;
  int points = 1000;
  double noise_sigma = 0.0;  // fraction of the bbox diagonal
  DensityMode density = DensityMode::Uniform;
  std::uint64_t seed = 0;

  double extent = 2.0;        // plane side length
  double radius = 1.0;        // sphere / cylinder radius
  double height = 2.0;        // cylinder height
  double major_radius = 1.0;  // torus ring radius
  double minor_radius = 0.3;  // torus tube radius

  std::string label() const;
};

LabeledCloud synth_cloud(const ShapeSpec& spec);

/// Evaluation summary; `aggregate` is the mean over clouds.
struct EvalReport {
  struct Row {
    std::string name;
    std::size_t points = 0;
    double rmse_deg = 0.0;
  };
  std::vector<Row> per_cloud;
  double aggregate = 0.0;
  std::vector<double> per_point_deg;  // filled when a dump is requested
};

/// Unoriented RMSE of predicted against ground-truth normals over a seeded
/// subsample (all points when subsample >= N).  Coordinates of the two
/// clouds must agree within 1e-9.
EvalReport evaluate(const LabeledCloud& pred, const LabeledCloud& gt,
                    int subsample, std::uint64_t seed,
                    bool keep_per_point = false);

EvalReport evaluate(const std::filesystem::path& pred_file,
                    const std::filesystem::path& gt_file, int subsample,
                    std::uint64_t seed);

/// Method-by-cloud RMSE table.  A failed cloud is reported as NaN and
/// excluded from the trailing per-method average.
struct BenchmarkTable {
  std::vector<std::string> methods;  // row labels
  std::vector<std::string> clouds;   // column labels
  Eigen::MatrixXd rmse_deg;          // methods x clouds
  std::vector<double> averages;      // per method, NaN cells excluded

  std::string to_text() const;
  std::string to_csv() const;
};

struct BenchmarkOptions {
  InferConfig infer;
  int k = 64;            // patch size for the learned estimator
  int baseline_k = 64;   // neighborhood for PCA / Jet2
  int eval_subsample = 5000;
  std::uint64_t eval_seed = 0;
  int threads = 1;
};

BenchmarkTable run_benchmark(const AngleFieldModel& model,
                             const std::vector<ShapeSpec>& suite,
                             const BenchmarkOptions& opts);

/// Suite manifest: one spec per line of "key=value" tokens
/// (kind=, points=, noise=, density=, seed=, plus shape parameters);
/// '#' starts a comment.
std::vector<ShapeSpec> read_suite(const std::filesystem::path& path);
ShapeSpec parse_shape_spec(const std::string& line);

}  // namespace neaf
