// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "neaf/geometry.hpp"
#include "neaf/neural.hpp"

namespace neaf {

/// Final aggregation over the refined candidates: renormalized mean, or the
/// candidate with the smallest predicted offset after refinement.
enum class FinalSelect { Average, Min };

struct InferConfig {
  int sample_count = 10000;  // sphere queries scored per point (m)
  int coarse_count = 10;     // candidates kept (l)
  int refine_steps = 5;      // Adam steps per candidate
  double refine_lr = 0.005;
  std::uint64_t seed = 0;
  bool skip_coarse = false;  // ablation: refine random vectors instead
  FinalSelect select = FinalSelect::Average;
};

/// The l candidates with the smallest predicted offsets, ascending;
/// ties broken by sample index.
struct CoarseSet {
  std::vector<UnitVec3> vectors;
  std::vector<double> offsets;
  std::vector<int> source_indices;
};

/// Scores all m seeded sphere samples and keeps the best l.
CoarseSet predict_coarse(const AngleFieldModel& model, const Patch& patch,
                         const InferConfig& cfg);

/// Same selection against a precomputed feature and shared sample set.
CoarseSet select_coarse(const AngleFieldModel& model,
                        const Eigen::Ref<const Eigen::VectorXd>& feature,
                        const std::vector<UnitVec3>& samples, int coarse_count);

/// Gradient-descent refinement of each candidate independently: refine_steps
/// Adam steps on the three query components against the predicted offset,
/// re-projected to the unit sphere after every step.  Model parameters are
/// never touched.  A candidate whose update collapses below norm 1e-12
/// keeps its pre-step value.
std::vector<UnitVec3> refine(const AngleFieldModel& model, const Patch& patch,
                             const CoarseSet& coarse, const InferConfig& cfg);

/// Flips each vector into the half-space of the reference (index 0, the
/// smallest-offset candidate); a zero dot product leaves the vector as is.
std::vector<UnitVec3> normalize_signs(const std::vector<UnitVec3>& vectors);

/// Component-wise mean re-normalized to unit length.  Throws DegenerateMean
/// when the mean norm falls below 1e-9.
UnitVec3 average_normals(const std::vector<UnitVec3>& vectors);

/// Full per-point pipeline: coarse prediction, refinement, sign
/// normalization, aggregation.  Deterministic per seed.
UnitVec3 estimate_normal(const AngleFieldModel& model, const Patch& patch,
                         const InferConfig& cfg);

/// Per-cloud driver: k-NN patches for every point, shared sphere samples,
/// optional parallelism over points (results do not depend on the thread
/// count).
std::vector<UnitVec3> estimate_cloud_normals(const AngleFieldModel& model,
                                             const LabeledCloud& cloud, int k,
                                             const InferConfig& cfg,
                                             int threads = 1);

}  // namespace neaf
