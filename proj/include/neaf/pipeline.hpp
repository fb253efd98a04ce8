// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "neaf/geometry.hpp"
#include "neaf/neural.hpp"

namespace neaf {

struct TrainConfig {
  int k = 64;               // patch neighbor count
  int query_pool = 5000;    // sphere queries sampled once per run
  int batch_queries = 400;  // queries drawn per optimizer step
  int epochs = 1;
  double lr = 1e-3;
  int warmup_steps = 200;
  std::uint64_t seed = 0;
  int patch_cap = 0;        // per-cloud seeded subsample; 0 keeps every point
  double clip_norm = 10.0;  // global gradient-norm clip
};

struct TrainSample {
  Patch patch;
  UnitVec3 normal;  // ground truth at the patch center
};

/// One patch per point of every cloud (or a seeded per-cloud subsample when
/// patch_cap is set), ground-truth normal attached unchanged: the patch
/// normalization is translation plus scale only, which preserves normals.
/// Degenerate patches are skipped with a warning.  Throws MissingNormals.
std::vector<TrainSample> make_training_set(const std::vector<LabeledCloud>& clouds,
                                           const TrainConfig& cfg);

/// Linear warm-up to cfg.lr, then cosine decay to zero over the remaining
/// steps.  Requires 0 <= step < total_steps.
double lr_schedule(long long step, long long total_steps, const TrainConfig& cfg);

struct StepRecord {
  long long step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<double> epoch_mean_loss;

  /// CSV with header "step,lr,loss", one row per step.
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
  AngleFieldModel model;
  TrainLog log;
};

/// Runs the training loop over prepared samples: per optimizer step one
/// patch (epoch-shuffled round robin) and batch_queries query vectors drawn
/// without replacement from the shared pool; L1 fit of the predicted angle
/// offsets, Adam update under the warm-up/cosine schedule.
///
/// On a non-finite loss the last good model is written to
/// `abort_checkpoint` (when given) and NonFinite is rethrown.  A non-empty
/// `epoch_prefix` writes "<prefix>.epochN" snapshots after each epoch but
/// the last.
TrainResult train_on_samples(const std::vector<TrainSample>& samples,
                             const TrainConfig& cfg,
                             const std::filesystem::path& abort_checkpoint = {},
                             const std::filesystem::path& epoch_prefix = {});

TrainResult train(const std::vector<LabeledCloud>& clouds, const TrainConfig& cfg,
                  const std::filesystem::path& abort_checkpoint = {});

/// "key = value" dump of the configuration next to a checkpoint.
void write_run_config(const std::filesystem::path& path, const TrainConfig& cfg,
                      const std::vector<std::string>& inputs);

}  // namespace neaf
