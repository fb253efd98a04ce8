// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#include "neaf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "neaf/xyz_io.hpp"

namespace neaf {

namespace {

void validate(const TrainConfig& cfg) {
  if (cfg.k < 3 || cfg.query_pool < 1 || cfg.batch_queries < 1 ||
      cfg.epochs < 1 || cfg.warmup_steps < 0 || cfg.patch_cap < 0) {
    throw std::invalid_argument("TrainConfig: counts out of range");
  }
  if (cfg.batch_queries > cfg.query_pool) {
    throw std::invalid_argument("TrainConfig: batch_queries must be <= query_pool");
  }
  if (!(cfg.lr > 0.0)) {
    throw std::invalid_argument("TrainConfig: lr must be positive");
  }
}

}  // namespace

std::vector<TrainSample> make_training_set(const std::vector<LabeledCloud>& clouds,
                                           const TrainConfig& cfg) {
  validate(cfg);
  std::vector<TrainSample> samples;
  for (std::size_t c = 0; c < clouds.size(); ++c) {
    const LabeledCloud& cloud = clouds[c];
    if (!cloud.has_normals() || cloud.normals.size() != cloud.points.size()) {
      throw MissingNormals("make_training_set: cloud " + std::to_string(c) +
                           " lacks ground-truth normals");
    }
    if (cloud.points.size() < std::size_t(cfg.k)) {
      throw std::invalid_argument("make_training_set: cloud smaller than k");
    }
    std::vector<Eigen::Index> picks(cloud.points.size());
    std::iota(picks.begin(), picks.end(), Eigen::Index(0));
    if (cfg.patch_cap > 0 && std::size_t(cfg.patch_cap) < picks.size()) {
      std::mt19937_64 rng(mix_seed(cfg.seed, 0x70617463ULL + c));
      std::shuffle(picks.begin(), picks.end(), rng);
      picks.resize(std::size_t(cfg.patch_cap));
      std::sort(picks.begin(), picks.end());
    }
    const KdIndex index = build_index(cloud);
    for (Eigen::Index i : picks) {
      try {
        samples.push_back({extract_patch(index, cloud, i, cfg.k),
                           cloud.normals[std::size_t(i)]});
      } catch (const DegeneratePatch&) {
        std::cerr << "warning: skipping degenerate patch at point " << i
                  << " of cloud " << c << "\n";
      }
    }
  }
  if (samples.empty()) {
    throw EmptyResult("make_training_set: no usable patches");
  }
  return samples;
}

double lr_schedule(long long step, long long total_steps, const TrainConfig& cfg) {
  if (step < 0 || step >= total_steps) {
    throw std::invalid_argument("lr_schedule: step out of range");
  }
  if (step < cfg.warmup_steps) {
    return cfg.lr * double(step) / double(cfg.warmup_steps);
  }
  const long long span = total_steps - 1 - cfg.warmup_steps;
  if (span <= 0) return cfg.lr;
  const double progress = double(step - cfg.warmup_steps) / double(span);
  return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "step,lr,loss\n";
  for (const StepRecord& r : steps) {
    out << r.step << ',' << format_double(r.lr) << ',' << format_double(r.loss)
        << '\n';
  }
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

TrainResult train_on_samples(const std::vector<TrainSample>& samples,
                             const TrainConfig& cfg,
                             const std::filesystem::path& abort_checkpoint,
                             const std::filesystem::path& epoch_prefix) {
  validate(cfg);
  if (samples.empty()) {
    throw EmptyResult("train: no samples");
  }

  TrainResult result;
  result.model = init_model(mix_seed(cfg.seed, 1));
  AdamState adam(model_param_count());

  const std::vector<UnitVec3> pool =
      sample_sphere_uniform(cfg.query_pool, mix_seed(cfg.seed, 2));

  // Patch features are encoded lazily and cached: samples repeat each epoch
  // and the model changes every step, so only the tape within a step is
  // reusable across the query batch.
  const long long total_steps = (long long)(cfg.epochs) * (long long)(samples.size());
  std::mt19937_64 batch_rng(mix_seed(cfg.seed, 3));
  std::vector<int> pool_indices(std::size_t(cfg.query_pool));
  std::iota(pool_indices.begin(), pool_indices.end(), 0);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t(0));

  Eigen::VectorXd grads(model_param_count());
  Eigen::Matrix3Xd queries(3, cfg.batch_queries);
  Eigen::VectorXd alpha_gt(cfg.batch_queries);

  long long step = 0;
  try {
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 100 + std::uint64_t(epoch)));
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      double epoch_loss = 0.0;

      for (std::size_t pos = 0; pos < order.size(); ++pos, ++step) {
        const TrainSample& sample = samples[order[pos]];

        // Partial Fisher-Yates: batch_queries distinct pool slots.
        for (int j = 0; j < cfg.batch_queries; ++j) {
          std::uniform_int_distribution<int> pick(j, cfg.query_pool - 1);
          std::swap(pool_indices[std::size_t(j)], pool_indices[std::size_t(pick(batch_rng))]);
          const UnitVec3& q = pool[std::size_t(pool_indices[std::size_t(j)])];
          queries.col(j) = q.vec();
          alpha_gt[j] = angle_offset(sample.normal, q);
        }

        EncoderTape enc;
        encode_patch(result.model, sample.patch.coords, &enc);
        grads.setZero();
        const double loss =
            batch_loss_and_grads(result.model, enc, queries, alpha_gt, grads);

        const double gnorm = grads.norm();
        if (!std::isfinite(gnorm)) {
          throw NonFinite("train: non-finite gradient at step " + std::to_string(step));
        }
        if (cfg.clip_norm > 0.0 && gnorm > cfg.clip_norm) {
          grads *= cfg.clip_norm / gnorm;
        }
        const double lr = lr_schedule(step, total_steps, cfg);
        adam_step(result.model, grads, adam, lr);

        result.log.steps.push_back({step, lr, loss});
        epoch_loss += loss;
      }
      result.log.epoch_mean_loss.push_back(epoch_loss / double(order.size()));
      if (!epoch_prefix.empty() && epoch + 1 < cfg.epochs) {
        save_model(result.model,
                   epoch_prefix.string() + ".epoch" + std::to_string(epoch + 1));
      }
    }
  } catch (const NonFinite&) {
    // The failure is detected before the parameter update, so the model
    // still holds the last good state.
    if (!abort_checkpoint.empty()) {
      save_model(result.model, abort_checkpoint);
      std::cerr << "warning: training aborted; last good checkpoint written to "
                << abort_checkpoint << "\n";
    }
    throw;
  }
  return result;
}

TrainResult train(const std::vector<LabeledCloud>& clouds, const TrainConfig& cfg,
                  const std::filesystem::path& abort_checkpoint) {
  return train_on_samples(make_training_set(clouds, cfg), cfg, abort_checkpoint);
}

void write_run_config(const std::filesystem::path& path, const TrainConfig& cfg,
                      const std::vector<std::string>& inputs) {
  std::ostringstream os;
  os << "k = " << cfg.k << '\n';
  os << "query_pool = " << cfg.query_pool << '\n';
  os << "batch_queries = " << cfg.batch_queries << '\n';
  os << "epochs = " << cfg.epochs << '\n';
  os << "lr = " << format_double(cfg.lr) << '\n';
  os << "warmup_steps = " << cfg.warmup_steps << '\n';
  os << "seed = " << cfg.seed << '\n';
  os << "patch_cap = " << cfg.patch_cap << '\n';
  os << "clip_norm = " << format_double(cfg.clip_norm) << '\n';
  for (const std::string& input : inputs) {
    os << "input = " << input << '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << os.str())) {
    throw IoError("cannot write " + path.string());
  }
}

}  // namespace neaf
