// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#include "neaf/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

namespace neaf {

namespace {

void validate(const InferConfig& cfg) {
  if (cfg.coarse_count < 1 || cfg.coarse_count > cfg.sample_count) {
    throw std::invalid_argument("InferConfig: need 1 <= coarse_count <= sample_count");
  }
  if (cfg.refine_steps < 0 || !(cfg.refine_lr > 0.0)) {
    throw std::invalid_argument("InferConfig: bad refinement settings");
  }
}

// Candidate pool for one point: either the best-l of the shared sample set
// or (ablation) l random directions scored for their offsets.
CoarseSet coarse_candidates(const AngleFieldModel& model,
                            const Eigen::Ref<const Eigen::VectorXd>& feature,
                            const std::vector<UnitVec3>& samples,
                            const InferConfig& cfg, std::uint64_t salt) {
  if (cfg.skip_coarse) {
    const std::vector<UnitVec3> random_dirs = sample_sphere_uniform(
        cfg.coarse_count, mix_seed(cfg.seed, 0xab1a7e00ULL + salt));
    return select_coarse(model, feature, random_dirs, cfg.coarse_count);
  }
  return select_coarse(model, feature, samples, cfg.coarse_count);
}

std::vector<UnitVec3> refine_with_feature(const AngleFieldModel& model,
                                          const Eigen::Ref<const Eigen::VectorXd>& feature,
                                          const CoarseSet& coarse,
                                          const InferConfig& cfg) {
  std::vector<UnitVec3> refined = coarse.vectors;
  for (std::size_t s = 0; s < refined.size(); ++s) {
    Eigen::VectorXd v = refined[s].vec();
    AdamState adam(3);  // fresh optimizer state per candidate
    bool collapsed = false;
    for (int step = 0; step < cfg.refine_steps && !collapsed; ++step) {
      DecoderTape tape;
      decode_feature(model, feature, Vec3(v), &tape);
      const Vec3 grad = decoder_query_grad(model, tape);
      const Eigen::VectorXd before = v;
      adam_step(v, Eigen::VectorXd(grad), adam, cfg.refine_lr);
      if (v.norm() < 1e-12) {
        v = before;  // keep the pre-step value, stop refining this candidate
        collapsed = true;
      } else {
        v /= v.norm();
      }
    }
    refined[s] = UnitVec3::normalized(Vec3(v));
  }
  return refined;
}

UnitVec3 aggregate(const AngleFieldModel& model,
                   const Eigen::Ref<const Eigen::VectorXd>& feature,
                   const std::vector<UnitVec3>& refined, const InferConfig& cfg) {
  const std::vector<UnitVec3> aligned = normalize_signs(refined);
  if (cfg.select == FinalSelect::Min) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < refined.size(); ++i) {
      const double a = decode_feature(model, feature, refined[i].vec());
      if (a < best) {
        best = a;
        best_idx = i;
      }
    }
    return aligned[best_idx];
  }
  try {
    return average_normals(aligned);
  } catch (const DegenerateMean&) {
    std::cerr << "warning: degenerate candidate mean; falling back to the "
                 "reference direction\n";
    return aligned[0];
  }
}

UnitVec3 estimate_with_feature(const AngleFieldModel& model,
                               const Eigen::Ref<const Eigen::VectorXd>& feature,
                               const std::vector<UnitVec3>& samples,
                               const InferConfig& cfg, std::uint64_t salt) {
  const CoarseSet coarse = coarse_candidates(model, feature, samples, cfg, salt);
  if (cfg.coarse_count == 1 && cfg.refine_steps == 0 &&
      cfg.select == FinalSelect::Average) {
    return coarse.vectors[0];  // degenerate pipeline: the single best sample
  }
  const std::vector<UnitVec3> refined = refine_with_feature(model, feature, coarse, cfg);
  return aggregate(model, feature, refined, cfg);
}

}  // namespace

CoarseSet select_coarse(const AngleFieldModel& model,
                        const Eigen::Ref<const Eigen::VectorXd>& feature,
                        const std::vector<UnitVec3>& samples, int coarse_count) {
  const Eigen::Index m = Eigen::Index(samples.size());
  if (coarse_count < 1 || Eigen::Index(coarse_count) > m) {
    throw std::invalid_argument("select_coarse: coarse_count out of range");
  }
  Eigen::Matrix3Xd queries(3, m);
  for (Eigen::Index j = 0; j < m; ++j) queries.col(j) = samples[std::size_t(j)].vec();
  Eigen::VectorXd alphas(m);
  decode_batch(model, feature, queries, alphas);

  std::vector<int> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + coarse_count, idx.end(),
                    [&](int a, int b) {
                      return alphas[a] < alphas[b] ||
                             (alphas[a] == alphas[b] && a < b);
                    });

  CoarseSet out;
  out.vectors.reserve(std::size_t(coarse_count));
  out.offsets.reserve(std::size_t(coarse_count));
  out.source_indices.assign(idx.begin(), idx.begin() + coarse_count);
  for (int i : out.source_indices) {
    out.vectors.push_back(samples[std::size_t(i)]);
    out.offsets.push_back(alphas[i]);
  }
  return out;
}

CoarseSet predict_coarse(const AngleFieldModel& model, const Patch& patch,
                         const InferConfig& cfg) {
  validate(cfg);
  const Eigen::VectorXd feature = encode_patch(model, patch.coords);
  const std::vector<UnitVec3> samples =
      sample_sphere_uniform(cfg.sample_count, cfg.seed);
  return select_coarse(model, feature, samples, cfg.coarse_count);
}

std::vector<UnitVec3> refine(const AngleFieldModel& model, const Patch& patch,
                             const CoarseSet& coarse, const InferConfig& cfg) {
  validate(cfg);
  const Eigen::VectorXd feature = encode_patch(model, patch.coords);
  return refine_with_feature(model, feature, coarse, cfg);
}

std::vector<UnitVec3> normalize_signs(const std::vector<UnitVec3>& vectors) {
  if (vectors.empty()) {
    throw std::invalid_argument("normalize_signs: empty input");
  }
  std::vector<UnitVec3> out = vectors;
  const UnitVec3& ref = vectors[0];
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (ref.dot(out[i]) < 0.0) out[i] = -out[i];  // sign(0) counts as +1
  }
  return out;
}

UnitVec3 average_normals(const std::vector<UnitVec3>& vectors) {
  if (vectors.empty()) {
    throw std::invalid_argument("average_normals: empty input");
  }
  if (vectors.size() == 1) return vectors[0];
  Vec3 sum = Vec3::Zero();
  for (const UnitVec3& v : vectors) sum += v.vec();
  const Vec3 mean = sum / double(vectors.size());
  if (mean.norm() < 1e-9) {
    throw DegenerateMean("average_normals: candidates cancel out");
  }
  return UnitVec3::normalized(mean);
}

UnitVec3 estimate_normal(const AngleFieldModel& model, const Patch& patch,
                         const InferConfig& cfg) {
  validate(cfg);
  const Eigen::VectorXd feature = encode_patch(model, patch.coords);
  const std::vector<UnitVec3> samples =
      cfg.skip_coarse ? std::vector<UnitVec3>{}
                      : sample_sphere_uniform(cfg.sample_count, cfg.seed);
  return estimate_with_feature(model, feature, samples, cfg, 0);
}

std::vector<UnitVec3> estimate_cloud_normals(const AngleFieldModel& model,
                                             const LabeledCloud& cloud, int k,
                                             const InferConfig& cfg,
                                             int threads) {
  validate(cfg);
  if (threads < 1) threads = 1;
  const KdIndex index = build_index(cloud);
  const std::vector<UnitVec3> samples =
      cfg.skip_coarse ? std::vector<UnitVec3>{}
                      : sample_sphere_uniform(cfg.sample_count, cfg.seed);

  std::vector<UnitVec3> result(cloud.points.size());
  std::atomic<std::size_t> cursor{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= cloud.points.size()) return;
      try {
        const Patch patch = extract_patch(index, cloud, Eigen::Index(i), k);
        const Eigen::VectorXd feature = encode_patch(model, patch.coords);
        result[i] = estimate_with_feature(model, feature, samples, cfg, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        cursor.store(cloud.points.size());
        return;
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return result;
}

}  // namespace neaf
