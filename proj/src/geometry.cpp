// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#include "neaf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <stdexcept>

namespace neaf {

namespace {

constexpr double kUnitTolerance = 1e-9;
constexpr Eigen::Index kLeafSize = 12;

}  // namespace

UnitVec3::UnitVec3(const Vec3& v) : v_(v) {
  if (!v.allFinite() || std::abs(v.norm() - 1.0) > kUnitTolerance) {
    throw std::invalid_argument("UnitVec3: vector is not unit length");
  }
}

UnitVec3 UnitVec3::normalized(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 1e-12) || !v.allFinite()) {
    throw ZeroVector("cannot normalize a near-zero vector");
  }
  UnitVec3 r;
  r.v_ = v / n;
  return r;
}

KdIndex::KdIndex(const std::vector<Vec3>& points) : points_(points) {
  if (points_.empty()) {
    throw std::invalid_argument("KdIndex: empty point set");
  }
  order_.resize(points_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = Eigen::Index(i);
  nodes_.reserve(2 * points_.size() / kLeafSize + 4);
  root_ = build(0, Eigen::Index(points_.size()), 0);
}

int KdIndex::build(Eigen::Index begin, Eigen::Index end, int depth) {
  const int id = int(nodes_.size());
  nodes_.emplace_back();
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  const int axis = depth % 3;
  const Eigen::Index mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end,
                   [&](Eigen::Index a, Eigen::Index b) {
                     const double ca = points_[a][axis], cb = points_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<Eigen::Index> KdIndex::knn(const Vec3& query, int k) const {
  if (k < 1 || std::size_t(k) > points_.size()) {
    throw std::invalid_argument("KdIndex::knn: k out of range");
  }
  // Worst candidate on top; ties in distance resolved by point index so the
  // result set is a deterministic total order.
  using Entry = std::pair<double, Eigen::Index>;
  std::priority_queue<Entry> best;

  auto consider = [&](Eigen::Index idx) {
    const Entry e{(points_[idx] - query).squaredNorm(), idx};
    if (best.size() < std::size_t(k)) {
      best.push(e);
    } else if (e < best.top()) {
      best.pop();
      best.push(e);
    }
  };

  auto visit = [&](auto&& self, int node_id) -> void {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (Eigen::Index i = node.begin; i < node.end; ++i) consider(order_[i]);
      return;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    // The far side may still hold ties, so prune only on strict excess.
    if (best.size() < std::size_t(k) || diff * diff <= best.top().first) {
      self(self, far);
    }
  };
  visit(visit, root_);

  std::vector<Eigen::Index> result(best.size());
  for (auto it = result.rbegin(); it != result.rend(); ++it) {
    *it = best.top().second;
    best.pop();
  }
  return result;
}

KdIndex build_index(const LabeledCloud& cloud) {
  if (cloud.points.empty()) {
    throw std::invalid_argument("build_index: empty cloud");
  }
  return KdIndex(cloud.points);
}

Patch extract_patch(const KdIndex& index, const LabeledCloud& cloud,
                    Eigen::Index i, int k) {
  if (i < 0 || std::size_t(i) >= cloud.points.size()) {
    throw std::invalid_argument("extract_patch: point index out of range");
  }
  if (k < 3 || std::size_t(k) > cloud.points.size()) {
    throw std::invalid_argument("extract_patch: need 3 <= k <= cloud size");
  }
  const Vec3 center = cloud.points[i];
  const std::vector<Eigen::Index> nbrs = index.knn(center, k);

  Patch patch;
  patch.center_index = i;
  patch.coords.resize(k, 3);
  Vec3 sum = Vec3::Zero();
  double max_dist = 0.0;
  for (int j = 0; j < k; ++j) {
    const Vec3& p = cloud.points[std::size_t(nbrs[std::size_t(j)])];
    sum += p;
    patch.coords.row(j) = (p - center).transpose();
    max_dist = std::max(max_dist, (p - center).norm());
  }
  patch.centroid = sum / double(k);
  if (max_dist == 0.0) {
    throw DegeneratePatch("extract_patch: all neighbors coincide with the center point");
  }
  patch.scale = max_dist;
  patch.coords /= max_dist;
  return patch;
}

std::vector<UnitVec3> sample_sphere_uniform(int count, std::uint64_t seed) {
  if (count < 1) {
    throw std::invalid_argument("sample_sphere_uniform: count must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<UnitVec3> out;
  out.reserve(std::size_t(count));
  while (out.size() < std::size_t(count)) {
    const Vec3 v(gauss(rng), gauss(rng), gauss(rng));
    const double n = v.norm();
    if (n < 1e-12) continue;  // measure-zero event: redraw
    out.push_back(UnitVec3::normalized(v));
  }
  return out;
}

double angle_offset(const UnitVec3& gt, const UnitVec3& q) {
  const double cross_norm = gt.vec().cross(q.vec()).norm();
  return std::asin(std::clamp(cross_norm, 0.0, 1.0));
}

double unoriented_angle_deg(const UnitVec3& a, const UnitVec3& b) {
  const double theta = std::acos(std::clamp(std::abs(a.dot(b)), 0.0, 1.0));
  return theta * 180.0 / std::numbers::pi;
}

double unoriented_rmse(const std::vector<UnitVec3>& pred,
                       const std::vector<UnitVec3>& gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw LengthMismatch("unoriented_rmse: sequences must have equal nonzero length");
  }
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double theta =
        std::acos(std::clamp(std::abs(pred[i].dot(gt[i])), 0.0, 1.0));
    sum_sq += theta * theta;
  }
  return std::sqrt(sum_sq / double(pred.size())) * 180.0 / std::numbers::pi;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace neaf
