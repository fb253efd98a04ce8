// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "neaf/errors.hpp"

namespace neaf {

using Vec3 = Eigen::Vector3d;

/// k x 3 matrix, one point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// A 3-vector constrained to unit length at construction.
class UnitVec3 {
 public:
  UnitVec3() : v_(0.0, 0.0, 1.0) {}

  /// Requires |norm(v) - 1| <= 1e-9; throws std::invalid_argument otherwise.
  explicit UnitVec3(const Vec3& v);

  /// Scales an arbitrary vector to unit length; throws ZeroVector when the
  /// norm is below 1e-12.
  static UnitVec3 normalized(const Vec3& v);

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  double dot(const UnitVec3& o) const { return v_.dot(o.v_); }

  UnitVec3 operator-() const {
    UnitVec3 r;
    r.v_ = -v_;
    return r;
  }

 private:
  Vec3 v_;
};

/// Points plus optional per-point ground-truth normals.
struct LabeledCloud {
  std::vector<Vec3> points;
  std::vector<UnitVec3> normals;  // empty, or one per point

  bool has_normals() const { return !normals.empty(); }
  std::size_t size() const { return points.size(); }
};

/// A local neighborhood, centered at its query point and scaled into the
/// unit ball.  `coords * scale + center` recovers the raw neighbor
/// coordinates.
struct Patch {
  PointMatrix coords;             // k x 3, centered and normalized
  Vec3 centroid = Vec3::Zero();   // mean of the raw neighbors (diagnostic)
  double scale = 0.0;             // max center-to-neighbor distance
  Eigen::Index center_index = -1; // index of the query point in the source cloud

  Eigen::Index k() const { return coords.rows(); }
};

/// Exact k-nearest-neighbor index over a fixed point set.  Queries are
/// read-only and safe to issue concurrently.  Equidistant neighbors are
/// ordered by ascending point index.
class KdIndex {
 public:
  explicit KdIndex(const std::vector<Vec3>& points);

  /// Returns the k nearest point indices, sorted by ascending distance
  /// (ties by ascending index).  Requires 1 <= k <= size().
  std::vector<Eigen::Index> knn(const Vec3& query, int k) const;

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

 private:
  struct Node {
    int axis = -1;        // -1 marks a leaf
    double split = 0.0;
    Eigen::Index begin = 0, end = 0;  // leaf range into order_
    int left = -1, right = -1;
  };

  int build(Eigen::Index begin, Eigen::Index end, int depth);

  std::vector<Vec3> points_;
  std::vector<Eigen::Index> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

KdIndex build_index(const LabeledCloud& cloud);

/// Extracts the k-nearest-neighbor patch of point i: neighbors are shifted
/// so the query point sits at the origin and divided by the max neighbor
/// distance.  Throws DegeneratePatch when all k neighbors coincide with the
/// query point.
Patch extract_patch(const KdIndex& index, const LabeledCloud& cloud,
                    Eigen::Index i, int k);

/// Uniform directions from normalized i.i.d. Gaussian 3-vectors.
/// Deterministic for a fixed seed.
std::vector<UnitVec3> sample_sphere_uniform(int count, std::uint64_t seed);

/// Unoriented angle between a ground-truth direction and a query vector,
/// in [0, pi/2]: asin of the clamped cross-product norm.
double angle_offset(const UnitVec3& gt, const UnitVec3& q);

/// Unoriented angle between two unit vectors, in degrees.
double unoriented_angle_deg(const UnitVec3& a, const UnitVec3& b);

/// Root-mean-square unoriented angular error, in degrees.
/// Throws LengthMismatch unless both sequences have equal nonzero length.
double unoriented_rmse(const std::vector<UnitVec3>& pred,
                       const std::vector<UnitVec3>& gt);

/// Splitmix-style seed derivation for independent deterministic streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace neaf
