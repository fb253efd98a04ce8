// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "neaf/baselines.hpp"
#include "test_support.hpp"

using namespace neaf;
using neaf::test::make_sphere_cloud;

namespace {

Patch patch_from_rows(const PointMatrix& rows) {
  Patch p;
  p.coords = rows;
  p.scale = 1.0;
  p.center_index = 0;
  p.centroid = rows.colwise().mean().transpose();
  return p;
}

// Height-field samples h = c0 + c1 u + c2 v + c3 u^2 + c4 uv + c5 v^2 on a
// symmetric grid; the patch center (origin) is a sample point.
Patch quadric_patch(const Eigen::Matrix<double, 6, 1>& c, int side, double half) {
  PointMatrix rows(side * side, 3);
  int r = 0;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const double u = (2.0 * i / (side - 1) - 1.0) * half;
      const double v = (2.0 * j / (side - 1) - 1.0) * half;
      rows.row(r++) << u, v,
          c[0] + c[1] * u + c[2] * v + c[3] * u * u + c[4] * u * v + c[5] * v * v;
    }
  }
  return patch_from_rows(rows);
}

double mean_error_deg(const LabeledCloud& cloud, const KdIndex& index, int k,
                      BaselineKind kind, int patches) {
  double sum = 0.0;
  for (int i = 0; i < patches; ++i) {
    const Eigen::Index idx = Eigen::Index(i) * Eigen::Index(cloud.size() / std::size_t(patches));
    const Patch patch = extract_patch(index, cloud, idx, k);
    const UnitVec3 n = baseline_normal({kind, k}, patch);
    sum += unoriented_angle_deg(n, cloud.normals[std::size_t(idx)]);
  }
  return sum / patches;
}

}  // namespace

TEST_CASE("pca_normal on coplanar points") {
  PointMatrix flat(9, 3);
  int r = 0;
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) flat.row(r++) << 0.3 * i, 0.27 * j, 0.0;
  }
  const UnitVec3 nz = pca_normal(patch_from_rows(flat));
  CHECK(nz.vec() == Vec3(0, 0, 1));

  // x = 0 plane: canonical sign keeps +x.
  PointMatrix side(9, 3);
  r = 0;
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) side.row(r++) << 0.0, 0.3 * i, 0.27 * j;
  }
  const UnitVec3 nx = pca_normal(patch_from_rows(side));
  CHECK(nx.x() == doctest::Approx(1.0));
  CHECK(std::abs(nx.y()) < 1e-12);
  CHECK(std::abs(nx.z()) < 1e-12);
}

TEST_CASE("pca_normal is permutation- and scale-invariant (unoriented)") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  PointMatrix rows(20, 3);
  for (int i = 0; i < 20; ++i) {
    const double u = uni(rng), v = uni(rng);
    rows.row(i) << u, v, 0.1 * u - 0.2 * v + 0.05 * uni(rng);
  }
  const UnitVec3 base = pca_normal(patch_from_rows(rows));

  PointMatrix shuffled = rows;
  std::vector<int> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int i = 0; i < 20; ++i) shuffled.row(i) = rows.row(perm[std::size_t(i)]);
  const UnitVec3 permuted = pca_normal(patch_from_rows(shuffled));
  CHECK(std::abs(std::abs(base.dot(permuted)) - 1.0) < 1e-12);

  const UnitVec3 scaled = pca_normal(patch_from_rows(PointMatrix(3.7 * rows)));
  CHECK(std::abs(std::abs(base.dot(scaled)) - 1.0) < 1e-10);
}

TEST_CASE("pca_normal rejects ill-defined directions") {
  // Collinear points: the two smallest eigenvalues are both ~0.
  PointMatrix line(5, 3);
  for (int i = 0; i < 5; ++i) line.row(i) << 0.2 * i, 0.2 * i, 0.0;
  CHECK_THROWS_AS(pca_normal(patch_from_rows(line)), RankDeficient);

  // Isotropic cube corners: all eigenvalues equal.
  PointMatrix cube(8, 3);
  for (int i = 0; i < 8; ++i) {
    cube.row(i) << (i & 1 ? 1 : -1), (i & 2 ? 1 : -1), (i & 4 ? 1 : -1);
  }
  CHECK_THROWS_AS(pca_normal(patch_from_rows(PointMatrix(0.5 * cube))), RankDeficient);

  PointMatrix two(2, 3);
  two.setRandom();
  CHECK_THROWS_AS(pca_normal(patch_from_rows(two)), std::invalid_argument);
}

TEST_CASE("pca_normal on sphere caps stays within 2 degrees of radial") {
  const LabeledCloud sphere = make_sphere_cloud(5000, 1.0, 21);
  const KdIndex index = build_index(sphere);
  for (int t = 0; t < 40; ++t) {
    const Eigen::Index i = Eigen::Index(t) * 117;
    const Patch patch = extract_patch(index, sphere, i, 32);
    const UnitVec3 n = pca_normal(patch);
    CHECK(unoriented_angle_deg(n, sphere.normals[std::size_t(i)]) < 2.0);
  }
}

TEST_CASE("jet2 recovers exact quadrics") {
  SUBCASE("flat patch: zero curvature coefficients") {
    Eigen::Matrix<double, 6, 1> c;
    c.setZero();
    const Patch patch = quadric_patch(c, 5, 0.5);
    const Jet2Fit fit = jet2_fit(patch);
    for (int i = 1; i < 6; ++i) CHECK(std::abs(fit.coeffs[i]) < 1e-12);
    CHECK(jet2_normal(patch).vec().z() == doctest::Approx(1.0));
  }

  SUBCASE("paraboloid centered at the origin") {
    Eigen::Matrix<double, 6, 1> c;
    c << 0.0, 0.0, 0.0, 1.0, 0.0, 1.0;  // h = u^2 + v^2
    const UnitVec3 n = jet2_normal(quadric_patch(c, 7, 0.3));
    CHECK(unoriented_angle_deg(n, UnitVec3(Vec3(0, 0, 1))) < 1e-8);
  }

  SUBCASE("generic small quadrics within 1e-6 of the analytic normal") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(-0.05, 0.05);
    for (int t = 0; t < 10; ++t) {
      Eigen::Matrix<double, 6, 1> c;
      c << 0.0, uni(rng), uni(rng), uni(rng), uni(rng), uni(rng);
      const UnitVec3 n = jet2_normal(quadric_patch(c, 7, 0.4));
      const UnitVec3 analytic = UnitVec3::normalized(Vec3(-c[1], -c[2], 1.0));
      CHECK(std::abs(std::abs(n.dot(analytic)) - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("jet2 beats PCA on high-curvature sphere caps") {
  const LabeledCloud sphere = make_sphere_cloud(2000, 1.0, 31);
  const KdIndex index = build_index(sphere);
  const double pca_err = mean_error_deg(sphere, index, 64, BaselineKind::Pca, 40);
  const double jet_err = mean_error_deg(sphere, index, 64, BaselineKind::Jet2, 40);
  CHECK(jet_err < pca_err);
}

TEST_CASE("jet2 rejects singular systems and tiny patches") {
  // All samples on a line (u and v are dependent): singular normal equations.
  PointMatrix line(8, 3);
  for (int i = 0; i < 8; ++i) line.row(i) << 0.1 * i, 0.1 * i, 0.05 * i;
  CHECK_THROWS_AS(jet2_fit(patch_from_rows(line)), NumericError);

  PointMatrix tiny(5, 3);
  tiny.setRandom();
  CHECK_THROWS_AS(jet2_fit(patch_from_rows(tiny)), std::invalid_argument);
}
