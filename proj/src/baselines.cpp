// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#include "neaf/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace neaf {

namespace {

Vec3 canonical_sign(Vec3 v) {
  if (v.z() < 0.0) return -v;
  if (v.z() > 0.0) return v;
  if (v.y() < 0.0) return -v;
  if (v.y() > 0.0) return v;
  if (v.x() < 0.0) return -v;
  return v;
}

// Covariance of the patch rows about their centroid, scaled by 1/k so the
// 1e-12 eigenvalue tolerance applies to unit-ball-normalized coordinates.
Eigen::Matrix3d patch_covariance(const Patch& patch) {
  const Eigen::RowVector3d mean = patch.coords.colwise().mean();
  const PointMatrix centered = patch.coords.rowwise() - mean;
  return (centered.transpose() * centered) / double(patch.k());
}

}  // namespace

UnitVec3 pca_normal(const Patch& patch) {
  if (patch.k() < 3) {
    throw std::invalid_argument("pca_normal: patch needs k >= 3");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(patch_covariance(patch));
  if (es.info() != Eigen::Success) {
    throw RankDeficient("pca_normal: eigendecomposition failed");
  }
  const Vec3 evals = es.eigenvalues();  // ascending
  if (evals[1] - evals[0] <= 1e-12) {
    throw RankDeficient("pca_normal: smallest eigenvalues coincide; normal ill-defined");
  }
  return UnitVec3::normalized(canonical_sign(es.eigenvectors().col(0)));
}

Jet2Fit jet2_fit(const Patch& patch) {
  const Eigen::Index k = patch.k();
  if (k < 6) {
    throw std::invalid_argument("jet2_fit: patch needs k >= 6");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(patch_covariance(patch));
  if (es.info() != Eigen::Success) {
    throw RankDeficient("jet2_fit: eigendecomposition failed");
  }
  Jet2Fit fit;
  // Tangent directions first (largest spread), height axis last.
  fit.frame.col(0) = es.eigenvectors().col(2);
  fit.frame.col(1) = es.eigenvectors().col(1);
  fit.frame.col(2) = es.eigenvectors().col(0);

  // Height-field coordinates of the patch rows; the patch center is at the
  // origin, so the fitted normal is evaluated at (u, v) = (0, 0).
  const PointMatrix local = patch.coords * fit.frame;
  Eigen::MatrixXd design(k, 6);
  for (Eigen::Index r = 0; r < k; ++r) {
    const double u = local(r, 0), v = local(r, 1);
    design.row(r) << 1.0, u, v, u * u, u * v, v * v;
  }
  const Eigen::Matrix<double, 6, 6> normal_eq = design.transpose() * design;
  const Eigen::Matrix<double, 6, 1> rhs = design.transpose() * local.col(2);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> sys(normal_eq);
  const auto& lambda = sys.eigenvalues();
  if (!(lambda[0] > 0.0) || lambda[5] / lambda[0] > 1e12) {
    throw SingularSystem("jet2_fit: normal equations are singular");
  }
  fit.coeffs = sys.eigenvectors() *
               (sys.eigenvectors().transpose() * rhs).cwiseQuotient(lambda);
  return fit;
}

UnitVec3 jet2_normal(const Patch& patch) {
  const Jet2Fit fit = jet2_fit(patch);
  const Vec3 n = fit.frame * Vec3(-fit.coeffs[1], -fit.coeffs[2], 1.0);
  return UnitVec3::normalized(canonical_sign(n));
}

UnitVec3 baseline_normal(const BaselineMethod& method, const Patch& patch) {
  switch (method.kind) {
    case BaselineKind::Pca:
      return pca_normal(patch);
    case BaselineKind::Jet2:
      return jet2_normal(patch);
  }
  throw std::invalid_argument("baseline_normal: unknown method");
}

}  // namespace neaf
