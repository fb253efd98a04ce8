// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include "neaf/geometry.hpp"

namespace neaf {

enum class BaselineKind { Pca, Jet2 };

/// Classical estimator selection: PCA plane fitting or order-2 jet
/// (quadric height-field) fitting over a k-neighborhood.
struct BaselineMethod {
  BaselineKind kind = BaselineKind::Pca;
  int k = 64;  // >= 3 for Pca, >= 6 for Jet2
};

/// Normal of the best-fit plane: eigenvector of the patch covariance with
/// the smallest eigenvalue.  The sign is canonicalized (z >= 0, ties toward
/// y then x).  Throws RankDeficient when the two smallest eigenvalues agree
/// within 1e-12 and the direction is ill-defined.
UnitVec3 pca_normal(const Patch& patch);

/// Order-2 jet fit: height field h(u,v) = a0 + a1 u + a2 v + a3 u^2 +
/// a4 uv + a5 v^2 over the PCA tangent frame.
struct Jet2Fit {
  Eigen::Matrix<double, 6, 1> coeffs;  // a0..a5
  Eigen::Matrix3d frame;               // columns: tangent u, tangent v, height axis
};

/// Fits the quadric; throws SingularSystem when the 6x6 normal equations
/// have condition number above 1e12.  Requires k >= 6.
Jet2Fit jet2_fit(const Patch& patch);

/// Normal of the fitted jet surface at the patch center:
/// normalize(frame * (-a1, -a2, 1)), sign canonicalized as in pca_normal.
UnitVec3 jet2_normal(const Patch& patch);

UnitVec3 baseline_normal(const BaselineMethod& method, const Patch& patch);

}  // namespace neaf
