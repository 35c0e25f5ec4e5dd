// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

namespace pnflow::special {

struct SpecialFnConfig {
  double series_tol = 1e-12;
  int max_terms = 500;

  void validate() const;
};

/// ln Γ(x) for x > 0.
double log_gamma(double x);

/// ln I_order(arg), the modified Bessel function of the first kind, evaluated
/// entirely in the log domain. Power series when sqrt(order² + arg²) is small,
/// Debye's uniform asymptotic expansion otherwise. ln I_order(0) is -inf for
/// order > 0.
double log_bessel_i(double order, double arg, const SpecialFnConfig& config = {});

double sigmoid(double x);
double logit(double p);

/// log σ(x) without overflow or cancellation.
double log_sigmoid(double x);

/// Symmetric square root of a symmetric positive semidefinite matrix.
/// Eigenvalues down to -1e-8 are clamped to zero.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m);

}  // namespace pnflow::special
