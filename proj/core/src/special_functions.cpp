// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow/special_functions.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pnflow/errors.hpp"

namespace pnflow::special {

namespace {

// Debye polynomials u_k(t) = t^k P_k(t^2); row k holds P_k's coefficients in
// ascending powers of t^2.
constexpr int kDebyeTerms = 9;
constexpr std::array<std::array<double, kDebyeTerms>, kDebyeTerms> kDebye = {{
    {1.0},
    {0.125, -0.20833333333333333333},
    {0.0703125, -0.40104166666666666667, 0.33420138888888888889},
    {0.0732421875, -0.8912109375, 1.8464626736111111111, -1.0258125964506172840},
    {0.112152099609375, -2.3640869140625, 8.78912353515625, -11.207002616222993827,
     4.6695844234262474280},
    {0.227108001708984375, -7.3687943594796316964, 42.534998745388454861,
     -91.818241543240017361, 84.636217674600734632, -28.212072558200244877},
    {0.57250142097473144531, -26.491430486951555525, 218.19051174421159048,
     -699.57962737613254123, 1059.9904525279998779, -765.25246814118164230,
     212.57013003921712286},
    {1.7277275025844573975, -108.09091978839465550, 1200.9029132163524628,
     -5305.6469786134031084, 11655.393336864533248, -13586.550006434137439,
     8061.7221817373093845, -1919.4576623184069963},
    {6.0740420012734830379, -493.91530477308801242, 7109.5143024893637214,
     -41192.654968897551298, 122200.46498301745979, -203400.17728041553428,
     192547.00123253153236, -96980.598388637513489, 20204.291330966148643},
}};

// Below this radius sqrt(order² + arg²) the power series is used; above it the
// truncated Debye expansion is accurate to ~1e-12 relative.
constexpr double kDebyeRadius = 30.0;

double log_bessel_series(double order, double arg, const SpecialFnConfig& config) {
  const double half = 0.5 * arg;
  const double q = half * half;
  const double log_first = order * std::log(half) - std::lgamma(order + 1.0);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < config.max_terms; ++k) {
    term *= q / ((k + 1.0) * (k + order + 1.0));
    sum += term;
    // Terms decrease monotonically once past the peak at k(k+order) = q.
    if (term < config.series_tol * sum && (k + 1.0) * (k + order + 1.0) > q) break;
  }
  return log_first + std::log(sum);
}

double log_bessel_debye(double order, double arg) {
  const double r = std::hypot(order, arg);
  const double t = order / r;
  const double t2 = t * t;
  double series = 0.0;
  double inv_rk = 1.0;
  for (int k = 0; k < kDebyeTerms; ++k) {
    double p = 0.0;
    for (int j = k; j >= 0; --j) p = p * t2 + kDebye[k][j];
    series += p * inv_rk;
    inv_rk /= r;
  }
  const double log_ratio = order > 0.0 ? order * std::log(arg / (order + r)) : 0.0;
  return r + log_ratio - 0.5 * std::log(2.0 * std::numbers::pi * r) + std::log(series);
}

}  // namespace

void SpecialFnConfig::validate() const {
  if (!(series_tol > 0.0)) throw DomainError("series_tol must be positive");
  if (max_terms < 1) throw DomainError("max_terms must be at least 1");
}

double log_gamma(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw DomainError("log_gamma: argument must be positive and finite, got " + std::to_string(x));
  }
  return std::lgamma(x);
}

double log_bessel_i(double order, double arg, const SpecialFnConfig& config) {
  if (!std::isfinite(order) || !std::isfinite(arg) || order < 0.0 || arg < 0.0) {
    throw DomainError("log_bessel_i: order and argument must be finite and nonnegative");
  }
  config.validate();
  if (arg == 0.0) {
    return order == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  if (std::hypot(order, arg) < kDebyeRadius) return log_bessel_series(order, arg, config);
  return log_bessel_debye(order, arg);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("logit: probability must lie strictly inside (0, 1)");
  }
  return std::log(p) - std::log1p(-p);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DomainError("matrix_sqrt_psd: matrix must be square");
  if (m.size() == 0) return m;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw DomainError("matrix_sqrt_psd: matrix is not symmetric");
  }
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw DomainError("matrix_sqrt_psd: eigendecomposition failed");
  Eigen::VectorXd values = eig.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < -1e-8 * scale) {
      throw DomainError("matrix_sqrt_psd: matrix is indefinite (eigenvalue " +
                        std::to_string(values[i]) + ")");
    }
    values[i] = std::sqrt(std::max(values[i], 0.0));
  }
  const Eigen::MatrixXd& vecs = eig.eigenvectors();
  return vecs * values.asDiagonal() * vecs.transpose();
}

}  // namespace pnflow::special
