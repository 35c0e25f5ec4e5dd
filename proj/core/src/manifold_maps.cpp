// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow/manifold_maps.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pnflow/base_distributions.hpp"
#include "pnflow/errors.hpp"
#include "pnflow/special_functions.hpp"

namespace pnflow {

namespace {

// ln(1e-30): floor for ln v_k and ln(1 - v_k) so saturated sigmoids keep
// log_det finite.
const double kLogEps = std::log(1e-30);
const double kLogMinNormal = std::log(std::numeric_limits<double>::min());

constexpr double kNorthPoleCutoff = 1e-12;

void check_finite(const Eigen::VectorXd& z, const char* who) {
  if (!z.allFinite()) throw DomainError(std::string(who) + ": input must be finite");
}

}  // namespace

SimplexPoint::SimplexPoint(Eigen::VectorXd coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) throw DomainError("simplex point needs at least 2 coordinates");
  if (!coords_.allFinite()) throw SupportError("simplex point has non-finite coordinates");
  const double sum = coords_.sum();
  if (std::abs(sum - 1.0) > kSupportTol) throw SupportError("simplex point does not sum to 1");
  coords_ /= sum;
  for (Eigen::Index k = 0; k < coords_.size(); ++k) {
    if (!(coords_[k] > 0.0 && coords_[k] < 1.0)) {
      throw DomainError("simplex point coordinates must lie strictly inside (0, 1)");
    }
  }
}

SpherePoint::SpherePoint(Eigen::VectorXd coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) throw DomainError("sphere point needs at least 2 coordinates");
  if (!coords_.allFinite()) throw SupportError("sphere point has non-finite coordinates");
  const double n = coords_.norm();
  if (std::abs(n - 1.0) > kSupportTol) throw SupportError("sphere point is not unit norm");
  coords_ /= n;
  if (!(coords_[coords_.size() - 1] < 1.0)) throw SingularityError("sphere point is the north pole");
}

SimplexMapResult simplex_forward(const Eigen::VectorXd& z) {
  check_finite(z, "simplex_forward");
  const Eigen::Index d = z.size();
  SimplexMapResult out{Eigen::VectorXd(d + 1), 0.0, false};
  double log_rem = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double a = z[k] - std::log(static_cast<double>(d - k));
    const double log_v = std::max(special::log_sigmoid(a), kLogEps);
    const double raw_1mv = special::log_sigmoid(-a);
    const double log_1mv = std::max(raw_1mv, kLogEps);
    out.remainder_underflow = out.remainder_underflow || raw_1mv < kLogEps;
    out.point[k] = std::exp(log_rem + log_v);
    out.log_det += log_v + log_1mv + log_rem;
    log_rem += log_1mv;
  }
  out.point[d] = std::exp(log_rem);
  out.remainder_underflow = out.remainder_underflow || log_rem < kLogMinNormal;
  return out;
}

Eigen::VectorXd simplex_forward_vjp(const Eigen::VectorXd& z, const Eigen::VectorXd& grad_point,
                                    double grad_log_det) {
  const Eigen::Index d = z.size();
  if (grad_point.size() != d + 1) throw DimensionError("simplex_forward_vjp: gradient size mismatch");

  // Recompute the forward quantities.
  Eigen::VectorXd a(d), log_v(d), log_1mv(d), log_rem(d + 1);
  log_rem[0] = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    a[k] = z[k] - std::log(static_cast<double>(d - k));
    log_v[k] = special::log_sigmoid(a[k]);
    log_1mv[k] = special::log_sigmoid(-a[k]);
    log_rem[k + 1] = log_rem[k] + std::max(log_1mv[k], kLogEps);
  }

  Eigen::VectorXd grad_z(d);
  // ∂L/∂log_rem_{k+1}, starting from the implicit last coordinate.
  double g_rem = grad_point[d] * std::exp(log_rem[d]);
  for (Eigen::Index k = d - 1; k >= 0; --k) {
    const bool v_clamped = log_v[k] < kLogEps;
    const bool w_clamped = log_1mv[k] < kLogEps;
    const double s_k = std::exp(log_rem[k] + std::max(log_v[k], kLogEps));
    const double g_log_v = grad_point[k] * s_k + grad_log_det;
    const double g_log_1mv = g_rem + grad_log_det;
    const double v = std::exp(log_v[k]);
    const double one_minus_v = std::exp(log_1mv[k]);
    grad_z[k] = (v_clamped ? 0.0 : g_log_v * one_minus_v) - (w_clamped ? 0.0 : g_log_1mv * v);
    // log_rem_k feeds s_k, the log_det term, and log_rem_{k+1}.
    g_rem = grad_point[k] * s_k + grad_log_det + g_rem;
  }
  return grad_z;
}

Eigen::VectorXd simplex_inverse(const Eigen::VectorXd& s) { return simplex_inverse(SimplexPoint(s)); }

Eigen::VectorXd simplex_inverse(const SimplexPoint& point) {
  const Eigen::VectorXd& s = point.coords();
  const Eigen::Index d = s.size() - 1;
  // Suffix sums of the stick give the remaining mass without cancellation.
  Eigen::VectorXd suffix(d + 2);
  suffix[d + 1] = 0.0;
  for (Eigen::Index k = d; k >= 0; --k) suffix[k] = suffix[k + 1] + s[k];
  Eigen::VectorXd z(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    z[k] = std::log(s[k]) - std::log(suffix[k + 1]) + std::log(static_cast<double>(d - k));
  }
  return z;
}

SphereMapResult sphere_forward(const Eigen::VectorXd& z) {
  check_finite(z, "sphere_forward");
  const Eigen::Index d = z.size();
  const double r2 = z.squaredNorm();
  const double rho = 2.0 / (1.0 + r2);
  SphereMapResult out{Eigen::VectorXd(d + 1), 0.0};
  out.point.head(d) = rho * z;
  out.point[d] = (r2 - 1.0) / (r2 + 1.0);
  out.log_det = static_cast<double>(d) * (std::numbers::ln2 - std::log1p(r2));
  return out;
}

Eigen::VectorXd sphere_forward_vjp(const Eigen::VectorXd& z, const Eigen::VectorXd& grad_point,
                                   double grad_log_det) {
  const Eigen::Index d = z.size();
  if (grad_point.size() != d + 1) throw DimensionError("sphere_forward_vjp: gradient size mismatch");
  const double rho = 2.0 / (1.0 + z.squaredNorm());
  const double g_rho = grad_point.head(d).dot(z) - grad_point[d] + grad_log_det * d / rho;
  // ∂ρ/∂z = -ρ² z
  return rho * grad_point.head(d) - g_rho * rho * rho * z;
}

Eigen::VectorXd sphere_inverse(const Eigen::VectorXd& s) {
  if (s.size() < 2) throw DomainError("sphere point needs at least 2 coordinates");
  if (!s.allFinite()) throw SupportError("sphere point has non-finite coordinates");
  const double n = s.norm();
  if (std::abs(n - 1.0) > kSupportTol) throw SupportError("sphere point is not unit norm");
  const Eigen::VectorXd u = s / n;
  const Eigen::Index d = u.size() - 1;
  const double gap = 1.0 - u[d];
  if (gap < kNorthPoleCutoff) {
    throw SingularityError("sphere_inverse: point lies in the excluded north-pole neighborhood");
  }
  return u.head(d) / gap;
}

Eigen::VectorXd sphere_inverse(const SpherePoint& s) { return sphere_inverse(s.coords()); }

}  // namespace pnflow
