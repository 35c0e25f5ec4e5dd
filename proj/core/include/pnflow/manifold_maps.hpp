// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

namespace pnflow {

/// Point of the open simplex Δ^d, stored with all d + 1 coordinates.
class SimplexPoint {
 public:
  /// Validates that every coordinate lies in (0, 1) and the sum is 1 within
  /// 1e-10 (re-normalized within 1e-8 of the sum).
  explicit SimplexPoint(Eigen::VectorXd coords);

  const Eigen::VectorXd& coords() const { return coords_; }
  int dim() const { return static_cast<int>(coords_.size()) - 1; }

 private:
  Eigen::VectorXd coords_;
};

/// Point of the unit sphere S^d in R^{d+1}, excluding the north pole.
class SpherePoint {
 public:
  explicit SpherePoint(Eigen::VectorXd coords);

  const Eigen::VectorXd& coords() const { return coords_; }
  int dim() const { return static_cast<int>(coords_.size()) - 1; }

 private:
  Eigen::VectorXd coords_;
};

struct SimplexMapResult {
  Eigen::VectorXd point;  // d + 1 coordinates
  double log_det;
  /// Set when a stick fraction saturated to the 1e-30 clamp or the remainder
  /// fell below the smallest normal double; trailing coordinates are then
  /// inaccurate or zero.
  bool remainder_underflow = false;
};

struct SphereMapResult {
  Eigen::VectorXd point;  // d + 1 coordinates
  double log_det;
};

/// Stick-breaking bijection R^d → Δ^d. v_k = σ(z_k - ln(d + 1 - k)),
/// s_k = v_k · (remaining stick). log_det is ln|det ∂(s_1..s_d)/∂z|.
SimplexMapResult simplex_forward(const Eigen::VectorXd& z);

/// Inverse of simplex_forward. Throws DomainError for boundary points.
Eigen::VectorXd simplex_inverse(const Eigen::VectorXd& s);
Eigen::VectorXd simplex_inverse(const SimplexPoint& s);

/// Reverse-mode product for simplex_forward: given ∂L/∂s (d + 1 entries) and
/// ∂L/∂log_det, returns ∂L/∂z.
Eigen::VectorXd simplex_forward_vjp(const Eigen::VectorXd& z, const Eigen::VectorXd& grad_point,
                                    double grad_log_det);

/// Inverse stereographic projection R^d → S^d from the north pole:
/// s = (ρ z, 1 - ρ), ρ = 2 / (1 + ‖z‖²). log_det is the volume term d · ln ρ.
SphereMapResult sphere_forward(const Eigen::VectorXd& z);

/// z = s_{1:d} / (1 - s_{d+1}). Throws SingularityError within 1e-12 of the
/// north pole.
Eigen::VectorXd sphere_inverse(const Eigen::VectorXd& s);
Eigen::VectorXd sphere_inverse(const SpherePoint& s);

Eigen::VectorXd sphere_forward_vjp(const Eigen::VectorXd& z, const Eigen::VectorXd& grad_point,
                                   double grad_log_det);

}  // namespace pnflow
