// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "pnflow/flow_model.hpp"
#include "pnflow/manifold_maps.hpp"

namespace pnflow {

enum class InterpolationRule { kLerp, kNclerp, kSlerp, kSimplexLerp };

const char* to_string(InterpolationRule rule);
/// Parses "lerp", "nclerp", "slerp", or "simplex_lerp".
InterpolationRule parse_rule(const std::string& name);

/// Rule matching a base: Gaussian → lerp, vMF → slerp, Dirichlet → simplex_lerp.
InterpolationRule default_rule(const BaseDistribution& base);
/// Throws ValidationError unless `rule` operates on the support of `base`.
void check_rule_compatible(InterpolationRule rule, const BaseDistribution& base);

Eigen::VectorXd lerp(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lambda);

/// Linear interpolation rescaled so its norm is (1-λ)‖a‖ + λ‖b‖. Throws
/// DegeneratePathError where the linear interpolant vanishes.
Eigen::VectorXd nclerp(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lambda);

/// Great-circle interpolation between unit vectors. Returns `a` for endpoints
/// closer than 1e-9 rad; throws DegeneratePathError for antipodal endpoints.
Eigen::VectorXd slerp(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lambda);

SimplexPoint simplex_lerp(const SimplexPoint& a, const SimplexPoint& b, double lambda);
Eigen::VectorXd simplex_lerp(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lambda);

Eigen::VectorXd interpolate(InterpolationRule rule, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b, double lambda);

/// Angle between two unit vectors, accurate near 0 and π.
double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// λ grid 0, 1/(k+1), ..., 1 with k interior points.
std::vector<double> equal_lambdas(int interior);

struct InterpolationPath {
  InterpolationRule rule = InterpolationRule::kLerp;
  Eigen::VectorXd endpoint_a;
  Eigen::VectorXd endpoint_b;
  std::vector<double> lambdas;
  Eigen::MatrixXd interpolants;  // one row per λ
};

InterpolationPath make_path(InterpolationRule rule, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b, const std::vector<double>& lambdas);

struct PathDiagnostics {
  std::vector<double> norms;
  std::vector<double> step_lengths;
  /// Population standard deviation of the step lengths over their mean.
  double spacing_cv = 0.0;
};

PathDiagnostics path_diagnostics(const InterpolationPath& path);

struct DecodedPath {
  /// Path in base-support coordinates (sphere / simplex points, or latents).
  InterpolationPath path;
  /// Decoded data, one row per λ, endpoints included.
  Eigen::MatrixXd decoded;
};

/// Encodes both endpoints, interpolates with `rule` (default: the base's
/// rule), and decodes `interior` equally λ-spaced points plus the endpoints.
DecodedPath data_interpolate(const FlowModel& model, const Eigen::VectorXd& x_a,
                             const Eigen::VectorXd& x_b, int interior,
                             std::optional<InterpolationRule> rule = std::nullopt);

}  // namespace pnflow
