// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow/interpolation.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pnflow/errors.hpp"

namespace pnflow {

namespace {

constexpr double kAntipodalMargin = 1e-6;
constexpr double kCoincidentAngle = 1e-9;
constexpr double kDegenerateNorm = 1e-12;

void check_pair(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DimensionError("interpolation endpoints differ in dimension");
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("interpolation weight must lie in [0, 1]");
}

}  // namespace

const char* to_string(InterpolationRule rule) {
  switch (rule) {
    case InterpolationRule::kLerp:
      return "lerp";
    case InterpolationRule::kNclerp:
      return "nclerp";
    case InterpolationRule::kSlerp:
      return "slerp";
    case InterpolationRule::kSimplexLerp:
      return "simplex_lerp";
  }
  return "unknown";
}

InterpolationRule parse_rule(const std::string& name) {
  if (name == "lerp") return InterpolationRule::kLerp;
  if (name == "nclerp") return InterpolationRule::kNclerp;
  if (name == "slerp") return InterpolationRule::kSlerp;
  if (name == "simplex_lerp") return InterpolationRule::kSimplexLerp;
  throw ValidationError("unknown interpolation rule '" + name + "'");
}

InterpolationRule default_rule(const BaseDistribution& base) {
  switch (manifold_map_for(base)) {
    case ManifoldMap::kSphere:
      return InterpolationRule::kSlerp;
    case ManifoldMap::kSimplex:
      return InterpolationRule::kSimplexLerp;
    case ManifoldMap::kNone:
      break;
  }
  return InterpolationRule::kLerp;
}

void check_rule_compatible(InterpolationRule rule, const BaseDistribution& base) {
  const ManifoldMap map = manifold_map_for(base);
  bool ok = false;
  switch (rule) {
    case InterpolationRule::kLerp:
    case InterpolationRule::kNclerp:
      ok = map == ManifoldMap::kNone;
      break;
    case InterpolationRule::kSlerp:
      ok = map == ManifoldMap::kSphere;
      break;
    case InterpolationRule::kSimplexLerp:
      ok = map == ManifoldMap::kSimplex;
      break;
  }
  if (!ok) {
    throw ValidationError(std::string("interpolation rule '") + to_string(rule) +
                          "' is not compatible with a " + to_string(map) + "-mapped base");
  }
}

Eigen::VectorXd lerp(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lambda) {
  check_pair(a, b);
  check_lambda(lambda);
  return (1.0 - lambda) * a + lambda * b;
}

Eigen::VectorXd nclerp(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lambda) {
  check_pair(a, b);
  check_lambda(lambda);
  if (lambda == 0.0) return a;
  if (lambda == 1.0) return b;
  const Eigen::VectorXd linear = (1.0 - lambda) * a + lambda * b;
  const double n = linear.norm();
  if (n < kDegenerateNorm) {
    throw DegeneratePathError("nclerp: linear interpolant vanishes; norm correction undefined");
  }
  return linear * (((1.0 - lambda) * a.norm() + lambda * b.norm()) / n);
}

double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return 2.0 * std::atan2((a - b).norm(), (a + b).norm());
}

Eigen::VectorXd slerp(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lambda) {
  check_pair(a, b);
  check_lambda(lambda);
  if (std::abs(a.norm() - 1.0) > kSupportTol || std::abs(b.norm() - 1.0) > kSupportTol) {
    throw SupportError("slerp: endpoints must be unit vectors");
  }
  const double omega = angle_between(a, b);
  if (omega < kCoincidentAngle) return a;
  if (omega > std::numbers::pi - kAntipodalMargin) {
    throw DegeneratePathError("slerp: antipodal endpoints have no unique geodesic");
  }
  const double s = std::sin(omega);
  return (std::sin((1.0 - lambda) * omega) / s) * a + (std::sin(lambda * omega) / s) * b;
}

SimplexPoint simplex_lerp(const SimplexPoint& a, const SimplexPoint& b, double lambda) {
  return SimplexPoint(simplex_lerp(a.coords(), b.coords(), lambda));
}

Eigen::VectorXd simplex_lerp(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lambda) {
  check_pair(a, b);
  check_lambda(lambda);
  for (const auto* p : {&a, &b}) {
    if (p->minCoeff() < 0.0 || std::abs(p->sum() - 1.0) > kSupportTol) {
      throw SupportError("simplex_lerp: endpoints must lie on the simplex");
    }
  }
  return (1.0 - lambda) * a + lambda * b;
}

Eigen::VectorXd interpolate(InterpolationRule rule, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b, double lambda) {
  switch (rule) {
    case InterpolationRule::kLerp:
      return lerp(a, b, lambda);
    case InterpolationRule::kNclerp:
      return nclerp(a, b, lambda);
    case InterpolationRule::kSlerp:
      return slerp(a, b, lambda);
    case InterpolationRule::kSimplexLerp:
      return simplex_lerp(a, b, lambda);
  }
  throw DomainError("unknown interpolation rule");
}

std::vector<double> equal_lambdas(int interior) {
  if (interior < 0) throw DomainError("interior point count must be nonnegative");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(interior) + 2);
  out.push_back(0.0);
  for (int j = 1; j <= interior; ++j) out.push_back(static_cast<double>(j) / (interior + 1));
  out.push_back(1.0);
  return out;
}

InterpolationPath make_path(InterpolationRule rule, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b, const std::vector<double>& lambdas) {
  check_pair(a, b);
  InterpolationPath path;
  path.rule = rule;
  path.endpoint_a = a;
  path.endpoint_b = b;
  path.lambdas = lambdas;
  path.interpolants.resize(static_cast<Eigen::Index>(lambdas.size()), a.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (i > 0 && lambdas[i] < lambdas[i - 1]) throw DomainError("λ grid must be ascending");
    path.interpolants.row(static_cast<Eigen::Index>(i)) = interpolate(rule, a, b, lambdas[i]).transpose();
  }
  return path;
}

PathDiagnostics path_diagnostics(const InterpolationPath& path) {
  const Eigen::Index n = path.interpolants.rows();
  if (n < 3) throw DomainError("path diagnostics need at least 3 points");
  PathDiagnostics diag;
  for (Eigen::Index i = 0; i < n; ++i) diag.norms.push_back(path.interpolants.row(i).norm());
  for (Eigen::Index i = 1; i < n; ++i) {
    diag.step_lengths.push_back((path.interpolants.row(i) - path.interpolants.row(i - 1)).norm());
  }
  double mean = 0.0;
  for (double s : diag.step_lengths) mean += s;
  mean /= static_cast<double>(diag.step_lengths.size());
  double var = 0.0;
  for (double s : diag.step_lengths) var += (s - mean) * (s - mean);
  var /= static_cast<double>(diag.step_lengths.size());
  diag.spacing_cv = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
  return diag;
}

DecodedPath data_interpolate(const FlowModel& model, const Eigen::VectorXd& x_a,
                             const Eigen::VectorXd& x_b, int interior,
                             std::optional<InterpolationRule> rule) {
  if (interior < 1) throw DomainError("data_interpolate: need at least one interior point");
  const InterpolationRule r = rule.value_or(default_rule(model.base()));
  check_rule_compatible(r, model.base());

  Eigen::MatrixXd ends(2, model.dim());
  ends.row(0) = x_a.transpose();
  ends.row(1) = x_b.transpose();
  const ForwardResult enc = model.forward(ends);

  DecodedPath out;
  out.path = make_path(r, enc.points.row(0).transpose(), enc.points.row(1).transpose(),
                       equal_lambdas(interior));
  out.decoded = model.decode(out.path.interpolants);
  return out;
}

}  // namespace pnflow
