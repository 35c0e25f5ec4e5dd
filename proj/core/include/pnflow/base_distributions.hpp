// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <random>
#include <variant>

namespace pnflow {

using Rng = std::mt19937_64;

/// Sampling temperature; T = 1 leaves a distribution unchanged.
class Temperature {
 public:
  explicit Temperature(double t = 1.0);
  double value() const { return t_; }
  bool is_identity() const { return t_ == 1.0; }

 private:
  double t_;
};

/// Isotropic zero-mean Gaussian on R^d. `scale` is 1 for the standard base;
/// other values only arise from temperature adjustment.
class GaussianBase {
 public:
  explicit GaussianBase(int dim, double scale = 1.0);

  int dim() const { return dim_; }
  double scale() const { return scale_; }

 private:
  int dim_;
  double scale_;
};

/// von Mises-Fisher on the unit sphere S^d embedded in R^{d+1}.
class VmfBase {
 public:
  VmfBase(int dim, Eigen::VectorXd mu, double kappa);

  /// Mean direction at (0, ..., 0, -1), the image of the origin under the
  /// stereographic map.
  static VmfBase south_pole(int dim, double kappa);

  int dim() const { return dim_; }
  const Eigen::VectorXd& mu() const { return mu_; }
  double kappa() const { return kappa_; }
  /// ln C_{d+1}(κ).
  double log_normalizer() const { return log_normalizer_; }

 private:
  int dim_;
  Eigen::VectorXd mu_;
  double kappa_;
  double log_normalizer_;
};

/// Dirichlet on the simplex Δ^d embedded in R^{d+1}.
class DirichletBase {
 public:
  DirichletBase(int dim, Eigen::VectorXd alpha);
  static DirichletBase symmetric(int dim, double alpha);

  int dim() const { return dim_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  /// ln Z(α) = Σ ln Γ(α_k) - ln Γ(Σ α_k).
  double log_partition() const { return log_partition_; }

 private:
  int dim_;
  Eigen::VectorXd alpha_;
  double log_partition_;
};

using BaseDistribution = std::variant<GaussianBase, VmfBase, DirichletBase>;

/// Intrinsic dimension d of the support.
int latent_dim(const BaseDistribution& base);
/// Length of a support point: d for the Gaussian, d + 1 for the sphere and simplex.
int ambient_dim(const BaseDistribution& base);

/// Support tolerance on ‖s‖₂ = 1 and Σ s = 1.
inline constexpr double kSupportTol = 1e-8;

/// Checks `point` against the support and returns it re-normalized onto the
/// support. Throws SupportError when it is off by more than kSupportTol.
Eigen::VectorXd project_to_support(const BaseDistribution& base, const Eigen::VectorXd& point);

/// Exact log-density including the normalizer.
double log_density(const BaseDistribution& base, const Eigen::VectorXd& point);

/// Euclidean gradient of the log-density expression with respect to the point
/// coordinates (unconstrained ambient extension).
Eigen::VectorXd log_density_gradient(const BaseDistribution& base, const Eigen::VectorXd& point);

/// Distribution proportional to p(z)^{1/T²}: Gaussian scale × T, vMF κ / T².
/// Throws UnsupportedError for a Dirichlet base with T ≠ 1.
BaseDistribution with_temperature(const BaseDistribution& base, Temperature temp);

/// n i.i.d. draws, one per row.
Eigen::MatrixXd sample(const BaseDistribution& base, int n, Temperature temp, Rng& rng);

/// Mean resultant length A(κ) = I_{m/2}(κ) / I_{m/2-1}(κ) of a vMF in R^m.
double vmf_mean_resultant_length(int ambient, double kappa);

namespace sampling {

double standard_normal(Rng& rng);
/// Uniform on the open interval (0, 1).
double open_uniform(Rng& rng);
/// ln of a Gamma(shape, 1) draw (Marsaglia-Tsang squeeze, boosted for shape < 1).
double log_gamma_variate(double shape, Rng& rng);
double gamma_variate(double shape, Rng& rng);
double beta_variate(double a, double b, Rng& rng);

}  // namespace sampling

}  // namespace pnflow
