// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow/base_distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pnflow/errors.hpp"
#include "pnflow/special_functions.hpp"

namespace pnflow {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dim(int dim) {
  if (dim < 1) throw DomainError("distribution dimension must be at least 1");
}

void check_size(const Eigen::VectorXd& point, Eigen::Index expected) {
  if (point.size() != expected) {
    throw DimensionError("point has " + std::to_string(point.size()) + " coordinates, expected " +
                         std::to_string(expected));
  }
}

// Wood (1994) rejection sampler for the cosine W = μᵀs of a vMF in R^m with
// mean direction at the last basis vector.
double sample_vmf_cosine(int m, double kappa, Rng& rng) {
  const double dm1 = m - 1.0;
  // b = (-2κ + sqrt(4κ² + (m-1)²)) / (m-1), rationalized to avoid cancellation.
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
  for (;;) {
    const double z = sampling::beta_variate(0.5 * dm1, 0.5 * dm1, rng);
    const double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = sampling::open_uniform(rng);
    if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
  }
}

Eigen::VectorXd sample_vmf(const VmfBase& vmf, Rng& rng) {
  const int m = vmf.dim() + 1;
  const double w = sample_vmf_cosine(m, vmf.kappa(), rng);

  // Uniform direction in the tangent space at the north pole e_m.
  Eigen::VectorXd v(m - 1);
  double norm = 0.0;
  do {
    for (int i = 0; i < m - 1; ++i) v[i] = sampling::standard_normal(rng);
    norm = v.norm();
  } while (norm == 0.0);
  v /= norm;

  Eigen::VectorXd s(m);
  s.head(m - 1) = std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
  s[m - 1] = w;

  // Householder reflection carrying e_m onto μ.
  Eigen::VectorXd u = -vmf.mu();
  u[m - 1] += 1.0;
  const double un = u.norm();
  if (un > 1e-12) {
    u /= un;
    s -= 2.0 * u.dot(s) * u;
  }
  return s / s.norm();
}

Eigen::VectorXd sample_dirichlet(const DirichletBase& dir, Rng& rng) {
  const Eigen::Index m = dir.alpha().size();
  Eigen::VectorXd logs(m);
  for (Eigen::Index k = 0; k < m; ++k) logs[k] = sampling::log_gamma_variate(dir.alpha()[k], rng);
  const double top = logs.maxCoeff();
  Eigen::VectorXd s = (logs.array() - top).exp().matrix();
  return s / s.sum();
}

}  // namespace

Temperature::Temperature(double t) : t_(t) {
  if (!std::isfinite(t) || t <= 0.0) throw DomainError("temperature must be positive and finite");
}

GaussianBase::GaussianBase(int dim, double scale) : dim_(dim), scale_(scale) {
  check_dim(dim);
  if (!std::isfinite(scale) || scale <= 0.0) throw DomainError("Gaussian scale must be positive");
}

VmfBase::VmfBase(int dim, Eigen::VectorXd mu, double kappa)
    : dim_(dim), mu_(std::move(mu)), kappa_(kappa) {
  check_dim(dim);
  check_size(mu_, dim + 1);
  if (std::abs(mu_.norm() - 1.0) > 1e-10) throw DomainError("vMF mean direction must have unit norm");
  if (!std::isfinite(kappa) || kappa <= 0.0) throw DomainError("vMF concentration must be positive");
  const double nu = dim + 1.0;
  log_normalizer_ = (0.5 * nu - 1.0) * std::log(kappa) - 0.5 * nu * kLog2Pi -
                    special::log_bessel_i(0.5 * nu - 1.0, kappa);
}

VmfBase VmfBase::south_pole(int dim, double kappa) {
  check_dim(dim);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(dim + 1);
  mu[dim] = -1.0;
  return VmfBase(dim, std::move(mu), kappa);
}

DirichletBase::DirichletBase(int dim, Eigen::VectorXd alpha) : dim_(dim), alpha_(std::move(alpha)) {
  check_dim(dim);
  check_size(alpha_, dim + 1);
  double sum = 0.0;
  log_partition_ = 0.0;
  for (Eigen::Index k = 0; k < alpha_.size(); ++k) {
    if (!std::isfinite(alpha_[k]) || alpha_[k] <= 0.0) {
      throw DomainError("Dirichlet concentrations must be positive");
    }
    log_partition_ += special::log_gamma(alpha_[k]);
    sum += alpha_[k];
  }
  log_partition_ -= special::log_gamma(sum);
}

DirichletBase DirichletBase::symmetric(int dim, double alpha) {
  check_dim(dim);
  return DirichletBase(dim, Eigen::VectorXd::Constant(dim + 1, alpha));
}

int latent_dim(const BaseDistribution& base) {
  return std::visit([](const auto& b) { return b.dim(); }, base);
}

int ambient_dim(const BaseDistribution& base) {
  return std::holds_alternative<GaussianBase>(base) ? latent_dim(base) : latent_dim(base) + 1;
}

Eigen::VectorXd project_to_support(const BaseDistribution& base, const Eigen::VectorXd& point) {
  check_size(point, ambient_dim(base));
  if (!point.allFinite()) throw SupportError("point has non-finite coordinates");
  return std::visit(
      Overloaded{
          [&](const GaussianBase&) -> Eigen::VectorXd { return point; },
          [&](const VmfBase&) -> Eigen::VectorXd {
            const double n = point.norm();
            if (std::abs(n - 1.0) > kSupportTol) {
              throw SupportError("point is not on the unit sphere (norm " + std::to_string(n) + ")");
            }
            return point / n;
          },
          [&](const DirichletBase&) -> Eigen::VectorXd {
            if (point.minCoeff() < 0.0) throw SupportError("simplex point has a negative coordinate");
            const double sum = point.sum();
            if (std::abs(sum - 1.0) > kSupportTol) {
              throw SupportError("simplex point does not sum to 1 (sum " + std::to_string(sum) + ")");
            }
            return point / sum;
          },
      },
      base);
}

double log_density(const BaseDistribution& base, const Eigen::VectorXd& point) {
  const Eigen::VectorXd s = project_to_support(base, point);
  return std::visit(
      Overloaded{
          [&](const GaussianBase& g) {
            const double sc = g.scale();
            return -0.5 * g.dim() * kLog2Pi - g.dim() * std::log(sc) -
                   0.5 * s.squaredNorm() / (sc * sc);
          },
          [&](const VmfBase& v) { return v.log_normalizer() + v.kappa() * v.mu().dot(s); },
          [&](const DirichletBase& d) {
            double acc = -d.log_partition();
            for (Eigen::Index k = 0; k < s.size(); ++k) {
              const double a = d.alpha()[k];
              if (s[k] == 0.0) {
                if (a < 1.0) throw SupportError("zero simplex coordinate with concentration below 1");
                if (a > 1.0) return -std::numeric_limits<double>::infinity();
                continue;
              }
              acc += (a - 1.0) * std::log(s[k]);
            }
            return acc;
          },
      },
      base);
}

Eigen::VectorXd log_density_gradient(const BaseDistribution& base, const Eigen::VectorXd& point) {
  check_size(point, ambient_dim(base));
  return std::visit(
      Overloaded{
          [&](const GaussianBase& g) -> Eigen::VectorXd {
            return -point / (g.scale() * g.scale());
          },
          [&](const VmfBase& v) -> Eigen::VectorXd { return v.kappa() * v.mu(); },
          [&](const DirichletBase& d) -> Eigen::VectorXd {
            return ((d.alpha().array() - 1.0) / point.array()).matrix();
          },
      },
      base);
}

BaseDistribution with_temperature(const BaseDistribution& base, Temperature temp) {
  const double t = temp.value();
  return std::visit(
      Overloaded{
          [&](const GaussianBase& g) -> BaseDistribution {
            return GaussianBase(g.dim(), g.scale() * t);
          },
          [&](const VmfBase& v) -> BaseDistribution {
            return VmfBase(v.dim(), v.mu(), v.kappa() / (t * t));
          },
          [&](const DirichletBase& d) -> BaseDistribution {
            if (!temp.is_identity()) {
              throw UnsupportedError("temperature sampling is not defined for the Dirichlet base");
            }
            return d;
          },
      },
      base);
}

Eigen::MatrixXd sample(const BaseDistribution& base, int n, Temperature temp, Rng& rng) {
  if (n < 0) throw DomainError("sample count must be nonnegative");
  const BaseDistribution tempered = with_temperature(base, temp);
  Eigen::MatrixXd out(n, ambient_dim(base));
  std::visit(Overloaded{
                 [&](const GaussianBase& g) {
                   for (int i = 0; i < n; ++i) {
                     for (int j = 0; j < g.dim(); ++j) {
                       out(i, j) = g.scale() * sampling::standard_normal(rng);
                     }
                   }
                 },
                 [&](const VmfBase& v) {
                   for (int i = 0; i < n; ++i) out.row(i) = sample_vmf(v, rng).transpose();
                 },
                 [&](const DirichletBase& d) {
                   for (int i = 0; i < n; ++i) out.row(i) = sample_dirichlet(d, rng).transpose();
                 },
             },
             tempered);
  return out;
}

double vmf_mean_resultant_length(int ambient, double kappa) {
  const double half = 0.5 * ambient;
  return std::exp(special::log_bessel_i(half, kappa) - special::log_bessel_i(half - 1.0, kappa));
}

namespace sampling {

double standard_normal(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return normal(rng);
}

double open_uniform(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  do {
    u = unif(rng);
  } while (u <= 0.0);
  return u;
}

double log_gamma_variate(double shape, Rng& rng) {
  if (!(shape > 0.0)) throw DomainError("gamma shape must be positive");
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) · U^{1/a}
    return log_gamma_variate(shape + 1.0, rng) + std::log(open_uniform(rng)) / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = open_uniform(rng);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return std::log(d * v);
  }
}

double gamma_variate(double shape, Rng& rng) { return std::exp(log_gamma_variate(shape, rng)); }

double beta_variate(double a, double b, Rng& rng) {
  const double la = log_gamma_variate(a, rng);
  const double lb = log_gamma_variate(b, rng);
  return special::sigmoid(la - lb);
}

}  // namespace sampling

}  // namespace pnflow
