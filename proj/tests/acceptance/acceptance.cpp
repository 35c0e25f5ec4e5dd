// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any gating criterion fails. Criterion 8 is a report and never gates.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "pnflow/checkpoint.hpp"
#include "pnflow/dataset.hpp"
#include "pnflow/errors.hpp"
#include "pnflow/evaluation.hpp"
#include "pnflow/interpolation.hpp"
#include "pnflow/manifold_maps.hpp"
#include "pnflow/training.hpp"
#include "pnflow_cli/commands.hpp"
#include "test_util.hpp"

namespace {

using namespace pnflow;
using pnflow::testing::randn;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;
  bool gating;
  std::function<void(Outcome&)> body;
};

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}); }

Eigen::VectorXd row_forward(const Layer& l, const Eigen::VectorXd& x, double* ld = nullptr) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(1);
  const Eigen::MatrixXd y = l.forward(x.transpose(), acc);
  if (ld) *ld = acc[0];
  return y.row(0).transpose();
}

std::unique_ptr<Layer> random_layer(int kind, int d, std::mt19937_64& rng, Rng& prng) {
  if (kind == 0) {
    const Eigen::VectorXd s = randn(d, rng, 0.5).array().exp();
    return std::make_unique<ActNormLayer>(d, s, randn(d, rng));
  }
  if (kind == 1) return std::make_unique<PermutationLayer>(PermutationLayer::random(d, prng));
  auto c = std::make_unique<AffineCouplingLayer>(d, CouplingMask::alternating(d, kind % 2), std::vector<int>{16, 16},
                                                 5.0, prng);
  std::normal_distribution<double> g(0.0, 0.4);
  for (double& p : c->parameters()) p = g(rng);
  return c;
}

FlowModel random_chain(const BaseDistribution& base, int d, int layers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Rng prng(seed);
  FlowModel m(d, base);
  for (int i = 0; i < layers; ++i) m.add_layer(random_layer(i % 4, d, rng, prng));
  return m;
}

// 1. Jacobian oracle.
void jacobian_suite(Outcome& o) {
  double worst = 0.0;
  int checks = 0;
  for (int d : {1, 2, 4, 8}) {
    std::mt19937_64 rng(10 + d);
    Rng prng(20 + d);
    for (int t = 0; t < 100; ++t) {
      const Eigen::VectorXd z = randn(d, rng, 1.5);
      const auto simplex = [d](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return simplex_forward(v).point.head(d);
      };
      const auto sphere = [](const Eigen::VectorXd& v) -> Eigen::VectorXd { return sphere_forward(v).point; };
      worst = std::max(worst, rel(simplex_forward(z).log_det,
                                  pnflow::testing::log_volume(pnflow::testing::numerical_jacobian(simplex, z))));
      worst = std::max(worst, rel(sphere_forward(z).log_det,
                                  pnflow::testing::log_volume(pnflow::testing::numerical_jacobian(sphere, z))));
      checks += 2;
      for (int kind = 0; kind < 3; ++kind) {
        const auto layer = random_layer(kind, d, rng, prng);
        double ld = 0;
        row_forward(*layer, z, &ld);
        const auto f = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return row_forward(*layer, v); };
        worst = std::max(worst, rel(ld, pnflow::testing::log_volume(pnflow::testing::numerical_jacobian(f, z))));
        ++checks;
      }
    }
  }
  o.detail << checks << " instances, max relative error " << worst;
  o.require(worst <= 1e-5, "relative error <= 1e-5");
}

// 2. Round trips.
void round_trip_suite(Outcome& o) {
  double map_err = 0.0, chain_err = 0.0;
  for (int d : {1, 2, 8, 64}) {
    std::mt19937_64 rng(30 + d);
    Rng srng(40 + d);
    const Eigen::MatrixXd simplex_pts = sample(DirichletBase::symmetric(d, 2.0), 1000, Temperature(1.0), srng);
    const Eigen::MatrixXd sphere_pts = sample(VmfBase::south_pole(d, 5.0), 1000, Temperature(1.0), srng);
    for (int i = 0; i < 1000; ++i) {
      const Eigen::VectorXd z = randn(d, rng, 2.0);
      const double zs = std::max(1.0, z.cwiseAbs().maxCoeff());
      map_err = std::max(map_err, (simplex_inverse(simplex_forward(z).point) - z).cwiseAbs().maxCoeff() / zs);
      map_err = std::max(map_err, (sphere_inverse(sphere_forward(z).point) - z).cwiseAbs().maxCoeff() /
                                      std::max(1.0, z.norm()));
      const Eigen::VectorXd s = simplex_pts.row(i).transpose(), u = sphere_pts.row(i).transpose();
      map_err = std::max(map_err, (simplex_forward(simplex_inverse(s)).point - s).cwiseAbs().maxCoeff());
      map_err = std::max(map_err, (sphere_forward(sphere_inverse(u)).point - u).cwiseAbs().maxCoeff());
    }
  }
  for (int d : {2, 8}) {
    const FlowModel m = random_chain(GaussianBase(d), d, 8, 50 + d);
    std::mt19937_64 rng(60 + d);
    const Eigen::MatrixXd x = randn(1000, d, rng, 2.0);
    chain_err = std::max(chain_err, (m.inverse(m.forward(x).latent) - x).cwiseAbs().maxCoeff());
    const Eigen::MatrixXd z = randn(1000, d, rng, 2.0);
    chain_err = std::max(chain_err, (m.forward(m.inverse(z)).latent - z).cwiseAbs().maxCoeff());
  }
  o.detail << "maps max error " << map_err << ", chains max error " << chain_err;
  o.require(map_err <= 1e-9, "maps within 1e-9");
  o.require(chain_err <= 1e-6, "chains within 1e-6");
}

// 3. Normalization by quadrature.
void normalization_suite(Outcome& o) {
  const BaseDistribution dir = DirichletBase::symmetric(2, 2.0);
  const BaseDistribution vmf = VmfBase::south_pole(2, 5.0);
  const int n = 600;
  // Δ²: midpoints of a uniform grid on (s1, s2), density times area element.
  double simplex_mass = 0.0;
  const double h = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; i + j < n - 1; ++j) {
      const double a = (i + 1.0 / 3) * h, b = (j + 1.0 / 3) * h;
      simplex_mass += std::exp(log_density(dir, Eigen::Vector3d(a, b, 1 - a - b))) * 0.5 * h * h;
      const double c = (i + 2.0 / 3) * h, e = (j + 2.0 / 3) * h;
      if (i + j < n - 2) simplex_mass += std::exp(log_density(dir, Eigen::Vector3d(c, e, 1 - c - e))) * 0.5 * h * h;
    }
  }
  // 𝕊²: spherical coordinates, midpoint rule.
  double sphere_mass = 0.0;
  const double ht = std::numbers::pi / n, hp = 2 * std::numbers::pi / n;
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) * ht;
    for (int j = 0; j < n; ++j) {
      const double p = (j + 0.5) * hp;
      const Eigen::Vector3d x(std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t));
      sphere_mass += std::exp(log_density(vmf, x)) * std::sin(t) * ht * hp;
    }
  }
  // Pullbacks to ℝ² through z = tan(u).
  double pull_simplex = 0.0, pull_sphere = 0.0;
  const double hu = std::numbers::pi / n;
  for (int i = 0; i < n; ++i) {
    const double u1 = -std::numbers::pi / 2 + (i + 0.5) * hu;
    for (int j = 0; j < n; ++j) {
      const double u2 = -std::numbers::pi / 2 + (j + 0.5) * hu;
      const Eigen::Vector2d z(std::tan(u1), std::tan(u2));
      const double jac = (1 + z[0] * z[0]) * (1 + z[1] * z[1]) * hu * hu;
      const auto s = simplex_forward(z);
      pull_simplex += std::exp(log_density(dir, s.point) + s.log_det) * jac;
      const auto q = sphere_forward(z);
      pull_sphere += std::exp(log_density(vmf, q.point) + q.log_det) * jac;
    }
  }
  o.detail << "Dirichlet " << simplex_mass << ", vMF " << sphere_mass << ", pullbacks " << pull_simplex << " / "
           << pull_sphere;
  for (double m : {simplex_mass, sphere_mass, pull_simplex, pull_sphere}) o.require(std::abs(m - 1) <= 0.02, "mass within 2%");
}

// 4. Sampler moments.
void sampler_suite(Outcome& o) {
  Rng rng(4);
  // A_3(5) = coth 5 - 1/5; A_10(20) from a 40-digit reference evaluation.
  const std::pair<int, double> cases[] = {{2, 5.0}, {9, 20.0}};
  const double oracle[] = {1.0 / std::tanh(5.0) - 0.2, 0.79551906786542478};
  for (int c = 0; c < 2; ++c) {
    const auto [d, kappa] = cases[c];
    const Eigen::MatrixXd s = sample(VmfBase::south_pole(d, kappa), 100000, Temperature(1.0), rng);
    const double r = s.colwise().mean().norm();
    o.detail << "R(d=" << d << ",k=" << kappa << ")=" << r << " vs " << oracle[c] << "; ";
    o.require(std::abs(r - oracle[c]) <= 0.01 * oracle[c], "resultant length within 1%");
  }
  for (double t : {0.5, 1.0, 2.0}) {
    const Eigen::MatrixXd z = sample(GaussianBase(100), 20000, Temperature(t), rng);
    const double m = z.rowwise().squaredNorm().mean();
    o.detail << "E|Tz|^2(T=" << t << ")=" << m << "; ";
    o.require(std::abs(m - t * t * 100) <= 0.02 * t * t * 100, "temperature law within 2%");
  }
}

// 5. Gradients.
void gradient_suite(Outcome& o) {
  double worst = 0.0;
  const char* names[] = {"gaussian", "vmf", "dirichlet"};
  for (int b = 0; b < 3; ++b) {
    double base_worst = 0.0;
    for (int d : {1, 2, 4, 8}) {
      const BaseDistribution base = b == 0   ? BaseDistribution(GaussianBase(d))
                                    : b == 1 ? BaseDistribution(VmfBase::south_pole(d, 2.0 * d))
                                             : BaseDistribution(DirichletBase::symmetric(d, 2.0));
      const FlowModel m = random_chain(base, d, 4, 70 + 10 * b + d);
      std::mt19937_64 rng(80 + d);
      const auto report = check_gradients(m, randn(16, d, rng, 0.7));
      base_worst = std::max(base_worst, report.max_relative_error);
    }
    o.detail << names[b] << " " << base_worst << "; ";
    worst = std::max(worst, base_worst);
  }
  o.require(worst <= 1e-4, "relative error <= 1e-4");
}

// 6. Norm geometry of interpolation in high dimension.
void geometry_suite(Outcome& o) {
  const int d = 512, n = 10000;
  std::mt19937_64 rng(6);
  double end_sq = 0.0, mid_sq = 0.0, nclerp_err = 0.0, slerp_err = 0.0;
  int uneven = 0;
  const auto lambdas = equal_lambdas(5);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd a = randn(d, rng), b = randn(d, rng);
    end_sq += (a.squaredNorm() + b.squaredNorm()) / (2.0 * n);
    mid_sq += lerp(a, b, 0.5).squaredNorm() / n;
    const InterpolationPath p = make_path(InterpolationRule::kNclerp, a, b, lambdas);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      const double l = lambdas[k];
      nclerp_err = std::max(nclerp_err, std::abs(p.interpolants.row(static_cast<Eigen::Index>(k)).norm() -
                                                 ((1 - l) * a.norm() + l * b.norm())));
    }
    if (path_diagnostics(p).spacing_cv > 0.05) ++uneven;
    const InterpolationPath s = make_path(InterpolationRule::kSlerp, a.normalized(), b.normalized(), lambdas);
    slerp_err = std::max(slerp_err, (s.interpolants.rowwise().norm().array() - 1.0).abs().maxCoeff());
  }
  o.detail << "endpoint |z|^2 " << end_sq << ", midpoint " << mid_sq << ", nclerp norm error " << nclerp_err
           << ", slerp norm error " << slerp_err << ", uneven nclerp paths " << uneven << "/" << n;
  o.require(std::abs(end_sq - 512) <= 0.02 * 512, "endpoints within 2% of d");
  o.require(std::abs(mid_sq - 256) <= 0.05 * 256, "midpoints within 5% of d/2");
  o.require(nclerp_err <= 1e-10, "nclerp norms");
  o.require(slerp_err <= 1e-10, "slerp unit norm");
  o.require(2 * uneven > n, "nclerp CV > 0.05 in the majority");
}

// 7 and 8 share trained models.
struct TrainedRun {
  std::string base;
  std::string checkpoint;
  double base_only = 0.0;
  double final_nll = 0.0;
  double seconds = 0.0;
};
std::vector<TrainedRun> g_runs;
const fs::path g_work = fs::temp_directory_path() / "pnflow_acceptance";

void training_suite(Outcome& o) {
  fs::create_directories(g_work);
  const std::pair<const char*, const char*> bases[] = {
      {"gaussian", ""}, {"vmf", R"(,"kappa_multiplier":2)"}, {"dirichlet", R"(,"alpha":2)"}};
  for (const auto& [name, extra] : bases) {
    const fs::path out = g_work / name;
    const fs::path cfg = g_work / (std::string(name) + ".json");
    std::ofstream(cfg) << R"({"schema_version":1,"dataset":"two_moons","dataset_n":2000,"dataset_noise":0.05,)"
                       << R"("levels":1,"steps":8,"coupling_width":64,"coupling_depth":2,"epochs":50,)"
                       << R"("warmup_epochs":10,"batch_size":128,"learning_rate":0.001,"clip_norm":50,)"
                       << R"("seed":1,"base":")" << name << '"' << extra << R"(,"output_dir":")" << out.string()
                       << "\"}";
    const auto start = std::chrono::steady_clock::now();
    const auto r = cli::cmd_train(cfg.string());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    g_runs.push_back({name, r.checkpoint_path, r.base_only_nll, r.final_nll, secs});
    o.detail << name << ": " << r.base_only_nll << " -> " << r.final_nll << " (" << r.base_only_nll - r.final_nll
             << " nats, " << secs << " s); ";
    o.require(r.base_only_nll - r.final_nll >= 1.0, std::string(name) + " improves by >= 1 nat");
    o.require(secs < 300.0, std::string(name) + " under 5 min");
  }
}

void direction_report(Outcome& o) {
  if (g_runs.size() != 3) {
    o.require(false, "trained models unavailable");
    return;
  }
  const auto moons = two_moons(2000, 0.05, 1);
  const LabeledData data{moons.data, moons.labels};
  double gauss_bpd = 0.0, vmf_bpd = 0.0;
  for (const auto& run : g_runs) {
    if (run.base == "dirichlet") continue;
    const FlowModel m = load_checkpoint(run.checkpoint);
    Rng rng(8);
    const InterpolationSet set = interpolation_protocol(m, data, {}, rng);
    const double bpd = bits_per_dim(m, set.samples);
    Eigen::MatrixXd support(0, ambient_dim(m.base()));
    for (const auto& p : set.paths) {
      support.conservativeResize(support.rows() + 5, Eigen::NoChange);
      support.bottomRows(5) = p.interpolants.middleRows(1, 5);
    }
    const bool gauss = run.base == "gaussian";
    const NormHistogram h =
        norm_diagnostics(support, gauss ? NormReference::chi_squared(2) : NormReference::unit());
    (gauss ? gauss_bpd : vmf_bpd) = bpd;
    o.detail << (gauss ? "lerp-Gaussian" : "slerp-vMF") << " interpolant BPD " << bpd << " (data "
             << bits_per_dim(m, moons.data) << "), support |z|^2 mean "
             << h.mean << " (reference " << h.reference.mean() << "); ";
  }
  o.detail << "fixed-norm space " << (vmf_bpd < gauss_bpd ? "lower" : "not lower");
  o.require(vmf_bpd < gauss_bpd, "slerp-vMF BPD below lerp-Gaussian");
}

// 9. Metric self-consistency.
void metric_suite(Outcome& o) {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd x = randn(2000, 8, rng);
  const double self = fid(x, x);
  const Eigen::MatrixXd y = randn(2000, 8, rng);
  const KidResult k = kid(x, y);
  Eigen::MatrixXd a = randn(100000, 4, rng), b = randn(100000, 4, rng);
  b.col(0).array() += 3.0;
  const double shift = fid(a, b);
  o.detail << "FID(X,X)=" << self << ", KID=" << k.value << " +- " << k.std_error << ", FID shift=" << shift;
  o.require(std::abs(self) <= 1e-8, "FID(X,X) = 0");
  o.require(std::abs(k.value) <= 3 * k.std_error, "KID within 3 stderr");
  o.require(std::abs(shift - 9.0) <= 0.03 * 9.0, "mean shift within 3%");
}

// 10. Protocol conformance.
void protocol_suite(Outcome& o) {
  Rng prng(10);
  Architecture arch;
  arch.steps = 2;
  arch.hidden = {16};
  const FlowModel m = FlowModel::build(3, GaussianBase(3), arch, prng);
  for (int n : {100, 250}) {
    std::mt19937_64 rng(n);
    LabeledData data{randn(n, 3, rng), std::vector<int>(n)};
    for (int i = 0; i < n; ++i) (*data.labels)[i] = i % 3;
    for (bool within : {true, false}) {
      ProtocolOptions opts;
      opts.within_class = within;
      Rng r(11);
      const InterpolationSet s = interpolation_protocol(m, data, opts, r);
      bool labels_ok = true, endpoints_excluded = true;
      for (const auto& [i, j] : s.pairs) labels_ok = labels_ok && (!within || (*data.labels)[i] == (*data.labels)[j]);
      for (Eigen::Index i = 0; i < s.samples.rows(); ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          if (s.samples.row(i) == data.x.row(j)) endpoints_excluded = false;
        }
      }
      o.detail << "n=" << n << (within ? " within" : " across") << ": " << s.samples.rows() << " from "
               << s.pairs.size() << " pairs; ";
      o.require(s.samples.rows() == n, "n interpolants");
      o.require(static_cast<int>(s.pairs.size()) == n / 5, "n/5 pairs");
      o.require(labels_ok, "within-class pairs share labels");
      o.require(endpoints_excluded, "endpoints excluded");
    }
  }
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "Jacobian oracle", 60, true, jacobian_suite},
      {2, "round trips", 60, true, round_trip_suite},
      {3, "normalization", 120, true, normalization_suite},
      {4, "sampler moments", 60, true, sampler_suite},
      {5, "gradients", 120, true, gradient_suite},
      {6, "interpolation geometry", 60, true, geometry_suite},
      {7, "end-to-end training", 900, true, training_suite},
      {8, "direction-of-effect report", 600, false, direction_report},
      {9, "metric self-consistency", 60, true, metric_suite},
      {10, "protocol conformance", 600, true, protocol_suite},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs <= c.time_limit_s, "runtime limit");
    std::printf("%s criterion %d (%s%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                c.gating ? "" : ", non-gating", o.detail.str().c_str(), secs);
    std::fflush(stdout);
    if (!o.pass && c.gating) ++failures;
  }
  std::error_code ec;
  fs::remove_all(g_work, ec);
  std::printf("%s: %d gating criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
