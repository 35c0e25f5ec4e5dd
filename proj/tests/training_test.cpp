// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow/training.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "pnflow/dataset.hpp"
#include "pnflow/errors.hpp"
#include "test_util.hpp"

namespace pnflow {
namespace {

using testing::randn;

BaseDistribution make_base(int which, int d) {
  switch (which) {
    case 0:
      return GaussianBase(d);
    case 1:
      return VmfBase::south_pole(d, 2.0 * d);
    default:
      return DirichletBase::symmetric(d, 2.0);
  }
}

// All three layer kinds with every parameter perturbed away from its initial value.
FlowModel random_model(int base, int d, std::uint64_t seed, bool zero_coupling = false) {
  Rng prng(seed);
  std::mt19937_64 rng(seed);
  FlowModel m(d, make_base(base, d));
  const Eigen::VectorXd s = randn(d, rng, 0.3).array().exp();
  m.add_layer(std::make_unique<ActNormLayer>(d, s, randn(d, rng, 0.3)));
  m.add_layer(std::make_unique<PermutationLayer>(PermutationLayer::random(d, prng)));
  m.add_layer(std::make_unique<AffineCouplingLayer>(d, CouplingMask::alternating(d, 0), std::vector<int>{6}, 3.0, prng));
  m.add_layer(std::make_unique<AffineCouplingLayer>(d, CouplingMask::alternating(d, 1), std::vector<int>{5, 4}, 3.0, prng));
  if (!zero_coupling) {
    std::normal_distribution<double> g(0.0, 0.4);
    for (std::size_t i = 2; i < 4; ++i) {
      for (double& p : m.layer(i).parameters()) p = g(rng);
    }
  }
  return m;
}

struct GradCase {
  int base;
  int dim;
  bool zero_coupling;
};

class GradientOracle : public ::testing::TestWithParam<GradCase> {};

TEST_P(GradientOracle, MatchesCentralDifferences) {
  const auto [base, d, zero] = GetParam();
  for (int inst = 0; inst < 3; ++inst) {
    const std::uint64_t seed = 100 * base + 10 * d + inst;
    const FlowModel m = random_model(base, d, seed, zero);
    std::mt19937_64 rng(seed + 7);
    const Eigen::MatrixXd x = randn(12, d, rng, 0.7);
    const auto report = check_gradients(m, x, 1e-5, 1e-6);
    EXPECT_LE(report.max_relative_error, 1e-4) << "base=" << base << " d=" << d << " inst=" << inst;
    ASSERT_EQ(report.layer_max.size(), m.num_layers());
    for (double e : report.relative_error) EXPECT_GE(e, 0.0);
  }
}

std::vector<GradCase> grad_cases() {
  std::vector<GradCase> out;
  for (int b : {0, 1, 2}) {
    for (int d : {1, 2, 4, 8}) {
      out.push_back({b, d, false});
      out.push_back({b, d, true});
    }
  }
  return out;
}

INSTANTIATE_TEST_SUITE_P(BasesAndMaps, GradientOracle, ::testing::ValuesIn(grad_cases()));

TEST(Gradient, ActNormBiasEqualsMeanLatent) {
  // Unit scale, zero bias: loss = mean ‖x + b‖²/2 + const, so ∂/∂b = mean x.
  FlowModel m(3, GaussianBase(3));
  m.add_layer(std::make_unique<ActNormLayer>(3, Eigen::Vector3d::Ones(), Eigen::Vector3d::Zero()));
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd x = randn(25, 3, rng);
  const auto g = gradient(m, x);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(g.grad[3 + j], mean[j], 1e-14);
    // ∂/∂s_j = mean(x_j²) - 1 at s = 1.
    EXPECT_NEAR(g.grad[j], x.col(j).squaredNorm() / 25.0 - 1.0, 1e-13);
  }
  EXPECT_NEAR(g.loss, mean_nll(m, x), 1e-14);
}

TEST(Gradient, DuplicatedRowsGiveSameGradient) {
  const FlowModel m = random_model(1, 4, 5);
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd x = randn(10, 4, rng);
  Eigen::MatrixXd twice(20, 4);
  twice << x, x;
  const auto a = gradient(m, x), b = gradient(m, twice);
  EXPECT_NEAR(a.loss, b.loss, 1e-13);
  for (std::size_t i = 0; i < a.grad.size(); ++i) EXPECT_NEAR(a.grad[i], b.grad[i], 1e-12 * std::max(1.0, std::abs(a.grad[i])));
}

TEST(Gradient, NonFiniteReportsLayer) {
  FlowModel m(2, GaussianBase(2));
  m.add_layer(std::make_unique<ActNormLayer>(2, Eigen::Vector2d::Ones(), Eigen::Vector2d::Zero()));
  m.add_layer(std::make_unique<ActNormLayer>(2, Eigen::Vector2d::Constant(1e300), Eigen::Vector2d::Zero()));
  try {
    gradient(m, Eigen::MatrixXd::Constant(1, 2, 1e10));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.layer(), 1);
  }
}

TEST(Clip, Examples) {
  std::vector<double> g = {6.0, 8.0};
  EXPECT_DOUBLE_EQ(clip_gradients(g, 50.0), 10.0);
  EXPECT_EQ(g, (std::vector<double>{6.0, 8.0}));

  std::vector<double> big = {60.0, 80.0};
  EXPECT_DOUBLE_EQ(clip_gradients(big, 50.0), 100.0);
  EXPECT_DOUBLE_EQ(big[0], 30.0);
  EXPECT_DOUBLE_EQ(big[1], 40.0);

  std::vector<double> zeros(5, 0.0);
  clip_gradients(zeros, 50.0);
  EXPECT_EQ(zeros, std::vector<double>(5, 0.0));
  EXPECT_THROW(clip_gradients(g, 0.0), DomainError);
}

TEST(Clip, NeverIncreasesNormAndKeepsDirection) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 200; ++t) {
    const Eigen::VectorXd v = randn(7, rng, 30.0);
    std::vector<double> g(v.data(), v.data() + v.size());
    const double before = global_norm(g);
    clip_gradients(g, 50.0);
    const Eigen::Map<const Eigen::VectorXd> after(g.data(), 7);
    EXPECT_LE(after.norm(), std::min(before, 50.0) * (1 + 1e-15));
    EXPECT_NEAR(after.normalized().dot(v.normalized()), 1.0, 1e-14);
  }
}

TEST(Warmup, Examples) {
  EXPECT_DOUBLE_EQ(warmup_factor(0, 10), 0.1);
  EXPECT_DOUBLE_EQ(warmup_factor(9, 10), 1.0);
  EXPECT_DOUBLE_EQ(warmup_factor(50, 10), 1.0);
  EXPECT_DOUBLE_EQ(warmup_factor(3, 0), 1.0);
  EXPECT_THROW(warmup_factor(-1, 10), DomainError);
}

TEST(Adam, Examples) {
  TrainConfig cfg;
  AdamState s(1);
  std::vector<double> p = {1.0};
  s.step(p, std::vector<double>{0.0}, 1e-3, cfg);
  EXPECT_EQ(p[0], 1.0);

  AdamState a(1);
  std::vector<double> q = {0.0};
  a.step(q, std::vector<double>{2.0}, 1e-3, cfg);
  const double first = q[0];
  EXPECT_NEAR(first, -1e-3, 1e-6);
  a.step(q, std::vector<double>{2.0}, 1e-3, cfg);
  const double second = q[0] - first;
  EXPECT_LE(std::abs(second), std::abs(first) + 1e-9);
  EXPECT_EQ(a.steps(), 2);
  EXPECT_THROW(a.step(q, std::vector<double>{1.0, 2.0}, 1e-3, cfg), DimensionError);
}

TEST(Adam, SignOfFirstStep) {
  TrainConfig cfg;
  AdamState s(4);
  std::vector<double> p(4, 0.0);
  const std::vector<double> g = {3.0, -0.01, 100.0, -7.0};
  s.step(p, g, 1e-3, cfg);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(p[i], -1e-3 * (g[i] > 0 ? 1 : -1), 1e-6);
}

TEST(TrainConfig, Violations) {
  TrainConfig c;
  EXPECT_TRUE(c.violations().empty());
  c.learning_rate = 0;
  c.batch_size = 0;
  c.warmup_epochs = 60;
  EXPECT_EQ(c.violations().size(), 3u);
  EXPECT_THROW(c.validate(), ValidationError);
}

Eigen::MatrixXd moons(int n) { return two_moons(n, 0.05, 3).data; }

FlowModel small_model(const BaseDistribution& base, std::uint64_t seed) {
  Rng rng(seed);
  Architecture arch;
  arch.steps = 4;
  arch.hidden = {32, 32};
  return FlowModel::build(2, base, arch, rng);
}

TEST(Train, ZeroEpochsLeavesModelUnchanged) {
  const FlowModel m = small_model(GaussianBase(2), 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.warmup_epochs = 0;
  const auto r = train(m, moons(100), cfg);
  EXPECT_EQ(r.model.flat_parameters(), m.flat_parameters());
  EXPECT_TRUE(r.trace.empty());
}

TEST(Train, SeededRunsAreBitwiseIdentical) {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.warmup_epochs = 1;
  cfg.batch_size = 32;
  cfg.seed = 17;
  const Eigen::MatrixXd data = moons(200);
  const auto a = train(small_model(GaussianBase(2), 2), data, cfg);
  const auto b = train(small_model(GaussianBase(2), 2), data, cfg);
  ASSERT_EQ(a.trace.size(), 3u);
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].mean_nll, b.trace[i].mean_nll);
  EXPECT_EQ(a.model.flat_parameters(), b.model.flat_parameters());
  cfg.seed = 18;
  const auto c = train(small_model(GaussianBase(2), 2), data, cfg);
  EXPECT_NE(a.trace.back().mean_nll, c.trace.back().mean_nll);
}

TEST(Train, VmfBaseImprovesAndLatentsStayOnSphere) {
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.warmup_epochs = 3;
  cfg.batch_size = 64;
  cfg.seed = 5;
  const Eigen::MatrixXd data = moons(600);
  const FlowModel init = small_model(VmfBase::south_pole(2, 4.0), 3);
  const double base_only = mean_nll(FlowModel(2, VmfBase::south_pole(2, 4.0)), data);
  std::vector<double> lrs;
  const auto r = train(init, data, cfg, [&](const EpochStats& s) { lrs.push_back(s.learning_rate); });
  ASSERT_EQ(r.trace.size(), 15u);
  EXPECT_NEAR(lrs[0], 1e-3 / 3, 1e-15);
  EXPECT_DOUBLE_EQ(lrs[5], 1e-3);
  EXPECT_LT(r.trace.back().mean_nll, base_only - 0.5);
  // Loss after warm-up stays within noise of a decreasing trend.
  for (std::size_t e = 4; e < r.trace.size(); ++e) EXPECT_LT(r.trace[e].mean_nll, r.trace[2].mean_nll + 0.1);
  const auto fw = r.model.forward(data);
  EXPECT_LT((fw.points.rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Train, RejectsEmptyDataset) {
  TrainConfig cfg;
  EXPECT_THROW(train(small_model(GaussianBase(2), 1), Eigen::MatrixXd(0, 2), cfg), Error);
}

}  // namespace
}  // namespace pnflow
