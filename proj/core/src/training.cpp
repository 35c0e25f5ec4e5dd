// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "pnflow/errors.hpp"
#include "pnflow/manifold_maps.hpp"

namespace pnflow {

std::vector<std::string> TrainConfig::violations() const {
  std::vector<std::string> v;
  if (!(learning_rate > 0.0)) v.emplace_back("learning_rate must be positive");
  if (!(clip_norm > 0.0)) v.emplace_back("clip_norm must be positive");
  if (warmup_epochs < 0) v.emplace_back("warmup_epochs must be nonnegative");
  if (epochs < 0) v.emplace_back("epochs must be nonnegative");
  if (epochs > 0 && warmup_epochs > epochs) v.emplace_back("warmup_epochs must not exceed epochs");
  if (batch_size < 1) v.emplace_back("batch_size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) v.emplace_back("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) v.emplace_back("beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) v.emplace_back("epsilon must be positive");
  return v;
}

void TrainConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::ostringstream msg;
  msg << "invalid training configuration:";
  for (const auto& s : v) msg << "\n  - " << s;
  throw ValidationError(msg.str());
}

double mean_nll(const FlowModel& model, const Eigen::MatrixXd& batch) {
  return -model.log_prob(batch).mean();
}

LossAndGradient gradient(const FlowModel& model, const Eigen::MatrixXd& batch) {
  const Eigen::Index n = batch.rows();
  if (n == 0) throw DomainError("gradient: empty batch");
  if (batch.cols() != model.dim()) throw DimensionError("gradient: batch dimension mismatch");
  const std::size_t num_layers = model.num_layers();
  const int final_index = static_cast<int>(num_layers);

  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(num_layers + 1);
  acts.push_back(batch);
  Eigen::VectorXd log_det = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < num_layers; ++i) {
    acts.push_back(model.layer(i).forward(acts.back(), log_det));
    if (!acts.back().allFinite() || !log_det.allFinite()) {
      throw NumericError("non-finite activation in layer " + std::to_string(i), static_cast<int>(i));
    }
  }

  const BaseDistribution& base = model.base();
  const ManifoldMap map = model.manifold_map();
  const Eigen::MatrixXd& z = acts.back();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossAndGradient out;
  Eigen::MatrixXd grad_z(n, model.dim());
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd zi = z.row(i).transpose();
    double lp = log_det[i];
    if (map == ManifoldMap::kNone) {
      lp += log_density(base, zi);
      grad_z.row(i) = -inv_n * log_density_gradient(base, zi).transpose();
    } else if (map == ManifoldMap::kSimplex) {
      const auto r = simplex_forward(zi);
      lp += log_density(base, r.point) + r.log_det;
      const Eigen::VectorXd gp = -inv_n * log_density_gradient(base, r.point);
      grad_z.row(i) = simplex_forward_vjp(zi, gp, -inv_n).transpose();
    } else {
      const auto r = sphere_forward(zi);
      lp += log_density(base, r.point) + r.log_det;
      const Eigen::VectorXd gp = -inv_n * log_density_gradient(base, r.point);
      grad_z.row(i) = sphere_forward_vjp(zi, gp, -inv_n).transpose();
    }
    if (!std::isfinite(lp)) {
      throw NumericError("non-finite log-likelihood at the base distribution", final_index);
    }
    total += lp;
  }
  out.loss = -total * inv_n;

  out.grad.assign(model.num_parameters(), 0.0);
  std::vector<std::size_t> offsets(num_layers);
  std::size_t off = 0;
  for (std::size_t i = 0; i < num_layers; ++i) {
    offsets[i] = off;
    off += model.layer(i).parameters().size();
  }
  const Eigen::VectorXd grad_log_det = Eigen::VectorXd::Constant(n, -inv_n);
  Eigen::MatrixXd g = std::move(grad_z);
  for (std::size_t i = num_layers; i-- > 0;) {
    const Layer& layer = model.layer(i);
    std::span<double> slot(out.grad.data() + offsets[i], layer.parameters().size());
    g = layer.backward(acts[i], g, grad_log_det, slot);
  }
  return out;
}

double global_norm(std::span<const double> grads) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  return std::sqrt(sq);
}

double clip_gradients(std::span<double> grads, double clip_norm) {
  if (!(clip_norm > 0.0)) throw DomainError("clip_norm must be positive");
  const double norm = global_norm(grads);
  if (norm > clip_norm) {
    const double factor = clip_norm / norm;
    for (double& g : grads) g *= factor;
  }
  return norm;
}

double warmup_factor(int epoch, int warmup_epochs) {
  if (epoch < 0) throw DomainError("epoch must be nonnegative");
  if (epoch < warmup_epochs) return (epoch + 1.0) / warmup_epochs;
  return 1.0;
}

AdamState::AdamState(std::size_t num_params) : m_(num_params, 0.0), v_(num_params, 0.0) {}

void AdamState::step(std::span<double> params, std::span<const double> grads, double learning_rate,
                     const TrainConfig& config) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw DimensionError("adam: parameter/gradient sizes do not match optimizer state");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config.beta1 * m_[i] + (1.0 - config.beta1) * grads[i];
    v_[i] = config.beta2 * v_[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

GradientCheckReport check_gradients(const FlowModel& model, const Eigen::MatrixXd& batch, double step,
                                    double floor) {
  const LossAndGradient analytic = gradient(model, batch);
  FlowModel probe = model;
  std::vector<double> theta = model.flat_parameters();
  GradientCheckReport report;
  report.relative_error.resize(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double saved = theta[k];
    theta[k] = saved + step;
    probe.set_flat_parameters(theta);
    const double up = mean_nll(probe, batch);
    theta[k] = saved - step;
    probe.set_flat_parameters(theta);
    const double down = mean_nll(probe, batch);
    theta[k] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.grad[k];
    report.relative_error[k] =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
  }
  std::size_t off = 0;
  for (std::size_t i = 0; i < model.num_layers(); ++i) {
    const std::size_t len = model.layer(i).parameters().size();
    double mx = 0.0;
    for (std::size_t k = off; k < off + len; ++k) mx = std::max(mx, report.relative_error[k]);
    report.layer_max.push_back(mx);
    report.max_relative_error = std::max(report.max_relative_error, mx);
    off += len;
  }
  return report;
}

TrainResult train(FlowModel model, const Eigen::MatrixXd& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  const Eigen::Index n = data.rows();
  if (n == 0) throw DomainError("train: dataset is empty");
  if (data.cols() != model.dim()) throw DimensionError("train: data dimension mismatch");

  TrainResult result{std::move(model), {}};
  if (config.epochs == 0) return result;

  FlowModel& m = result.model;
  Rng rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto shuffle = [&]() {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
  };

  AdamState adam(m.num_parameters());
  std::vector<double> params = m.flat_parameters();
  bool actnorm_ready = false;
  const double d = m.dim();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle();
    const double lr = config.learning_rate * warmup_factor(epoch, config.warmup_epochs);
    double loss_sum = 0.0;
    int batch_index = 0;
    for (Eigen::Index start = 0; start < n; start += config.batch_size, ++batch_index) {
      const Eigen::Index len = std::min<Eigen::Index>(config.batch_size, n - start);
      std::vector<Eigen::Index> rows(order.begin() + start, order.begin() + start + len);
      const Eigen::MatrixXd batch = data(rows, Eigen::all);
      if (!actnorm_ready) {
        m.initialize_actnorm(batch);
        params = m.flat_parameters();
        adam = AdamState(params.size());
        actnorm_ready = true;
      }
      LossAndGradient lg;
      try {
        lg = gradient(m, batch);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(batch_index) + ")",
                           e.layer(), epoch, batch_index);
      }
      clip_gradients(lg.grad, config.clip_norm);
      adam.step(params, lg.grad, lr, config);
      m.set_flat_parameters(params);
      loss_sum += lg.loss * static_cast<double>(len);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_nll = loss_sum / static_cast<double>(n);
    stats.bpd = stats.mean_nll / (d * std::numbers::ln2);
    stats.learning_rate = lr;
    result.trace.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

}  // namespace pnflow
