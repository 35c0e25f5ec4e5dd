// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pnflow/flow_model.hpp"

namespace pnflow {

struct TrainConfig {
  double learning_rate = 1e-3;
  double clip_norm = 50.0;
  int warmup_epochs = 10;
  int epochs = 50;
  int batch_size = 128;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Returns one message per violated field; empty when valid.
  std::vector<std::string> violations() const;
  /// Throws ValidationError listing every violation.
  void validate() const;
};

struct LossAndGradient {
  double loss = 0.0;          // mean negative log-likelihood
  std::vector<double> grad;   // same layout as FlowModel::flat_parameters()
};

/// Mean -log p(x) over the batch.
double mean_nll(const FlowModel& model, const Eigen::MatrixXd& batch);

/// Loss and exact gradient of the mean negative log-likelihood with respect to
/// every parameter, including the manifold-map log-det terms. Throws
/// NumericError naming the first layer that produced a non-finite value.
LossAndGradient gradient(const FlowModel& model, const Eigen::MatrixXd& batch);

double global_norm(std::span<const double> grads);

/// Rescales in place so the global 2-norm is at most `clip_norm`; returns the
/// norm before clipping.
double clip_gradients(std::span<double> grads, double clip_norm);

/// Linear warm-up: (epoch + 1) / warmup_epochs during warm-up, then 1.
double warmup_factor(int epoch, int warmup_epochs);

class AdamState {
 public:
  explicit AdamState(std::size_t num_params = 0);

  /// One bias-corrected Adam update of `params` in place.
  void step(std::span<double> params, std::span<const double> grads, double learning_rate,
            const TrainConfig& config);

  std::size_t size() const { return m_.size(); }
  std::int64_t steps() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t t_ = 0;
};

struct GradientCheckReport {
  /// |analytic - numeric| / max(|analytic|, |numeric|, floor) per parameter.
  std::vector<double> relative_error;
  /// Maximum of relative_error within each layer.
  std::vector<double> layer_max;
  double max_relative_error = 0.0;
};

/// Compares gradient() with central finite differences of mean_nll.
GradientCheckReport check_gradients(const FlowModel& model, const Eigen::MatrixXd& batch,
                                    double step = 1e-5, double floor = 1e-6);

struct EpochStats {
  int epoch = 0;
  double mean_nll = 0.0;
  double bpd = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  FlowModel model;
  std::vector<EpochStats> trace;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch maximum likelihood with Adam, global-norm clipping, and linear
/// warm-up. Deterministic given config.seed. ActNorm layers are initialized
/// from the first mini-batch when at least one epoch runs.
TrainResult train(FlowModel model, const Eigen::MatrixXd& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace pnflow
