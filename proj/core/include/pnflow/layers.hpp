// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pnflow/base_distributions.hpp"

namespace pnflow {

enum class LayerKind : std::uint8_t {
  kActNorm = 1,
  kPermutation = 2,
  kAffineCoupling = 3,
};

const char* to_string(LayerKind kind);

using Shape = std::vector<std::uint32_t>;

/// An invertible map on batches of row vectors. Parameters live in a single
/// flat buffer so optimizers and checkpoints can treat every layer alike.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;

  int dim() const { return dim_; }

  /// y = f(x) row-wise; adds ln|det ∂y/∂x| of each row into `log_det`.
  virtual Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Eigen::VectorXd& log_det) const = 0;
  virtual Eigen::MatrixXd inverse(const Eigen::MatrixXd& y) const = 0;

  /// Reverse-mode pass. Given the layer input `x`, ∂L/∂y and ∂L/∂log_det per
  /// row, accumulates ∂L/∂θ into `param_grad` and returns ∂L/∂x.
  virtual Eigen::MatrixXd backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad_y,
                                   const Eigen::VectorXd& grad_log_det,
                                   std::span<double> param_grad) const = 0;

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  /// Shapes of the tensors packed into parameters(), in storage order.
  virtual std::vector<Shape> parameter_shapes() const = 0;
  /// Integer structure needed to rebuild the layer (masks, widths, ...).
  virtual std::vector<std::uint32_t> metadata() const = 0;
  /// Real-valued non-trainable settings.
  virtual std::vector<double> hyperparameters() const { return {}; }

 protected:
  Layer(int dim, std::size_t num_params);

  int dim_;
  std::vector<double> params_;
};

/// y = scale ⊙ x + bias with data-dependent initialization.
class ActNormLayer final : public Layer {
 public:
  explicit ActNormLayer(int dim);
  ActNormLayer(int dim, const Eigen::VectorXd& scale, const Eigen::VectorXd& bias);

  LayerKind kind() const override { return LayerKind::kActNorm; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<ActNormLayer>(*this); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Eigen::VectorXd& log_det) const override;
  Eigen::MatrixXd inverse(const Eigen::MatrixXd& y) const override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad_y,
                           const Eigen::VectorXd& grad_log_det,
                           std::span<double> param_grad) const override;

  std::vector<Shape> parameter_shapes() const override;
  std::vector<std::uint32_t> metadata() const override;

  /// Sets scale and bias so `batch` maps to zero mean and unit variance per
  /// dimension.
  void initialize_from(const Eigen::MatrixXd& batch);
  bool initialized() const { return initialized_; }
  void set_initialized(bool flag) { initialized_ = flag; }

  Eigen::Map<const Eigen::VectorXd> scale() const;
  Eigen::Map<const Eigen::VectorXd> bias() const;

 private:
  bool initialized_ = false;
};

/// Fixed reordering of coordinates: y_i = x_{perm[i]}.
class PermutationLayer final : public Layer {
 public:
  explicit PermutationLayer(std::vector<std::uint32_t> perm);
  static PermutationLayer random(int dim, Rng& rng);

  LayerKind kind() const override { return LayerKind::kPermutation; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<PermutationLayer>(*this); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Eigen::VectorXd& log_det) const override;
  Eigen::MatrixXd inverse(const Eigen::MatrixXd& y) const override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad_y,
                           const Eigen::VectorXd& grad_log_det,
                           std::span<double> param_grad) const override;

  std::vector<Shape> parameter_shapes() const override { return {}; }
  std::vector<std::uint32_t> metadata() const override { return perm_; }

  const std::vector<std::uint32_t>& permutation() const { return perm_; }
  PermutationLayer inverted() const;

 private:
  std::vector<std::uint32_t> perm_;
  std::vector<std::uint32_t> inv_;
};

/// Partition of the coordinates into a pass-through half and a transformed half.
struct CouplingMask {
  std::vector<std::uint32_t> identity;
  std::vector<std::uint32_t> transformed;

  /// Even/odd split; `parity` selects which half passes through. In one
  /// dimension the single coordinate is always transformed.
  static CouplingMask alternating(int dim, int parity);
  void validate(int dim) const;
};

/// Dense tanh network mapping the pass-through half to (raw log-scale, shift).
/// Views into a parameter buffer owned by the enclosing layer.
class CouplingNet {
 public:
  CouplingNet(int in, std::vector<int> hidden, int out);

  int in() const { return in_; }
  int out() const { return out_; }
  const std::vector<int>& hidden() const { return hidden_; }
  std::size_t num_params() const;
  std::vector<Shape> shapes() const;

  /// Hidden layers get scaled-uniform weights, the output layer zeros so the
  /// network initially outputs zero.
  void initialize(std::span<double> params, Rng& rng) const;

  Eigen::MatrixXd forward(std::span<const double> params, const Eigen::MatrixXd& input) const;
  /// Returns ∂L/∂input and accumulates ∂L/∂params.
  Eigen::MatrixXd backward(std::span<const double> params, const Eigen::MatrixXd& input,
                           const Eigen::MatrixXd& grad_out, std::span<double> grad_params) const;

 private:
  std::vector<int> widths() const;

  int in_;
  std::vector<int> hidden_;
  int out_;
};

/// Affine coupling: y_T = x_T ⊙ exp(ls) + shift, y_I = x_I, where
/// (raw, shift) = net(x_I) and ls = bound · tanh(raw / bound).
class AffineCouplingLayer final : public Layer {
 public:
  AffineCouplingLayer(int dim, CouplingMask mask, std::vector<int> hidden, double log_scale_bound,
                      Rng& rng);
  /// Zero-initialized network parameters.
  AffineCouplingLayer(int dim, CouplingMask mask, std::vector<int> hidden, double log_scale_bound);

  LayerKind kind() const override { return LayerKind::kAffineCoupling; }
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<AffineCouplingLayer>(*this);
  }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Eigen::VectorXd& log_det) const override;
  Eigen::MatrixXd inverse(const Eigen::MatrixXd& y) const override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad_y,
                           const Eigen::VectorXd& grad_log_det,
                           std::span<double> param_grad) const override;

  std::vector<Shape> parameter_shapes() const override { return net_.shapes(); }
  std::vector<std::uint32_t> metadata() const override;
  std::vector<double> hyperparameters() const override { return {bound_}; }

  const CouplingMask& mask() const { return mask_; }
  const CouplingNet& net() const { return net_; }
  double log_scale_bound() const { return bound_; }

  /// Clamped log-scale and shift for each row of `x`.
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> scale_and_shift(const Eigen::MatrixXd& x) const;

 private:
  CouplingMask mask_;
  CouplingNet net_;
  double bound_;
};

/// Rebuilds a layer from its checkpoint manifest entry.
std::unique_ptr<Layer> make_layer(LayerKind kind, int dim, const std::vector<std::uint32_t>& metadata,
                                  const std::vector<double>& hyperparameters,
                                  std::span<const double> params);

}  // namespace pnflow
