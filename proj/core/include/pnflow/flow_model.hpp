// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pnflow/base_distributions.hpp"
#include "pnflow/layers.hpp"

namespace pnflow {

enum class ManifoldMap : std::uint8_t { kNone = 0, kSimplex = 1, kSphere = 2 };

const char* to_string(ManifoldMap map);

/// The manifold map paired with each base: Gaussian → none, vMF → sphere,
/// Dirichlet → simplex.
ManifoldMap manifold_map_for(const BaseDistribution& base);

/// Glow-style layout recorded with the model. Levels are flattened into one
/// chain of levels × steps blocks of (actnorm, permutation, coupling).
struct Architecture {
  int levels = 1;
  int steps = 8;
  std::vector<int> hidden = {64, 64};
  double log_scale_bound = 5.0;

  void validate() const;
};

struct ForwardResult {
  Eigen::MatrixXd latent;   // n × d, before the manifold map
  Eigen::MatrixXd points;   // n × ambient, on the base support
  Eigen::VectorXd log_det;  // chain + manifold-map term per row
  bool simplex_underflow = false;
};

/// Data kind for bits-per-dimension.
struct DataKind {
  enum class Mode { kContinuous, kQuantized };
  Mode mode = Mode::kContinuous;
  int bit_depth = 8;

  static DataKind continuous() { return {}; }
  static DataKind quantized(int bits) { return {Mode::kQuantized, bits}; }
};

/// Chain f = f_1 ∘ ... ∘ f_L from data to latent, followed by the manifold map
/// implied by the base distribution.
class FlowModel {
 public:
  FlowModel(int dim, BaseDistribution base);

  FlowModel(const FlowModel& other);
  FlowModel& operator=(const FlowModel& other);
  FlowModel(FlowModel&&) noexcept = default;
  FlowModel& operator=(FlowModel&&) noexcept = default;

  /// levels × steps blocks of actnorm, random permutation, and an affine
  /// coupling with alternating mask parity.
  static FlowModel build(int dim, BaseDistribution base, const Architecture& arch, Rng& rng);

  int dim() const { return dim_; }
  const BaseDistribution& base() const { return base_; }
  void set_base(BaseDistribution base);
  ManifoldMap manifold_map() const { return manifold_map_for(base_); }
  const Architecture& architecture() const { return arch_; }
  void set_architecture(Architecture arch) { arch_ = std::move(arch); }

  void add_layer(std::unique_ptr<Layer> layer);
  std::size_t num_layers() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }

  std::size_t num_parameters() const;
  /// Copies of all parameters concatenated in layer order.
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> values);

  /// Data-dependent initialization of every uninitialized ActNorm layer,
  /// propagating `batch` through the chain.
  void initialize_actnorm(const Eigen::MatrixXd& batch);

  ForwardResult forward(const Eigen::MatrixXd& x) const;
  /// Chain inverse from latents (pre-manifold coordinates) to data.
  Eigen::MatrixXd inverse(const Eigen::MatrixXd& z) const;

  /// Latent → support point and its log density-change term.
  std::pair<Eigen::VectorXd, double> map_forward(const Eigen::VectorXd& z) const;
  /// Support point → latent.
  Eigen::VectorXd map_inverse(const Eigen::VectorXd& point) const;
  /// Support points (one per row) → data.
  Eigen::MatrixXd decode(const Eigen::MatrixXd& points) const;

  Eigen::VectorXd log_prob(const Eigen::MatrixXd& x) const;

 private:
  void check_input(const Eigen::MatrixXd& x) const;

  int dim_;
  BaseDistribution base_;
  Architecture arch_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Mean of -log₂ p(x) / d. Quantized mode expects integers in [0, 2^bits),
/// adds uniform dequantization noise, rescales to [0, 1], and accounts for the
/// 2^-bits bin width.
double bits_per_dim(const FlowModel& model, const Eigen::MatrixXd& x,
                    DataKind kind = DataKind::continuous(), std::uint64_t seed = 0);

}  // namespace pnflow
