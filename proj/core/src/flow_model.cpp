// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow/flow_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pnflow/errors.hpp"
#include "pnflow/manifold_maps.hpp"

namespace pnflow {

const char* to_string(ManifoldMap map) {
  switch (map) {
    case ManifoldMap::kNone:
      return "none";
    case ManifoldMap::kSimplex:
      return "simplex";
    case ManifoldMap::kSphere:
      return "sphere";
  }
  return "unknown";
}

ManifoldMap manifold_map_for(const BaseDistribution& base) {
  if (std::holds_alternative<VmfBase>(base)) return ManifoldMap::kSphere;
  if (std::holds_alternative<DirichletBase>(base)) return ManifoldMap::kSimplex;
  return ManifoldMap::kNone;
}

void Architecture::validate() const {
  if (levels < 1 || steps < 0) throw ValidationError("architecture needs levels >= 1 and steps >= 0");
  for (int h : hidden) {
    if (h < 1) throw ValidationError("coupling hidden widths must be positive");
  }
  if (!(log_scale_bound > 0.0)) throw ValidationError("log-scale bound must be positive");
}

FlowModel::FlowModel(int dim, BaseDistribution base) : dim_(dim), base_(std::move(base)) {
  if (dim < 1) throw DomainError("model dimension must be at least 1");
  if (latent_dim(base_) != dim) throw DimensionError("base distribution dimension does not match model");
  arch_.steps = 0;
}

FlowModel::FlowModel(const FlowModel& other)
    : dim_(other.dim_), base_(other.base_), arch_(other.arch_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

FlowModel& FlowModel::operator=(const FlowModel& other) {
  if (this != &other) {
    FlowModel copy(other);
    *this = std::move(copy);
  }
  return *this;
}

FlowModel FlowModel::build(int dim, BaseDistribution base, const Architecture& arch, Rng& rng) {
  arch.validate();
  FlowModel model(dim, std::move(base));
  model.arch_ = arch;
  int parity = 0;
  for (int level = 0; level < arch.levels; ++level) {
    for (int step = 0; step < arch.steps; ++step) {
      model.add_layer(std::make_unique<ActNormLayer>(dim));
      model.add_layer(std::make_unique<PermutationLayer>(PermutationLayer::random(dim, rng)));
      model.add_layer(std::make_unique<AffineCouplingLayer>(
          dim, CouplingMask::alternating(dim, parity), arch.hidden, arch.log_scale_bound, rng));
      parity ^= 1;
    }
  }
  return model;
}

void FlowModel::set_base(BaseDistribution base) {
  if (latent_dim(base) != dim_) throw DimensionError("base distribution dimension does not match model");
  base_ = std::move(base);
}

void FlowModel::add_layer(std::unique_ptr<Layer> layer) {
  if (!layer || layer->dim() != dim_) throw DimensionError("layer dimension does not match model");
  layers_.push_back(std::move(layer));
}

std::size_t FlowModel::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l->parameters().size();
  return n;
}

std::vector<double> FlowModel::flat_parameters() const {
  std::vector<double> out;
  out.reserve(num_parameters());
  for (const auto& l : layers_) {
    const auto p = std::as_const(*l).parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void FlowModel::set_flat_parameters(std::span<const double> values) {
  if (values.size() != num_parameters()) throw DimensionError("parameter vector has the wrong length");
  std::size_t off = 0;
  for (auto& l : layers_) {
    auto p = l->parameters();
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(off),
              values.begin() + static_cast<std::ptrdiff_t>(off + p.size()), p.begin());
    off += p.size();
  }
}

void FlowModel::initialize_actnorm(const Eigen::MatrixXd& batch) {
  check_input(batch);
  Eigen::MatrixXd h = batch;
  Eigen::VectorXd scratch = Eigen::VectorXd::Zero(batch.rows());
  for (auto& l : layers_) {
    if (auto* act = dynamic_cast<ActNormLayer*>(l.get()); act && !act->initialized()) {
      act->initialize_from(h);
    }
    h = l->forward(h, scratch);
  }
}

void FlowModel::check_input(const Eigen::MatrixXd& x) const {
  if (x.cols() != dim_) {
    throw DimensionError("input has " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(dim_));
  }
}

std::pair<Eigen::VectorXd, double> FlowModel::map_forward(const Eigen::VectorXd& z) const {
  switch (manifold_map()) {
    case ManifoldMap::kSimplex: {
      auto r = simplex_forward(z);
      return {std::move(r.point), r.log_det};
    }
    case ManifoldMap::kSphere: {
      auto r = sphere_forward(z);
      return {std::move(r.point), r.log_det};
    }
    case ManifoldMap::kNone:
      break;
  }
  return {z, 0.0};
}

Eigen::VectorXd FlowModel::map_inverse(const Eigen::VectorXd& point) const {
  switch (manifold_map()) {
    case ManifoldMap::kSimplex:
      return simplex_inverse(point);
    case ManifoldMap::kSphere:
      return sphere_inverse(point);
    case ManifoldMap::kNone:
      break;
  }
  if (point.size() != dim_) throw DimensionError("latent has the wrong dimension");
  return point;
}

ForwardResult FlowModel::forward(const Eigen::MatrixXd& x) const {
  check_input(x);
  ForwardResult out;
  out.log_det = Eigen::VectorXd::Zero(x.rows());
  Eigen::MatrixXd h = x;
  for (const auto& l : layers_) h = l->forward(h, out.log_det);
  out.latent = std::move(h);
  if (manifold_map() == ManifoldMap::kNone) {
    out.points = out.latent;
    return out;
  }
  out.points.resize(x.rows(), dim_ + 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd z = out.latent.row(i).transpose();
    if (manifold_map() == ManifoldMap::kSimplex) {
      auto r = simplex_forward(z);
      out.points.row(i) = r.point.transpose();
      out.log_det[i] += r.log_det;
      out.simplex_underflow = out.simplex_underflow || r.remainder_underflow;
    } else {
      auto r = sphere_forward(z);
      out.points.row(i) = r.point.transpose();
      out.log_det[i] += r.log_det;
    }
  }
  return out;
}

Eigen::MatrixXd FlowModel::inverse(const Eigen::MatrixXd& z) const {
  check_input(z);
  Eigen::MatrixXd h = z;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) h = (*it)->inverse(h);
  return h;
}

Eigen::MatrixXd FlowModel::decode(const Eigen::MatrixXd& points) const {
  if (points.cols() != ambient_dim(base_)) throw DimensionError("support points have the wrong width");
  Eigen::MatrixXd z(points.rows(), dim_);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    z.row(i) = map_inverse(points.row(i).transpose()).transpose();
  }
  return inverse(z);
}

Eigen::VectorXd FlowModel::log_prob(const Eigen::MatrixXd& x) const {
  ForwardResult f = forward(x);
  Eigen::VectorXd lp(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    lp[i] = log_density(base_, f.points.row(i).transpose()) + f.log_det[i];
  }
  return lp;
}

double bits_per_dim(const FlowModel& model, const Eigen::MatrixXd& x, DataKind kind,
                    std::uint64_t seed) {
  if (x.rows() == 0) throw DomainError("bits_per_dim: empty batch");
  const double d = model.dim();
  if (kind.mode == DataKind::Mode::kContinuous) {
    return -model.log_prob(x).mean() / (d * std::numbers::ln2);
  }
  if (kind.bit_depth < 1 || kind.bit_depth > 16) throw DomainError("bits_per_dim: bit depth out of range");
  const double bins = std::ldexp(1.0, kind.bit_depth);
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd u(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double v = x(i, j);
      if (v != std::floor(v) || v < 0.0 || v >= bins) {
        throw DomainError("bits_per_dim: quantized input must be integers in [0, 2^bits)");
      }
      u(i, j) = (v + unif(rng)) / bins;
    }
  }
  return -model.log_prob(u).mean() / (d * std::numbers::ln2) + kind.bit_depth;
}

}  // namespace pnflow
