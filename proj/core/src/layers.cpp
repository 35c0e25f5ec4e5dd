// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pnflow/errors.hpp"

namespace pnflow {

namespace {

using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

void check_cols(const Eigen::MatrixXd& m, int dim, const char* who) {
  if (m.cols() != dim) {
    throw DimensionError(std::string(who) + ": expected " + std::to_string(dim) + " columns, got " +
                         std::to_string(m.cols()));
  }
}

std::vector<Eigen::Index> as_index(const std::vector<std::uint32_t>& idx) {
  return {idx.begin(), idx.end()};
}

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kActNorm:
      return "actnorm";
    case LayerKind::kPermutation:
      return "permutation";
    case LayerKind::kAffineCoupling:
      return "affine_coupling";
  }
  return "unknown";
}

Layer::Layer(int dim, std::size_t num_params) : dim_(dim), params_(num_params, 0.0) {
  if (dim < 1) throw DomainError("layer dimension must be at least 1");
}

// ---------------------------------------------------------------------------
// ActNorm

ActNormLayer::ActNormLayer(int dim) : Layer(dim, 2 * static_cast<std::size_t>(dim)) {
  std::fill(params_.begin(), params_.begin() + dim, 1.0);
}

ActNormLayer::ActNormLayer(int dim, const Eigen::VectorXd& scale, const Eigen::VectorXd& bias)
    : Layer(dim, 2 * static_cast<std::size_t>(dim)) {
  if (scale.size() != dim || bias.size() != dim) throw DimensionError("actnorm: parameter size mismatch");
  if ((scale.array() == 0.0).any()) throw DomainError("actnorm: scale must be nonzero");
  VecMap(params_.data(), dim) = scale;
  VecMap(params_.data() + dim, dim) = bias;
  initialized_ = true;
}

Eigen::Map<const Eigen::VectorXd> ActNormLayer::scale() const { return {params_.data(), dim_}; }
Eigen::Map<const Eigen::VectorXd> ActNormLayer::bias() const { return {params_.data() + dim_, dim_}; }

Eigen::MatrixXd ActNormLayer::forward(const Eigen::MatrixXd& x, Eigen::VectorXd& log_det) const {
  check_cols(x, dim_, "actnorm");
  log_det.array() += scale().array().abs().log().sum();
  return (x.array().rowwise() * scale().transpose().array()).rowwise() + bias().transpose().array();
}

Eigen::MatrixXd ActNormLayer::inverse(const Eigen::MatrixXd& y) const {
  check_cols(y, dim_, "actnorm");
  return (y.array().rowwise() - bias().transpose().array()).rowwise() / scale().transpose().array();
}

Eigen::MatrixXd ActNormLayer::backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad_y,
                                       const Eigen::VectorXd& grad_log_det,
                                       std::span<double> param_grad) const {
  VecMap g_scale(param_grad.data(), dim_);
  VecMap g_bias(param_grad.data() + dim_, dim_);
  g_scale += (grad_y.array() * x.array()).colwise().sum().matrix().transpose();
  g_scale += grad_log_det.sum() * scale().cwiseInverse();
  g_bias += grad_y.colwise().sum().transpose();
  return grad_y.array().rowwise() * scale().transpose().array();
}

std::vector<Shape> ActNormLayer::parameter_shapes() const {
  const auto d = static_cast<std::uint32_t>(dim_);
  return {{d}, {d}};
}

std::vector<std::uint32_t> ActNormLayer::metadata() const { return {initialized_ ? 1u : 0u}; }

void ActNormLayer::initialize_from(const Eigen::MatrixXd& batch) {
  check_cols(batch, dim_, "actnorm");
  if (batch.rows() == 0) throw DomainError("actnorm: cannot initialize from an empty batch");
  const Eigen::RowVectorXd mean = batch.colwise().mean();
  const Eigen::RowVectorXd var =
      (batch.rowwise() - mean).array().square().colwise().mean().matrix();
  for (int j = 0; j < dim_; ++j) {
    const double sd = std::sqrt(var[j]);
    const double s = sd > 1e-6 ? 1.0 / sd : 1.0;
    params_[j] = s;
    params_[dim_ + j] = -mean[j] * s;
  }
  initialized_ = true;
}

// ---------------------------------------------------------------------------
// Permutation

PermutationLayer::PermutationLayer(std::vector<std::uint32_t> perm)
    : Layer(static_cast<int>(perm.size()), 0), perm_(std::move(perm)), inv_(perm_.size()) {
  std::vector<bool> seen(perm_.size(), false);
  for (std::size_t i = 0; i < perm_.size(); ++i) {
    if (perm_[i] >= perm_.size() || seen[perm_[i]]) {
      throw DomainError("permutation: not a bijection on {0, ..., d-1}");
    }
    seen[perm_[i]] = true;
    inv_[perm_[i]] = static_cast<std::uint32_t>(i);
  }
}

PermutationLayer PermutationLayer::random(int dim, Rng& rng) {
  if (dim < 1) throw DomainError("layer dimension must be at least 1");
  std::vector<std::uint32_t> perm(static_cast<std::size_t>(dim));
  std::iota(perm.begin(), perm.end(), 0u);
  // Fisher-Yates with explicit draws so the result does not depend on the
  // standard library's shuffle.
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  return PermutationLayer(std::move(perm));
}

PermutationLayer PermutationLayer::inverted() const { return PermutationLayer(inv_); }

Eigen::MatrixXd PermutationLayer::forward(const Eigen::MatrixXd& x, Eigen::VectorXd&) const {
  check_cols(x, dim_, "permutation");
  return x(Eigen::all, as_index(perm_));
}

Eigen::MatrixXd PermutationLayer::inverse(const Eigen::MatrixXd& y) const {
  check_cols(y, dim_, "permutation");
  return y(Eigen::all, as_index(inv_));
}

Eigen::MatrixXd PermutationLayer::backward(const Eigen::MatrixXd&, const Eigen::MatrixXd& grad_y,
                                           const Eigen::VectorXd&, std::span<double>) const {
  return grad_y(Eigen::all, as_index(inv_));
}

// ---------------------------------------------------------------------------
// Coupling

CouplingMask CouplingMask::alternating(int dim, int parity) {
  CouplingMask mask;
  if (dim == 1) {
    mask.transformed = {0};
    return mask;
  }
  for (int i = 0; i < dim; ++i) {
    (i % 2 == parity % 2 ? mask.identity : mask.transformed).push_back(static_cast<std::uint32_t>(i));
  }
  return mask;
}

void CouplingMask::validate(int dim) const {
  std::vector<int> count(static_cast<std::size_t>(dim), 0);
  for (auto i : identity) {
    if (i >= static_cast<std::uint32_t>(dim)) throw DomainError("coupling mask index out of range");
    ++count[i];
  }
  for (auto i : transformed) {
    if (i >= static_cast<std::uint32_t>(dim)) throw DomainError("coupling mask index out of range");
    ++count[i];
  }
  if (std::any_of(count.begin(), count.end(), [](int c) { return c != 1; })) {
    throw DomainError("coupling mask must partition the coordinates");
  }
  if (transformed.empty()) throw DomainError("coupling mask transforms no coordinates");
}

CouplingNet::CouplingNet(int in, std::vector<int> hidden, int out)
    : in_(in), hidden_(std::move(hidden)), out_(out) {
  if (in < 0 || out < 1) throw DomainError("coupling net: invalid input/output width");
  for (int h : hidden_) {
    if (h < 1) throw DomainError("coupling net: hidden widths must be positive");
  }
}

std::vector<int> CouplingNet::widths() const {
  std::vector<int> w;
  w.push_back(in_);
  w.insert(w.end(), hidden_.begin(), hidden_.end());
  w.push_back(out_);
  return w;
}

std::size_t CouplingNet::num_params() const {
  const auto w = widths();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) n += static_cast<std::size_t>(w[l + 1]) * (w[l] + 1);
  return n;
}

std::vector<Shape> CouplingNet::shapes() const {
  const auto w = widths();
  std::vector<Shape> s;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    s.push_back({static_cast<std::uint32_t>(w[l + 1]), static_cast<std::uint32_t>(w[l])});
    s.push_back({static_cast<std::uint32_t>(w[l + 1])});
  }
  return s;
}

void CouplingNet::initialize(std::span<double> params, Rng& rng) const {
  const auto w = widths();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const std::size_t nw = static_cast<std::size_t>(w[l + 1]) * w[l];
    const bool last = l + 2 == w.size();
    const double limit = w[l] > 0 ? std::sqrt(6.0 / (w[l] + w[l + 1])) : 0.0;
    std::uniform_real_distribution<double> unif(-limit, limit);
    for (std::size_t i = 0; i < nw; ++i) params[off + i] = last ? 0.0 : unif(rng);
    off += nw;
    for (int i = 0; i < w[l + 1]; ++i) params[off + i] = 0.0;
    off += static_cast<std::size_t>(w[l + 1]);
  }
}

Eigen::MatrixXd CouplingNet::forward(std::span<const double> params,
                                     const Eigen::MatrixXd& input) const {
  const auto w = widths();
  Eigen::MatrixXd h = input;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    ConstMatMap weight(params.data() + off, w[l + 1], w[l]);
    off += static_cast<std::size_t>(w[l + 1]) * w[l];
    ConstVecMap bias(params.data() + off, w[l + 1]);
    off += static_cast<std::size_t>(w[l + 1]);
    Eigen::MatrixXd z = (h * weight.transpose()).rowwise() + bias.transpose();
    h = (l + 2 == w.size()) ? std::move(z) : Eigen::MatrixXd(z.array().tanh());
  }
  return h;
}

Eigen::MatrixXd CouplingNet::backward(std::span<const double> params, const Eigen::MatrixXd& input,
                                      const Eigen::MatrixXd& grad_out,
                                      std::span<double> grad_params) const {
  const auto w = widths();
  const std::size_t layers = w.size() - 1;
  std::vector<std::size_t> offsets(layers);
  std::vector<Eigen::MatrixXd> acts;  // acts[l] is the input to dense layer l
  acts.reserve(layers);
  acts.push_back(input);
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    ConstMatMap weight(params.data() + off, w[l + 1], w[l]);
    ConstVecMap bias(params.data() + off + static_cast<std::size_t>(w[l + 1]) * w[l], w[l + 1]);
    off += static_cast<std::size_t>(w[l + 1]) * (w[l] + 1);
    if (l + 1 < layers) {
      acts.emplace_back(((acts[l] * weight.transpose()).rowwise() + bias.transpose()).array().tanh());
    }
  }

  Eigen::MatrixXd g = grad_out;
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) g.array() *= 1.0 - acts[l + 1].array().square();
    ConstMatMap weight(params.data() + offsets[l], w[l + 1], w[l]);
    MatMap g_weight(grad_params.data() + offsets[l], w[l + 1], w[l]);
    VecMap g_bias(grad_params.data() + offsets[l] + static_cast<std::size_t>(w[l + 1]) * w[l],
                  w[l + 1]);
    g_weight += g.transpose() * acts[l];
    g_bias += g.colwise().sum().transpose();
    g = g * weight;
  }
  return g;
}

AffineCouplingLayer::AffineCouplingLayer(int dim, CouplingMask mask, std::vector<int> hidden,
                                         double log_scale_bound)
    : Layer(dim, 0),
      mask_(std::move(mask)),
      net_(static_cast<int>(mask_.identity.size()), std::move(hidden),
           2 * static_cast<int>(mask_.transformed.size())),
      bound_(log_scale_bound) {
  mask_.validate(dim);
  if (!(log_scale_bound > 0.0)) throw DomainError("coupling: log-scale bound must be positive");
  params_.assign(net_.num_params(), 0.0);
}

AffineCouplingLayer::AffineCouplingLayer(int dim, CouplingMask mask, std::vector<int> hidden,
                                         double log_scale_bound, Rng& rng)
    : AffineCouplingLayer(dim, std::move(mask), std::move(hidden), log_scale_bound) {
  net_.initialize(params_, rng);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> AffineCouplingLayer::scale_and_shift(
    const Eigen::MatrixXd& x) const {
  const Eigen::Index t = static_cast<Eigen::Index>(mask_.transformed.size());
  const Eigen::MatrixXd out = net_.forward(params_, x(Eigen::all, as_index(mask_.identity)));
  Eigen::MatrixXd log_scale = bound_ * (out.leftCols(t).array() / bound_).tanh();
  return {std::move(log_scale), out.rightCols(t)};
}

Eigen::MatrixXd AffineCouplingLayer::forward(const Eigen::MatrixXd& x, Eigen::VectorXd& log_det) const {
  check_cols(x, dim_, "affine_coupling");
  const auto [log_scale, shift] = scale_and_shift(x);
  const auto tr = as_index(mask_.transformed);
  Eigen::MatrixXd y = x;
  y(Eigen::all, tr) = (x(Eigen::all, tr).array() * log_scale.array().exp() + shift.array()).matrix();
  log_det += log_scale.rowwise().sum();
  return y;
}

Eigen::MatrixXd AffineCouplingLayer::inverse(const Eigen::MatrixXd& y) const {
  check_cols(y, dim_, "affine_coupling");
  // The pass-through half is unchanged, so the network sees the same input.
  const auto [log_scale, shift] = scale_and_shift(y);
  const auto tr = as_index(mask_.transformed);
  Eigen::MatrixXd x = y;
  x(Eigen::all, tr) = ((y(Eigen::all, tr).array() - shift.array()) * (-log_scale.array()).exp()).matrix();
  return x;
}

Eigen::MatrixXd AffineCouplingLayer::backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad_y,
                                              const Eigen::VectorXd& grad_log_det,
                                              std::span<double> param_grad) const {
  const Eigen::Index t = static_cast<Eigen::Index>(mask_.transformed.size());
  const auto id = as_index(mask_.identity);
  const auto tr = as_index(mask_.transformed);
  const Eigen::MatrixXd x_id = x(Eigen::all, id);
  const Eigen::MatrixXd out = net_.forward(params_, x_id);
  const Eigen::ArrayXXd th = (out.leftCols(t).array() / bound_).tanh();
  const Eigen::ArrayXXd scale = (bound_ * th).exp();
  const Eigen::ArrayXXd gy_t = grad_y(Eigen::all, tr).array();

  Eigen::MatrixXd grad_out(x.rows(), 2 * t);
  const Eigen::ArrayXXd g_log_scale =
      (gy_t * x(Eigen::all, tr).array() * scale).colwise() + grad_log_det.array();
  grad_out.leftCols(t) = (g_log_scale * (1.0 - th.square())).matrix();
  grad_out.rightCols(t) = gy_t.matrix();

  const Eigen::MatrixXd g_in = net_.backward(params_, x_id, grad_out, param_grad);
  Eigen::MatrixXd grad_x(x.rows(), dim_);
  grad_x(Eigen::all, tr) = (gy_t * scale).matrix();
  grad_x(Eigen::all, id) = grad_y(Eigen::all, id) + g_in;
  return grad_x;
}

std::vector<std::uint32_t> AffineCouplingLayer::metadata() const {
  std::vector<std::uint32_t> meta;
  meta.push_back(static_cast<std::uint32_t>(mask_.identity.size()));
  meta.insert(meta.end(), mask_.identity.begin(), mask_.identity.end());
  meta.push_back(static_cast<std::uint32_t>(mask_.transformed.size()));
  meta.insert(meta.end(), mask_.transformed.begin(), mask_.transformed.end());
  meta.push_back(static_cast<std::uint32_t>(net_.hidden().size()));
  for (int h : net_.hidden()) meta.push_back(static_cast<std::uint32_t>(h));
  return meta;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Layer> make_layer(LayerKind kind, int dim, const std::vector<std::uint32_t>& metadata,
                                  const std::vector<double>& hyperparameters,
                                  std::span<const double> params) {
  std::unique_ptr<Layer> layer;
  switch (kind) {
    case LayerKind::kActNorm: {
      auto act = std::make_unique<ActNormLayer>(dim);
      act->set_initialized(!metadata.empty() && metadata[0] != 0);
      layer = std::move(act);
      break;
    }
    case LayerKind::kPermutation:
      if (metadata.size() != static_cast<std::size_t>(dim)) {
        throw FormatError("permutation manifest has the wrong length");
      }
      layer = std::make_unique<PermutationLayer>(metadata);
      break;
    case LayerKind::kAffineCoupling: {
      std::size_t pos = 0;
      auto read_list = [&]() {
        if (pos >= metadata.size()) throw FormatError("coupling manifest is truncated");
        const std::size_t n = metadata[pos++];
        if (pos + n > metadata.size()) throw FormatError("coupling manifest is truncated");
        std::vector<std::uint32_t> v(metadata.begin() + static_cast<std::ptrdiff_t>(pos),
                                     metadata.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
        return v;
      };
      CouplingMask mask;
      mask.identity = read_list();
      mask.transformed = read_list();
      const auto hidden_u = read_list();
      if (pos != metadata.size()) throw FormatError("coupling manifest has trailing entries");
      if (hyperparameters.size() != 1) throw FormatError("coupling manifest needs one hyperparameter");
      std::vector<int> hidden(hidden_u.begin(), hidden_u.end());
      layer = std::make_unique<AffineCouplingLayer>(dim, std::move(mask), std::move(hidden),
                                                    hyperparameters[0]);
      break;
    }
    default:
      throw FormatError("unknown layer type tag " + std::to_string(static_cast<int>(kind)));
  }
  if (params.size() != layer->parameters().size()) {
    throw FormatError("parameter payload does not match the layer manifest");
  }
  std::copy(params.begin(), params.end(), layer->parameters().begin());
  if (kind == LayerKind::kActNorm) {
    const auto& act = static_cast<const ActNormLayer&>(*layer);
    if ((act.scale().array() == 0.0).any()) throw FormatError("actnorm scale must be nonzero");
  }
  return layer;
}

}  // namespace pnflow
