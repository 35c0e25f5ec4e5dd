// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "pnflow/dataset.hpp"
#include "pnflow/errors.hpp"
#include "pnflow/special_functions.hpp"

namespace pnflow {

namespace {

void check_feature_sets(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw DimensionError("feature sets differ in dimension");
  if (a.rows() < 2 || b.rows() < 2) throw DomainError("feature sets need at least 2 rows each");
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& mean) {
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
}

// Σ k(x_i, y_j), optionally skipping i == j (x and y then share rows).
double kernel_sum(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const KernelConfig& config,
                  bool skip_diagonal) {
  const double gamma = config.gamma_for(x.cols());
  constexpr Eigen::Index kChunk = 512;
  double total = 0.0;
  for (Eigen::Index start = 0; start < x.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, x.rows() - start);
    Eigen::ArrayXXd k = (gamma * (x.middleRows(start, len) * y.transpose())).array() + config.coef0;
    k = k.pow(config.degree);
    if (skip_diagonal) {
      for (Eigen::Index i = 0; i < len; ++i) k(i, start + i) = 0.0;
    }
    total += k.sum();
  }
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// Features

FeatureExtractor FeatureExtractor::identity() { return {}; }

FeatureExtractor FeatureExtractor::whitened(const Eigen::MatrixXd& reference) {
  if (reference.rows() < 2) throw DomainError("whitening needs at least 2 reference rows");
  FeatureExtractor f;
  f.kind_ = Kind::kWhitened;
  f.offset_ = reference.colwise().mean();
  const Eigen::RowVectorXd var =
      (reference.rowwise() - f.offset_).array().square().colwise().sum() / (reference.rows() - 1.0);
  f.scale_ = var.unaryExpr([](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0; });
  return f;
}

FeatureExtractor FeatureExtractor::from_file(const std::string& path) {
  const DatasetHandle table = load_csv(path, false);
  if (table.data.cols() < 2) throw FormatError(path + ": projection needs weights and a bias column");
  FeatureExtractor f;
  f.kind_ = Kind::kExternalFile;
  f.weights_ = table.data.leftCols(table.data.cols() - 1);
  f.offset_ = table.data.col(table.data.cols() - 1).transpose();
  f.source_ = path;
  return f;
}

std::string FeatureExtractor::name() const {
  switch (kind_) {
    case Kind::kIdentity:
      return "identity";
    case Kind::kWhitened:
      return "whitened-pixels";
    case Kind::kExternalFile:
      return "external-file:" + source_;
  }
  return "unknown";
}

Eigen::MatrixXd FeatureExtractor::extract(const Eigen::MatrixXd& x) const {
  switch (kind_) {
    case Kind::kIdentity:
      return x;
    case Kind::kWhitened:
      if (x.cols() != offset_.size()) throw DimensionError("whitening statistics dimension mismatch");
      return (x.rowwise() - offset_).array().rowwise() * scale_.array();
    case Kind::kExternalFile:
      if (x.cols() != weights_.cols()) throw DimensionError("projection input dimension mismatch");
      return (x * weights_.transpose()).rowwise() + offset_;
  }
  return x;
}

// ---------------------------------------------------------------------------
// FID / KID

double fid_from_statistics(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1,
                           const Eigen::VectorXd& mu2, const Eigen::MatrixXd& sigma2) {
  if (mu1.size() != mu2.size() || sigma1.rows() != mu1.size() || sigma2.rows() != mu2.size()) {
    throw DimensionError("fid: statistics dimension mismatch");
  }
  // Tr((Σ₁Σ₂)^{1/2}) = Tr((Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2}), which keeps everything symmetric.
  const Eigen::MatrixXd root1 = special::matrix_sqrt_psd(sigma1);
  Eigen::MatrixXd inner = root1 * sigma2 * root1;
  inner = 0.5 * (inner + inner.transpose());
  const double cross = special::matrix_sqrt_psd(inner).trace();
  const double value = (mu1 - mu2).squaredNorm() + sigma1.trace() + sigma2.trace() - 2.0 * cross;
  return value < 0.0 && value > -1e-6 ? 0.0 : value;
}

double fid(const Eigen::MatrixXd& ref_features, const Eigen::MatrixXd& gen_features) {
  check_feature_sets(ref_features, gen_features);
  const Eigen::RowVectorXd m1 = ref_features.colwise().mean();
  const Eigen::RowVectorXd m2 = gen_features.colwise().mean();
  return fid_from_statistics(m1.transpose(), covariance(ref_features, m1), m2.transpose(),
                             covariance(gen_features, m2));
}

double KernelConfig::gamma_for(Eigen::Index dim) const {
  return gamma.value_or(1.0 / static_cast<double>(std::max<Eigen::Index>(dim, 1)));
}

double mmd2_unbiased(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const KernelConfig& config) {
  check_feature_sets(x, y);
  const double m = static_cast<double>(x.rows());
  const double n = static_cast<double>(y.rows());
  return kernel_sum(x, x, config, true) / (m * (m - 1.0)) +
         kernel_sum(y, y, config, true) / (n * (n - 1.0)) -
         2.0 * kernel_sum(x, y, config, false) / (m * n);
}

double mmd2_biased(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const KernelConfig& config) {
  if (x.cols() != y.cols()) throw DimensionError("feature sets differ in dimension");
  if (x.rows() < 1 || y.rows() < 1) throw DomainError("feature sets must be nonempty");
  const double m = static_cast<double>(x.rows());
  const double n = static_cast<double>(y.rows());
  return kernel_sum(x, x, config, false) / (m * m) + kernel_sum(y, y, config, false) / (n * n) -
         2.0 * kernel_sum(x, y, config, false) / (m * n);
}

KidResult kid(const Eigen::MatrixXd& ref_features, const Eigen::MatrixXd& gen_features,
              const KernelConfig& config) {
  check_feature_sets(ref_features, gen_features);
  if (config.blocks < 1) throw DomainError("kid: block count must be positive");
  const Eigen::Index m = ref_features.rows();
  const Eigen::Index n = gen_features.rows();
  const int blocks = static_cast<int>(std::max<Eigen::Index>(
      1, std::min<Eigen::Index>({config.blocks, m / 2, n / 2})));

  std::vector<double> estimates;
  estimates.reserve(static_cast<std::size_t>(blocks));
  for (int b = 0; b < blocks; ++b) {
    const Eigen::Index r0 = m * b / blocks, r1 = m * (b + 1) / blocks;
    const Eigen::Index g0 = n * b / blocks, g1 = n * (b + 1) / blocks;
    estimates.push_back(mmd2_unbiased(ref_features.middleRows(r0, r1 - r0),
                                      gen_features.middleRows(g0, g1 - g0), config));
  }
  KidResult out;
  out.blocks = blocks;
  for (double e : estimates) out.value += e;
  out.value /= blocks;
  if (blocks > 1) {
    double var = 0.0;
    for (double e : estimates) var += (e - out.value) * (e - out.value);
    var /= blocks - 1.0;
    out.std_error = std::sqrt(var / blocks);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interpolation protocol

InterpolationSet interpolation_protocol(const FlowModel& model, const LabeledData& data,
                                        const ProtocolOptions& options, Rng& rng) {
  const Eigen::Index n = data.x.rows();
  if (options.interior < 1) throw DomainError("protocol: interior point count must be positive");
  if (n < options.interior) throw DomainError("protocol: need at least as many rows as interior points");
  if (data.x.cols() != model.dim()) throw DimensionError("protocol: data dimension mismatch");
  if (options.within_class && !data.labels) {
    throw ValidationError("protocol: within-class mode requires labels");
  }
  if (data.labels && data.labels->size() != static_cast<std::size_t>(n)) {
    throw DimensionError("protocol: label count does not match rows");
  }

  InterpolationSet out;
  const Eigen::Index num_pairs = n / options.interior;

  // Candidate pools: one per class in within-class mode, else everything.
  std::vector<std::vector<Eigen::Index>> pools;
  if (options.within_class) {
    std::map<int, std::vector<Eigen::Index>> by_label;
    for (Eigen::Index i = 0; i < n; ++i) by_label[(*data.labels)[static_cast<std::size_t>(i)]].push_back(i);
    for (auto& [label, members] : by_label) {
      if (members.size() < 2) {
        out.warnings.push_back("class " + std::to_string(label) + " has fewer than 2 members; skipped");
      } else {
        pools.push_back(std::move(members));
      }
    }
    if (pools.empty()) throw DomainError("protocol: no class has at least 2 members");
  } else {
    if (n < 2) throw DomainError("protocol: need at least 2 rows");
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    pools.push_back(std::move(all));
  }
  // Class pools are weighted by size so the first endpoint is uniform over
  // eligible rows.
  std::vector<double> weights;
  for (const auto& p : pools) weights.push_back(static_cast<double>(p.size()));
  std::discrete_distribution<std::size_t> pick_pool(weights.begin(), weights.end());

  out.samples.resize(num_pairs * options.interior, model.dim());
  for (Eigen::Index p = 0; p < num_pairs; ++p) {
    Eigen::Index a = 0, b = 0;
    constexpr int kMaxAttempts = 1000;
    int attempt = 0;
    for (; attempt < kMaxAttempts; ++attempt) {
      const auto& pool = pools[pick_pool(rng)];
      std::uniform_int_distribution<std::size_t> first(0, pool.size() - 1);
      std::uniform_int_distribution<std::size_t> second(0, pool.size() - 2);
      const std::size_t ia = first(rng);
      std::size_t ib = second(rng);
      if (ib >= ia) ++ib;
      a = pool[ia];
      b = pool[ib];
      if (data.x.row(a) != data.x.row(b)) break;
    }
    if (attempt == kMaxAttempts) throw DegeneratePathError("protocol: could not find distinct endpoints");

    DecodedPath path = data_interpolate(model, data.x.row(a).transpose(), data.x.row(b).transpose(),
                                        options.interior, options.rule);
    out.samples.middleRows(p * options.interior, options.interior) =
        path.decoded.middleRows(1, options.interior);
    out.pairs.emplace_back(a, b);
    out.diagnostics.push_back(path_diagnostics(path.path));
    out.paths.push_back(std::move(path.path));
  }
  return out;
}

std::pair<double, double> bpd_suite(const FlowModel& model, const Eigen::MatrixXd& test_set,
                                    const Eigen::MatrixXd& interpolated_set, DataKind kind,
                                    std::uint64_t seed) {
  if (test_set.rows() == 0 || interpolated_set.rows() == 0) {
    throw DomainError("bpd_suite: sets must be nonempty");
  }
  return {bits_per_dim(model, test_set, kind, seed), bits_per_dim(model, interpolated_set, kind, seed)};
}

// ---------------------------------------------------------------------------
// Norm diagnostics

double NormReference::mean() const { return kind == Kind::kUnit ? 1.0 : static_cast<double>(dof); }
double NormReference::variance() const { return kind == Kind::kUnit ? 0.0 : 2.0 * dof; }

NormHistogram norm_diagnostics(const Eigen::MatrixXd& points, NormReference reference, int bins) {
  if (points.rows() == 0) throw DomainError("norm_diagnostics: no points");
  if (bins < 1) throw DomainError("norm_diagnostics: bin count must be positive");
  NormHistogram h;
  h.reference = reference;
  const Eigen::VectorXd sq = points.rowwise().squaredNorm();
  h.squared_norms.assign(sq.data(), sq.data() + sq.size());
  const double n = static_cast<double>(sq.size());
  h.mean = sq.mean();
  h.variance = sq.size() > 1 ? (sq.array() - h.mean).square().sum() / (n - 1.0) : 0.0;
  const double ref_mean = reference.mean();
  h.relative_deviation = (h.mean - ref_mean) / ref_mean;
  if (reference.kind == NormReference::Kind::kChiSquared) {
    h.z_score = (h.mean - ref_mean) / std::sqrt(reference.variance() / n);
    h.consistent = std::abs(h.z_score) <= 4.0;
  } else {
    h.consistent = std::abs(h.mean - 1.0) <= 1e-8;
  }

  const double lo = sq.minCoeff();
  const double hi = sq.maxCoeff();
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  h.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) h.bin_edges[static_cast<std::size_t>(b)] = lo + b * width;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : h.squared_norms) {
    const auto b = std::min<std::size_t>(static_cast<std::size_t>((v - lo) / width),
                                         static_cast<std::size_t>(bins) - 1);
    ++h.counts[b];
  }
  return h;
}

}  // namespace pnflow
