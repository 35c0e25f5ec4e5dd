// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pnflow/flow_model.hpp"
#include "pnflow/interpolation.hpp"

namespace pnflow {

/// Deterministic feature map applied before FID/KID. Stands in for Inception
/// features, so scores are only comparable with each other.
class FeatureExtractor {
 public:
  enum class Kind { kIdentity, kWhitened, kExternalFile };

  static FeatureExtractor identity();
  /// Per-coordinate standardization with statistics of `reference`.
  static FeatureExtractor whitened(const Eigen::MatrixXd& reference);
  /// Affine projection read from a CSV file: each row is one output feature,
  /// holding input_dim weights followed by a bias.
  static FeatureExtractor from_file(const std::string& path);

  Kind kind() const { return kind_; }
  std::string name() const;
  Eigen::MatrixXd extract(const Eigen::MatrixXd& x) const;

 private:
  Kind kind_ = Kind::kIdentity;
  Eigen::RowVectorXd offset_;
  Eigen::RowVectorXd scale_;
  Eigen::MatrixXd weights_;
  std::string source_;
};

/// Fréchet distance between Gaussians fitted to the rows (unbiased covariance).
double fid(const Eigen::MatrixXd& ref_features, const Eigen::MatrixXd& gen_features);
double fid_from_statistics(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1,
                           const Eigen::VectorXd& mu2, const Eigen::MatrixXd& sigma2);

/// Polynomial kernel k(x, y) = (γ xᵀy + c₀)^degree, γ defaulting to 1/d_feat.
struct KernelConfig {
  int degree = 3;
  std::optional<double> gamma;
  double coef0 = 1.0;
  int blocks = 10;

  double gamma_for(Eigen::Index dim) const;
};

double mmd2_unbiased(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const KernelConfig& config = {});
double mmd2_biased(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const KernelConfig& config = {});

struct KidResult {
  double value = 0.0;
  double std_error = 0.0;
  int blocks = 0;
};

/// Unbiased MMD² averaged over disjoint blocks; the standard error is the
/// spread of the block estimates. Sets too small for two rows per block use
/// fewer blocks (one block: stderr 0).
KidResult kid(const Eigen::MatrixXd& ref_features, const Eigen::MatrixXd& gen_features,
              const KernelConfig& config = {});

struct LabeledData {
  Eigen::MatrixXd x;
  std::optional<std::vector<int>> labels;
};

struct ProtocolOptions {
  int interior = 5;
  bool within_class = true;
  std::optional<InterpolationRule> rule;
};

struct InterpolationSet {
  Eigen::MatrixXd samples;  // pairs × interior rows, endpoints excluded
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  std::vector<InterpolationPath> paths;  // base-support paths including endpoints
  std::vector<PathDiagnostics> diagnostics;
  std::vector<std::string> warnings;
};

/// Draws ⌊n / interior⌋ endpoint pairs from the data and decodes `interior`
/// equally spaced interpolants per pair. Within-class pairs share a label;
/// classes with fewer than two members are skipped with a warning.
InterpolationSet interpolation_protocol(const FlowModel& model, const LabeledData& data,
                                        const ProtocolOptions& options, Rng& rng);

/// (BPD on the test set, BPD on interpolated samples).
std::pair<double, double> bpd_suite(const FlowModel& model, const Eigen::MatrixXd& test_set,
                                    const Eigen::MatrixXd& interpolated_set,
                                    DataKind kind = DataKind::continuous(), std::uint64_t seed = 0);

struct NormReference {
  enum class Kind { kChiSquared, kUnit };
  Kind kind = Kind::kChiSquared;
  int dof = 1;

  static NormReference chi_squared(int d) { return {Kind::kChiSquared, d}; }
  static NormReference unit() { return {Kind::kUnit, 0}; }
  double mean() const;
  double variance() const;
};

struct NormHistogram {
  std::vector<double> squared_norms;
  NormReference reference;
  double mean = 0.0;
  double variance = 0.0;
  /// (mean - reference mean) / sqrt(reference variance / n); 0 for the unit reference.
  double z_score = 0.0;
  double relative_deviation = 0.0;
  /// Mean agrees with the reference: |z| ≤ 4 (χ²) or |mean - 1| ≤ 1e-8 (unit).
  bool consistent = false;
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
};

NormHistogram norm_diagnostics(const Eigen::MatrixXd& points, NormReference reference, int bins = 50);

struct MetricReport {
  std::string label;
  double bpd = 0.0;
  double fid = 0.0;
  double kid = 0.0;
  double kid_stderr = 0.0;
  std::size_t reference_count = 0;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  std::string feature_kind;
};

}  // namespace pnflow
