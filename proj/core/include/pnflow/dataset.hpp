// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pnflow {

struct DatasetHandle {
  Eigen::MatrixXd data;  // n × d, finite
  std::optional<std::vector<int>> labels;
  std::string provenance;
  double min_value = 0.0;
  double max_value = 0.0;

  Eigen::Index size() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

/// CSV text: comma-separated floats, one row per line. A first line that does
/// not parse as numbers is treated as a header. With `labels`, the final
/// column is read as an integer class label. NaN or malformed fields raise
/// ParseError carrying the 1-based line number.
DatasetHandle parse_csv(const std::string& text, bool labels, const std::string& provenance = "csv");
DatasetHandle load_csv(const std::string& path, bool labels);

/// IDX image file (magic 0x00000803, unsigned bytes), flattened per item and
/// scaled by 1/255. Errors report the offending byte offset.
Eigen::MatrixXd parse_idx_images(std::span<const std::uint8_t> bytes);
/// IDX label file (magic 0x00000801).
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);
DatasetHandle load_idx(const std::string& images_path, const std::optional<std::string>& labels_path);

/// Two interleaved half circles with Gaussian noise, labelled 0 and 1.
DatasetHandle two_moons(std::size_t n, double noise, std::uint64_t seed);
/// Concentric circles, points assigned to radii in turn; label = ring index.
DatasetHandle rings(std::size_t n, const std::vector<double>& radii, double noise, std::uint64_t seed);
/// Isotropic Gaussian blobs around `centers` (one row each); label = component.
DatasetHandle gaussian_mixture(std::size_t n, const Eigen::MatrixXd& centers, double stddev,
                               std::uint64_t seed);

struct DatasetSpec {
  enum class Source { kBuiltin, kCsv, kIdx };
  Source source = Source::kBuiltin;
  /// Builtin name ("two_moons", "rings", "gaussian_mixture") or file path.
  std::string name = "two_moons";
  std::optional<std::string> labels_path;  // IDX labels
  bool csv_labels = false;
  std::size_t n = 2000;
  double noise = 0.05;
  std::vector<double> radii = {1.0, 2.0};
  Eigen::MatrixXd centers;  // empty → four centers on the unit square corners
  std::uint64_t seed = 0;
};

DatasetHandle load_dataset(const DatasetSpec& spec);

}  // namespace pnflow
