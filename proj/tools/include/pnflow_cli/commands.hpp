// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pnflow/dataset.hpp"
#include "pnflow/evaluation.hpp"
#include "pnflow/training.hpp"

namespace pnflow::cli {

/// Git blob object id: SHA-1 of "blob <size>\0" followed by the content.
std::string git_blob_sha1(std::span<const std::uint8_t> content);

/// `.csv` paths load as CSV (final column as labels when `csv_labels`);
/// anything else is read as an IDX image file with optional IDX labels.
DatasetHandle load_data_file(const std::string& path, bool csv_labels,
                             const std::optional<std::string>& idx_labels = std::nullopt);

struct TrainOutcome {
  std::string checkpoint_path;
  std::string loss_path;
  std::string manifest_path;
  double base_only_nll = 0.0;
  double final_nll = 0.0;
  std::vector<EpochStats> trace;
};

/// Builds the model described by the config, trains it, and writes
/// checkpoint.sflw, loss.csv, and manifest.json into the output directory.
TrainOutcome cmd_train(const std::string& config_path);

struct SampleOptions {
  std::string checkpoint;
  int n = 0;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::string out;      // default: samples.csv (or .pgm) beside the checkpoint
  int image_width = 0;  // > 0: write a PGM grid of width × (d / width) images
};

/// Draws n base samples at the given temperature and decodes them.
std::string cmd_sample(const SampleOptions& options);

struct InterpolateOptions {
  std::string checkpoint;
  std::string data;
  std::optional<std::string> data_labels;
  bool csv_labels = false;
  int k = 5;
  bool within_class = false;
  std::optional<std::string> rule;
  std::uint64_t seed = 0;
  std::string out_dir;  // default: interpolate/ beside the checkpoint
  int image_width = 0;
};

/// Runs the interpolation protocol on a dataset; writes interpolants.csv,
/// paths.csv, diagnostics.csv and summary.json. Returns the summary path.
std::string cmd_interpolate(const InterpolateOptions& options);

struct EvaluateOptions {
  std::string checkpoint;
  std::string train;
  std::string test;
  bool csv_labels = false;
  std::optional<std::string> train_labels;
  std::optional<std::string> test_labels;
  /// "auto" (identity up to 16 dimensions, else whitened), "identity",
  /// "whitened", or "file:<path>".
  std::string features = "auto";
  int k = 5;
  int quantized_bits = 0;
  std::uint64_t seed = 0;
  std::string out;  // default: report.json beside the checkpoint
};

/// BPD on test and interpolated data, FID/KID of generated and interpolated
/// samples against the training set, and latent norm diagnostics. Writes the
/// report JSON plus a norm-histogram CSV and returns the report path.
std::string cmd_evaluate(const EvaluateOptions& options);

}  // namespace pnflow::cli
