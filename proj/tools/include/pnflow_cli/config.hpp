// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "pnflow/dataset.hpp"
#include "pnflow/flow_model.hpp"
#include "pnflow/training.hpp"

namespace pnflow::cli {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kArtifactSchemaVersion = 1;

enum class BaseKind { kGaussian, kVmf, kDirichlet };

struct BaseSpec {
  BaseKind kind = BaseKind::kGaussian;
  double kappa_multiplier = 1.0;  // κ = multiplier · d
  double alpha = 2.0;             // symmetric Dirichlet concentration

  BaseDistribution make(int dim) const;
};

/// Flat key-value experiment description. See README for the key list.
struct ExperimentConfig {
  DatasetSpec dataset;
  Architecture architecture;
  BaseSpec base;
  TrainConfig train;
  int quantized_bits = 0;  // 0: continuous data
  std::string output_dir;
  std::uint64_t seed = 0;

  DataKind data_kind() const;
};

/// Parses and validates a config document. Collects every problem (unknown
/// keys, wrong types, out-of-range values, conflicting base keys) and throws
/// one ValidationError listing all of them.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

}  // namespace pnflow::cli
