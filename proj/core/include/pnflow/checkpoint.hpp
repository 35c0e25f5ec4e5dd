// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pnflow/flow_model.hpp"

namespace pnflow {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout, all integers and floats little-endian:
//   "SFLW" | u32 version | u32 dim
//   base:   u8 tag (0 gaussian, 1 vmf, 2 dirichlet) | u32 count | f64 × count
//           (gaussian: scale; vmf: kappa, mu; dirichlet: alpha)
//   arch:   u32 levels | u32 steps | u32 n | u32 hidden × n | f64 log-scale bound
//   layers: u32 count, then per layer
//           u8 kind | u32 n | u32 metadata × n | u32 n | f64 hyper × n |
//           u32 shapes, each u32 rank | u32 extent × rank
//   u64 payload length | f64 × length
//   u32 CRC-32 of every preceding byte
std::vector<std::uint8_t> serialize_checkpoint(const FlowModel& model);

/// Throws FormatError (with a byte offset where one applies) on a bad magic,
/// unknown version, CRC mismatch, truncation, or manifest/payload mismatch.
FlowModel deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::string& path, const FlowModel& model);
FlowModel load_checkpoint(const std::string& path);

}  // namespace pnflow
