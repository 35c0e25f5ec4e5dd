// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pnflow::io {

std::vector<std::uint8_t> read_bytes(const std::string& path);
std::string read_text(const std::string& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const std::string& path, std::span<const std::uint8_t> bytes);
void write_atomic(const std::string& path, const std::string& text);

/// Binary PGM (P5). Rows of `images` are width·height pixels in [0, 1],
/// tiled into a grid `columns` images wide.
std::string encode_pgm_grid(const Eigen::MatrixXd& images, int width, int height, int columns);

}  // namespace pnflow::io
