// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "pnflow/errors.hpp"

namespace pnflow::io {

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::string& path, std::span<const std::uint8_t> bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = fs::path(path + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

void write_atomic(const std::string& path, const std::string& text) {
  write_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string encode_pgm_grid(const Eigen::MatrixXd& images, int width, int height, int columns) {
  if (width < 1 || height < 1 || columns < 1) throw DomainError("pgm: sizes must be positive");
  if (images.cols() != static_cast<Eigen::Index>(width) * height) {
    throw DimensionError("pgm: row length does not match width × height");
  }
  const int count = static_cast<int>(images.rows());
  const int cols = std::max(1, std::min(columns, count));
  const int rows = count == 0 ? 0 : (count + cols - 1) / cols;
  const int W = cols * width;
  const int H = rows * height;
  std::string out = "P5\n" + std::to_string(W) + " " + std::to_string(H) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + static_cast<std::size_t>(W) * H, '\0');
  for (int k = 0; k < count; ++k) {
    const int gx = (k % cols) * width;
    const int gy = (k / cols) * height;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double v = std::clamp(images(k, y * width + x), 0.0, 1.0);
        out[header + static_cast<std::size_t>(gy + y) * W + gx + x] =
            static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
    }
  }
  return out;
}

}  // namespace pnflow::io
