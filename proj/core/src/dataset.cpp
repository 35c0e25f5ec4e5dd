// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow/dataset.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pnflow/base_distributions.hpp"
#include "pnflow/errors.hpp"
#include "pnflow/io.hpp"

namespace pnflow {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    out.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// from_chars accepts "nan" and "inf"; both are reported by the caller.
bool parse_double(std::string_view f, double& out) {
  if (!f.empty() && f.front() == '+') f.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
  return ec == std::errc() && ptr == f.data() + f.size() && !f.empty();
}

void fill_range(DatasetHandle& h) {
  if (h.data.size() > 0) {
    h.min_value = h.data.minCoeff();
    h.max_value = h.data.maxCoeff();
  }
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) {
    throw FormatError("idx: truncated header at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

// Validates magic and payload size; returns the dimension list.
std::vector<std::uint32_t> read_idx_header(std::span<const std::uint8_t> bytes, std::uint32_t magic) {
  const std::uint32_t got = read_be32(bytes, 0);
  if (got != magic) {
    std::ostringstream msg;
    msg << "idx: bad magic 0x" << std::hex << got << " at byte offset 0 (expected 0x" << magic << ")";
    throw FormatError(msg.str());
  }
  const std::size_t ndims = magic & 0xffu;
  std::vector<std::uint32_t> dims;
  std::uint64_t total = 1;
  for (std::size_t k = 0; k < ndims; ++k) {
    dims.push_back(read_be32(bytes, 4 + 4 * k));
    total *= dims.back();
  }
  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() - header != total) {
    throw FormatError("idx: payload starting at byte offset " + std::to_string(header) + " holds " +
                      std::to_string(bytes.size() - header) + " bytes, header declares " +
                      std::to_string(total));
  }
  return dims;
}

}  // namespace

DatasetHandle parse_csv(const std::string& text, bool labels, const std::string& provenance) {
  std::vector<std::vector<double>> rows;
  std::vector<int> label_values;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size(); ++k) numeric = numeric && parse_double(fields[k], values[k]);
    if (first_content) {
      first_content = false;
      if (!numeric) continue;  // header
    }
    if (!numeric) throw ParseError("csv: non-numeric field on line " + std::to_string(line_no), line_no);
    for (double v : values) {
      if (!std::isfinite(v)) throw ParseError("csv: NaN or infinite value on line " + std::to_string(line_no), line_no);
    }
    if (width == 0) width = values.size();
    if (values.size() != width) {
      throw ParseError("csv: line " + std::to_string(line_no) + " has " + std::to_string(values.size()) +
                           " fields, expected " + std::to_string(width),
                       line_no);
    }
    if (labels) {
      if (width < 2) throw ParseError("csv: label column leaves no features", line_no);
      const double lab = values.back();
      if (lab != std::floor(lab)) {
        throw ParseError("csv: non-integer label on line " + std::to_string(line_no), line_no);
      }
      label_values.push_back(static_cast<int>(lab));
      values.pop_back();
    }
    rows.push_back(std::move(values));
  }

  if (rows.empty()) throw FormatError("csv: no data rows in " + provenance);
  DatasetHandle h;
  h.provenance = provenance;
  const std::size_t d = rows.front().size();
  h.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) h.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  if (labels) h.labels = std::move(label_values);
  fill_range(h);
  return h;
}

DatasetHandle load_csv(const std::string& path, bool labels) {
  return parse_csv(io::read_text(path), labels, "csv:" + path);
}

Eigen::MatrixXd parse_idx_images(std::span<const std::uint8_t> bytes) {
  const auto dims = read_idx_header(bytes, 0x00000803u);
  const Eigen::Index n = dims[0];
  const Eigen::Index d = static_cast<Eigen::Index>(dims[1]) * dims[2];
  const std::size_t header = 16;
  Eigen::MatrixXd out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out(i, j) = bytes[header + static_cast<std::size_t>(i * d + j)] / 255.0;
    }
  }
  return out;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  const auto dims = read_idx_header(bytes, 0x00000801u);
  return {bytes.begin() + 8, bytes.begin() + 8 + dims[0]};
}

DatasetHandle load_idx(const std::string& images_path, const std::optional<std::string>& labels_path) {
  DatasetHandle h;
  h.data = parse_idx_images(io::read_bytes(images_path));
  h.provenance = "idx:" + images_path;
  if (labels_path) {
    auto labels = parse_idx_labels(io::read_bytes(*labels_path));
    if (labels.size() != static_cast<std::size_t>(h.data.rows())) {
      throw FormatError("idx: label count " + std::to_string(labels.size()) + " does not match image count " +
                        std::to_string(h.data.rows()));
    }
    h.labels = std::move(labels);
  }
  fill_range(h);
  return h;
}

DatasetHandle two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (noise < 0.0) throw DomainError("two_moons: noise must be nonnegative");
  Rng rng(seed);
  const std::size_t n_outer = n / 2;
  const std::size_t n_inner = n - n_outer;
  DatasetHandle h;
  h.data.resize(static_cast<Eigen::Index>(n), 2);
  h.labels.emplace(n);
  auto angle = [](std::size_t i, std::size_t count) {
    return count > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
  };
  for (std::size_t i = 0; i < n_outer; ++i) {
    const double t = angle(i, n_outer);
    h.data.row(static_cast<Eigen::Index>(i)) << std::cos(t), std::sin(t);
    (*h.labels)[i] = 0;
  }
  for (std::size_t i = 0; i < n_inner; ++i) {
    const double t = angle(i, n_inner);
    h.data.row(static_cast<Eigen::Index>(n_outer + i)) << 1.0 - std::cos(t), 0.5 - std::sin(t);
    (*h.labels)[n_outer + i] = 1;
  }
  for (Eigen::Index i = 0; i < h.data.size(); ++i) h.data.data()[i] += noise * sampling::standard_normal(rng);
  h.provenance = "builtin:two_moons(n=" + std::to_string(n) + ",noise=" + std::to_string(noise) +
                 ",seed=" + std::to_string(seed) + ")";
  fill_range(h);
  return h;
}

DatasetHandle rings(std::size_t n, const std::vector<double>& radii, double noise, std::uint64_t seed) {
  if (radii.empty()) throw DomainError("rings: need at least one radius");
  for (double r : radii) {
    if (!(r > 0.0)) throw DomainError("rings: radii must be positive");
  }
  if (noise < 0.0) throw DomainError("rings: noise must be nonnegative");
  Rng rng(seed);
  DatasetHandle h;
  h.data.resize(static_cast<Eigen::Index>(n), 2);
  h.labels.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ring = i % radii.size();
    const double t = 2.0 * std::numbers::pi * sampling::open_uniform(rng);
    const double r = radii[ring];
    h.data(static_cast<Eigen::Index>(i), 0) = r * std::cos(t) + noise * sampling::standard_normal(rng);
    h.data(static_cast<Eigen::Index>(i), 1) = r * std::sin(t) + noise * sampling::standard_normal(rng);
    (*h.labels)[i] = static_cast<int>(ring);
  }
  h.provenance = "builtin:rings(n=" + std::to_string(n) + ",rings=" + std::to_string(radii.size()) +
                 ",seed=" + std::to_string(seed) + ")";
  fill_range(h);
  return h;
}

DatasetHandle gaussian_mixture(std::size_t n, const Eigen::MatrixXd& centers, double stddev,
                               std::uint64_t seed) {
  if (centers.rows() == 0 || centers.cols() == 0) throw DomainError("gaussian_mixture: need centers");
  if (!(stddev >= 0.0)) throw DomainError("gaussian_mixture: stddev must be nonnegative");
  Rng rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, centers.rows() - 1);
  DatasetHandle h;
  h.data.resize(static_cast<Eigen::Index>(n), centers.cols());
  h.labels.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Index c = pick(rng);
    for (Eigen::Index j = 0; j < centers.cols(); ++j) {
      h.data(static_cast<Eigen::Index>(i), j) = centers(c, j) + stddev * sampling::standard_normal(rng);
    }
    (*h.labels)[i] = static_cast<int>(c);
  }
  h.provenance = "builtin:gaussian_mixture(n=" + std::to_string(n) + ",k=" + std::to_string(centers.rows()) +
                 ",seed=" + std::to_string(seed) + ")";
  fill_range(h);
  return h;
}

DatasetHandle load_dataset(const DatasetSpec& spec) {
  switch (spec.source) {
    case DatasetSpec::Source::kCsv:
      return load_csv(spec.name, spec.csv_labels);
    case DatasetSpec::Source::kIdx:
      return load_idx(spec.name, spec.labels_path);
    case DatasetSpec::Source::kBuiltin:
      break;
  }
  if (spec.name == "two_moons") return two_moons(spec.n, spec.noise, spec.seed);
  if (spec.name == "rings") return rings(spec.n, spec.radii, spec.noise, spec.seed);
  if (spec.name == "gaussian_mixture") {
    Eigen::MatrixXd centers = spec.centers;
    if (centers.size() == 0) {
      centers.resize(4, 2);
      centers << -1, -1, -1, 1, 1, -1, 1, 1;
    }
    return gaussian_mixture(spec.n, centers, spec.noise, spec.seed);
  }
  throw ValidationError("unknown builtin dataset '" + spec.name + "'");
}

}  // namespace pnflow
