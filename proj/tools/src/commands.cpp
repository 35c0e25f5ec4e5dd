// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow_cli/commands.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "pnflow/checkpoint.hpp"
#include "pnflow/errors.hpp"
#include "pnflow/interpolation.hpp"
#include "pnflow/io.hpp"
#include "pnflow_cli/config.hpp"

namespace pnflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFeatureNote =
    "features are not Inception activations; FID/KID values are only comparable across runs "
    "of this tool with the same feature extractor";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string beside(const std::string& path, const std::string& name) {
  const fs::path parent = fs::path(path).parent_path();
  return (parent.empty() ? fs::path(name) : parent / name).string();
}

std::string hash_file(const std::string& path) { return git_blob_sha1(io::read_bytes(path)); }

std::string hash_text(const std::string& text) {
  return git_blob_sha1(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void append_row(std::string& out, std::initializer_list<std::string> head, const Eigen::RowVectorXd& values) {
  bool first = true;
  for (const auto& h : head) {
    if (!first) out += ',';
    out += h;
    first = false;
  }
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    if (!first) out += ',';
    out += fmt(values[j]);
    first = false;
  }
  out += '\n';
}

std::string coord_header(std::initializer_list<std::string> head, const char* prefix, Eigen::Index count) {
  std::string out;
  for (const auto& h : head) out += h + ',';
  for (Eigen::Index j = 0; j < count; ++j) out += prefix + std::to_string(j) + ',';
  if (!out.empty()) out.back() = '\n';
  return out;
}

void write_pgm(const std::string& path, const Eigen::MatrixXd& images, int width, int columns) {
  if (images.cols() % width != 0) {
    throw ValidationError("image width " + std::to_string(width) + " does not divide dimension " +
                          std::to_string(images.cols()));
  }
  const int height = static_cast<int>(images.cols() / width);
  io::write_atomic(path, io::encode_pgm_grid(images, width, height, columns));
}

std::optional<NormReference> norm_reference_for(const FlowModel& model) {
  switch (model.manifold_map()) {
    case ManifoldMap::kNone:
      return NormReference::chi_squared(model.dim());
    case ManifoldMap::kSphere:
      return NormReference::unit();
    case ManifoldMap::kSimplex:
      break;
  }
  return std::nullopt;
}

json norm_json(const NormHistogram& h) {
  return {{"reference", h.reference.kind == NormReference::Kind::kUnit ? "unit" : "chi_squared"},
          {"reference_mean", h.reference.mean()},
          {"reference_variance", h.reference.variance()},
          {"count", h.squared_norms.size()},
          {"mean_squared_norm", h.mean},
          {"variance", h.variance},
          {"z_score", h.z_score},
          {"relative_deviation", h.relative_deviation},
          {"consistent", h.consistent}};
}

json metric_json(const MetricReport& r) {
  return {{"label", r.label},
          {"bpd", r.bpd},
          {"fid", r.fid},
          {"kid", r.kid},
          {"kid_stderr", r.kid_stderr},
          {"reference_count", r.reference_count},
          {"sample_count", r.sample_count},
          {"seed", r.seed},
          {"feature_kind", r.feature_kind}};
}

FeatureExtractor make_features(const std::string& spec, const Eigen::MatrixXd& reference) {
  if (spec == "identity") return FeatureExtractor::identity();
  if (spec == "whitened") return FeatureExtractor::whitened(reference);
  if (spec == "auto") {
    return reference.cols() <= 16 ? FeatureExtractor::identity() : FeatureExtractor::whitened(reference);
  }
  if (spec.rfind("file:", 0) == 0) return FeatureExtractor::from_file(spec.substr(5));
  throw ValidationError("unknown feature extractor '" + spec + "'");
}

}  // namespace

std::string git_blob_sha1(std::span<const std::uint8_t> content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("SHA-1 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

DatasetHandle load_data_file(const std::string& path, bool csv_labels,
                             const std::optional<std::string>& idx_labels) {
  if (fs::path(path).extension() == ".csv") return load_csv(path, csv_labels);
  return load_idx(path, idx_labels);
}

// ---------------------------------------------------------------------------

TrainOutcome cmd_train(const std::string& config_path) {
  const auto start = std::chrono::steady_clock::now();
  std::string text;
  try {
    text = io::read_text(config_path);
  } catch (const Error& e) {
    throw ValidationError(std::string("cannot read config: ") + e.what());
  }
  const ExperimentConfig cfg = parse_config(text);
  const DatasetHandle data = load_dataset(cfg.dataset);
  if (data.size() == 0) throw ValidationError("dataset is empty");

  Rng init_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const int d = static_cast<int>(data.dim());
  const BaseDistribution base = cfg.base.make(d);
  Eigen::MatrixXd x = data.data;
  if (cfg.data_kind().mode == DataKind::Mode::kQuantized) {
    // Dequantize once with seeded noise and rescale to [0, 1].
    Rng noise_rng(cfg.seed ^ 0x5bd1e995ULL);
    const double bins = std::ldexp(1.0, cfg.quantized_bits);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = (x.data()[i] + sampling::open_uniform(noise_rng)) / bins;
  }

  const double base_only_nll = mean_nll(FlowModel(d, base), x);
  FlowModel model = FlowModel::build(d, base, cfg.architecture, init_rng);
  TrainResult result = train(std::move(model), x, cfg.train);
  const double final_nll = mean_nll(result.model, x);
  const bool underflow = result.model.forward(x).simplex_underflow;

  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  TrainOutcome out;
  out.checkpoint_path = (out_dir / "checkpoint.sflw").string();
  out.loss_path = (out_dir / "loss.csv").string();
  out.manifest_path = (out_dir / "manifest.json").string();
  out.base_only_nll = base_only_nll;
  out.final_nll = final_nll;
  out.trace = result.trace;

  save_checkpoint(out.checkpoint_path, result.model);
  std::string loss = "epoch,mean_nll,bpd\n";
  for (const auto& s : result.trace) loss += std::to_string(s.epoch) + ',' + fmt(s.mean_nll) + ',' + fmt(s.bpd) + '\n';
  io::write_atomic(out.loss_path, loss);

  json inputs = json::array();
  inputs.push_back({{"role", "config"}, {"path", config_path}, {"git_blob_sha1", hash_text(text)}});
  if (cfg.dataset.source == DatasetSpec::Source::kBuiltin) {
    inputs.push_back({{"role", "dataset"}, {"builtin", data.provenance}, {"git_blob_sha1", hash_text(data.provenance)}});
  } else {
    inputs.push_back({{"role", "dataset"}, {"path", cfg.dataset.name}, {"git_blob_sha1", hash_file(cfg.dataset.name)}});
    if (cfg.dataset.labels_path) {
      inputs.push_back({{"role", "labels"}, {"path", *cfg.dataset.labels_path},
                        {"git_blob_sha1", hash_file(*cfg.dataset.labels_path)}});
    }
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest = {{"schema_version", kArtifactSchemaVersion},
                   {"command", "train"},
                   {"config", json::parse(text)},
                   {"inputs", inputs},
                   {"dataset_rows", data.size()},
                   {"dimension", d},
                   {"num_parameters", result.model.num_parameters()},
                   {"epochs_run", result.trace.size()},
                   {"base_only_nll", base_only_nll},
                   {"final_nll", final_nll},
                   {"nll_improvement", base_only_nll - final_nll},
                   {"simplex_underflow", underflow},
                   {"checkpoint", out.checkpoint_path},
                   {"checkpoint_sha1", hash_file(out.checkpoint_path)},
                   {"loss_trace", out.loss_path},
                   {"wall_time_seconds", wall}};
  io::write_atomic(out.manifest_path, manifest.dump(2) + "\n");
  return out;
}

std::string cmd_sample(const SampleOptions& o) {
  if (o.n < 0) throw ValidationError("--n must be nonnegative");
  if (!(o.temperature > 0.0)) throw ValidationError("--temperature must be positive");
  const FlowModel model = load_checkpoint(o.checkpoint);
  const Temperature temp(o.temperature);
  if (std::holds_alternative<DirichletBase>(model.base()) && !temp.is_identity()) {
    throw UnsupportedError("temperature sampling is not defined for the Dirichlet base (T must be 1)");
  }
  const bool pgm = o.image_width > 0;
  const std::string path = o.out.empty() ? beside(o.checkpoint, pgm ? "samples.pgm" : "samples.csv") : o.out;

  Eigen::MatrixXd decoded(0, model.dim());
  if (o.n > 0) {
    Rng rng(o.seed);
    decoded = model.decode(sample(model.base(), o.n, temp, rng));
  }
  if (pgm) {
    write_pgm(path, decoded, o.image_width, std::max(1, static_cast<int>(std::ceil(std::sqrt(o.n)))));
  } else {
    std::string csv = coord_header({}, "x", model.dim());
    for (Eigen::Index i = 0; i < decoded.rows(); ++i) append_row(csv, {}, decoded.row(i));
    io::write_atomic(path, csv);
  }
  return path;
}

std::string cmd_interpolate(const InterpolateOptions& o) {
  if (o.k < 1) throw ValidationError("--k must be positive");
  const FlowModel model = load_checkpoint(o.checkpoint);
  std::optional<InterpolationRule> rule;
  if (o.rule) {
    rule = parse_rule(*o.rule);
    check_rule_compatible(*rule, model.base());
  }
  const DatasetHandle data = load_data_file(o.data, o.csv_labels, o.data_labels);
  if (data.dim() != model.dim()) {
    throw ValidationError("dataset dimension " + std::to_string(data.dim()) + " does not match checkpoint dimension " +
                          std::to_string(model.dim()));
  }
  if (o.within_class && !data.labels) throw ValidationError("--within-class needs a labelled dataset");

  Rng rng(o.seed);
  ProtocolOptions popts;
  popts.interior = o.k;
  popts.within_class = o.within_class;
  popts.rule = rule;
  const InterpolationSet set = interpolation_protocol(model, {data.data, data.labels}, popts, rng);
  const InterpolationRule used = rule.value_or(default_rule(model.base()));

  const fs::path dir = o.out_dir.empty() ? fs::path(beside(o.checkpoint, "interpolate")) : fs::path(o.out_dir);
  fs::create_directories(dir);

  std::string interp = coord_header({"pair", "index", "lambda"}, "x", model.dim());
  std::string paths = coord_header({"pair", "lambda", "norm"}, "p", ambient_dim(model.base()));
  std::string diag = "pair,index_a,index_b,spacing_cv,min_norm,max_norm\n";
  double cv_sum = 0.0;
  for (std::size_t p = 0; p < set.paths.size(); ++p) {
    const InterpolationPath& path = set.paths[p];
    const PathDiagnostics& dg = set.diagnostics[p];
    for (int j = 0; j < o.k; ++j) {
      append_row(interp, {std::to_string(p), std::to_string(j), fmt(path.lambdas[static_cast<std::size_t>(j) + 1])},
                 set.samples.row(static_cast<Eigen::Index>(p) * o.k + j));
    }
    for (std::size_t j = 0; j < path.lambdas.size(); ++j) {
      append_row(paths, {std::to_string(p), fmt(path.lambdas[j]), fmt(dg.norms[j])},
                 path.interpolants.row(static_cast<Eigen::Index>(j)));
    }
    const auto [mn, mx] = std::minmax_element(dg.norms.begin(), dg.norms.end());
    diag += std::to_string(p) + ',' + std::to_string(set.pairs[p].first) + ',' + std::to_string(set.pairs[p].second) +
            ',' + fmt(dg.spacing_cv) + ',' + fmt(*mn) + ',' + fmt(*mx) + '\n';
    cv_sum += dg.spacing_cv;
  }
  io::write_atomic((dir / "interpolants.csv").string(), interp);
  io::write_atomic((dir / "paths.csv").string(), paths);
  io::write_atomic((dir / "diagnostics.csv").string(), diag);
  if (o.image_width > 0) write_pgm((dir / "interpolants.pgm").string(), set.samples, o.image_width, o.k);

  json summary = {{"schema_version", kArtifactSchemaVersion},
                  {"command", "interpolate"},
                  {"checkpoint", o.checkpoint},
                  {"data", o.data},
                  {"rule", to_string(used)},
                  {"k", o.k},
                  {"within_class", o.within_class},
                  {"seed", o.seed},
                  {"pairs", set.pairs.size()},
                  {"interpolants", set.samples.rows()},
                  {"mean_spacing_cv", set.paths.empty() ? 0.0 : cv_sum / static_cast<double>(set.paths.size())},
                  {"warnings", set.warnings}};
  const std::string summary_path = (dir / "summary.json").string();
  io::write_atomic(summary_path, summary.dump(2) + "\n");
  return summary_path;
}

std::string cmd_evaluate(const EvaluateOptions& o) {
  if (o.k < 1) throw ValidationError("--k must be positive");
  const FlowModel model = load_checkpoint(o.checkpoint);
  const DatasetHandle train_set = load_data_file(o.train, o.csv_labels, o.train_labels);
  const DatasetHandle test_set = load_data_file(o.test, o.csv_labels, o.test_labels);
  for (const auto* s : {&train_set, &test_set}) {
    if (s->dim() != model.dim()) throw ValidationError("dataset dimension does not match checkpoint");
    if (s->size() < 2) throw ValidationError("datasets need at least 2 rows");
  }
  const DataKind kind = o.quantized_bits > 0 ? DataKind::quantized(o.quantized_bits) : DataKind::continuous();
  auto to_model_space = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return kind.mode == DataKind::Mode::kQuantized ? Eigen::MatrixXd(x / std::ldexp(1.0, o.quantized_bits)) : x;
  };

  Rng rng(o.seed);
  // As many generated samples as training rows.
  const Eigen::MatrixXd generated =
      model.decode(sample(model.base(), static_cast<int>(train_set.size()), Temperature(1.0), rng));
  ProtocolOptions popts;
  popts.interior = o.k;
  popts.within_class = train_set.labels.has_value();
  const InterpolationSet interp =
      interpolation_protocol(model, {to_model_space(train_set.data), train_set.labels}, popts, rng);

  const Eigen::MatrixXd reference = to_model_space(train_set.data);
  const FeatureExtractor features = make_features(o.features, reference);
  const Eigen::MatrixXd ref_f = features.extract(reference);

  auto score = [&](const std::string& label, const Eigen::MatrixXd& samples, double bpd) {
    MetricReport r;
    r.label = label;
    r.bpd = bpd;
    const Eigen::MatrixXd f = features.extract(samples);
    r.fid = fid(ref_f, f);
    const KidResult k = kid(ref_f, f);
    r.kid = k.value;
    r.kid_stderr = k.std_error;
    r.reference_count = static_cast<std::size_t>(reference.rows());
    r.sample_count = static_cast<std::size_t>(samples.rows());
    r.seed = o.seed;
    r.feature_kind = features.name();
    return r;
  };
  // Generated and interpolated samples live in model space; in quantized mode
  // the bin width term is added so they share the test set's scale.
  const double bin_bits = kind.mode == DataKind::Mode::kQuantized ? o.quantized_bits : 0.0;
  const double bpd_test = bits_per_dim(model, test_set.data, kind, o.seed);
  const double bpd_interp = bits_per_dim(model, interp.samples) + bin_bits;
  const MetricReport gen_report = score("generated", generated, bits_per_dim(model, generated) + bin_bits);
  const MetricReport int_report = score("interpolated", interp.samples, bpd_interp);

  json report = {{"schema_version", kArtifactSchemaVersion},
                 {"command", "evaluate"},
                 {"note", kFeatureNote},
                 {"checkpoint", o.checkpoint},
                 {"train", o.train},
                 {"test", o.test},
                 {"seed", o.seed},
                 {"k", o.k},
                 {"within_class", popts.within_class},
                 {"bpd_test", bpd_test},
                 {"bpd_interpolated", bpd_interp},
                 {"test_count", test_set.size()},
                 {"interpolant_count", interp.samples.rows()},
                 {"generated", metric_json(gen_report)},
                 {"interpolated", metric_json(int_report)},
                 {"warnings", interp.warnings}};

  const std::string out = o.out.empty() ? beside(o.checkpoint, "report.json") : o.out;
  const std::string hist_path = (fs::path(out).parent_path() / (fs::path(out).stem().string() + "_norms.csv")).string();
  if (const auto ref = norm_reference_for(model)) {
    const NormHistogram test_norms = norm_diagnostics(model.forward(to_model_space(test_set.data)).points, *ref);
    Eigen::MatrixXd interp_points(0, ambient_dim(model.base()));
    for (const auto& p : interp.paths) {
      interp_points.conservativeResize(interp_points.rows() + o.k, Eigen::NoChange);
      interp_points.bottomRows(o.k) = p.interpolants.middleRows(1, o.k);
    }
    const NormHistogram interp_norms = norm_diagnostics(interp_points, *ref);
    report["norm_diagnostics"] = {{"test_encodings", norm_json(test_norms)},
                                  {"interpolants", norm_json(interp_norms)},
                                  {"histogram_csv", hist_path}};
    std::string csv = "set,bin_lo,bin_hi,count\n";
    for (const auto& [name, h] : {std::pair{"test_encodings", &test_norms}, std::pair{"interpolants", &interp_norms}}) {
      for (std::size_t b = 0; b < h->counts.size(); ++b) {
        csv += std::string(name) + ',' + fmt(h->bin_edges[b]) + ',' + fmt(h->bin_edges[b + 1]) + ',' +
               std::to_string(h->counts[b]) + '\n';
      }
    }
    io::write_atomic(hist_path, csv);
  } else {
    report["norm_diagnostics"] = nullptr;
  }
  io::write_atomic(out, report.dump(2) + "\n");
  return out;
}

}  // namespace pnflow::cli
