// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow_cli/config.hpp"

#include <json.hpp>
#include <set>
#include <sstream>

#include "pnflow/errors.hpp"
#include "pnflow/io.hpp"

namespace pnflow::cli {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "schema_version", "dataset",       "dataset_format", "dataset_labels",  "dataset_csv_labels",
    "dataset_n",      "dataset_noise", "dataset_radii",  "levels",          "steps",
    "coupling_width", "coupling_depth", "log_scale_bound", "base",          "kappa_multiplier",
    "alpha",          "learning_rate", "clip_norm",      "warmup_epochs",   "epochs",
    "batch_size",     "quantized_bits", "output_dir",    "seed"};

// Reads typed fields and records every problem instead of stopping at the first.
class Fields {
 public:
  explicit Fields(const json& doc) : doc_(doc) {}

  bool has(const char* key) const { return doc_.contains(key); }

  template <typename T>
  void read(const char* key, T& out, bool required = false) {
    if (!doc_.contains(key)) {
      if (required) problems.push_back(std::string("'") + key + "' is required");
      return;
    }
    const json& v = doc_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return wrong(key, "a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return wrong(key, "a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) return wrong(key, "an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0) {
          out = v.get<T>();
        } else {
          problems.push_back(std::string("'") + key + "' must be nonnegative");
        }
      } else {
        out = v.get<T>();
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) return wrong(key, "a number");
      out = v.get<T>();
    } else {
      if (!v.is_array()) return wrong(key, "an array of numbers");
      out.clear();
      for (const json& e : v) {
        if (!e.is_number()) return wrong(key, "an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  std::vector<std::string> problems;

 private:
  void wrong(const char* key, const char* what) {
    problems.push_back(std::string("'") + key + "' must be " + what);
  }
  const json& doc_;
};

}  // namespace

BaseDistribution BaseSpec::make(int dim) const {
  switch (kind) {
    case BaseKind::kVmf:
      return VmfBase::south_pole(dim, kappa_multiplier * dim);
    case BaseKind::kDirichlet:
      return DirichletBase::symmetric(dim, alpha);
    case BaseKind::kGaussian:
      break;
  }
  return GaussianBase(dim);
}

DataKind ExperimentConfig::data_kind() const {
  return quantized_bits > 0 ? DataKind::quantized(quantized_bits) : DataKind::continuous();
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");

  ExperimentConfig cfg;
  Fields f(doc);
  for (const auto& [key, value] : doc.items()) {
    if (!kKnownKeys.count(key)) f.problems.push_back("unknown key '" + key + "'");
  }

  int schema = 0;
  f.read("schema_version", schema, true);
  if (f.has("schema_version") && schema != kConfigSchemaVersion) {
    f.problems.push_back("'schema_version' must be " + std::to_string(kConfigSchemaVersion));
  }

  // Dataset.
  std::string format = "builtin";
  f.read("dataset", cfg.dataset.name, true);
  f.read("dataset_format", format);
  if (format == "builtin") {
    cfg.dataset.source = DatasetSpec::Source::kBuiltin;
  } else if (format == "csv") {
    cfg.dataset.source = DatasetSpec::Source::kCsv;
  } else if (format == "idx") {
    cfg.dataset.source = DatasetSpec::Source::kIdx;
  } else {
    f.problems.push_back("'dataset_format' must be one of builtin, csv, idx");
  }
  if (f.has("dataset_labels")) {
    std::string labels;
    f.read("dataset_labels", labels);
    cfg.dataset.labels_path = labels;
    if (format != "idx") f.problems.push_back("'dataset_labels' applies to idx datasets only");
  }
  f.read("dataset_csv_labels", cfg.dataset.csv_labels);
  f.read("dataset_n", cfg.dataset.n);
  f.read("dataset_noise", cfg.dataset.noise);
  f.read("dataset_radii", cfg.dataset.radii);
  if (cfg.dataset.source == DatasetSpec::Source::kBuiltin && f.has("dataset")) {
    static const std::set<std::string> builtins = {"two_moons", "rings", "gaussian_mixture"};
    if (!builtins.count(cfg.dataset.name)) {
      f.problems.push_back("unknown builtin dataset '" + cfg.dataset.name + "'");
    }
    if (cfg.dataset.n < 1) f.problems.push_back("'dataset_n' must be positive");
    if (!(cfg.dataset.noise >= 0.0)) f.problems.push_back("'dataset_noise' must be nonnegative");
  }

  // Architecture.
  int width = 64;
  int depth = 2;
  f.read("levels", cfg.architecture.levels);
  f.read("steps", cfg.architecture.steps);
  f.read("coupling_width", width);
  f.read("coupling_depth", depth);
  f.read("log_scale_bound", cfg.architecture.log_scale_bound);
  if (cfg.architecture.levels < 1) f.problems.push_back("'levels' must be at least 1");
  if (cfg.architecture.steps < 0) f.problems.push_back("'steps' must be nonnegative");
  if (width < 1) f.problems.push_back("'coupling_width' must be positive");
  if (depth < 1) f.problems.push_back("'coupling_depth' must be positive");
  if (!(cfg.architecture.log_scale_bound > 0.0)) f.problems.push_back("'log_scale_bound' must be positive");
  cfg.architecture.hidden.assign(static_cast<std::size_t>(std::max(depth, 1)), width);

  // Base: one named base, and only that base's parameter keys.
  std::string base;
  f.read("base", base, true);
  if (base == "gaussian") {
    cfg.base.kind = BaseKind::kGaussian;
  } else if (base == "vmf") {
    cfg.base.kind = BaseKind::kVmf;
  } else if (base == "dirichlet") {
    cfg.base.kind = BaseKind::kDirichlet;
  } else if (f.has("base")) {
    f.problems.push_back("'base' must be one of gaussian, vmf, dirichlet");
  }
  const bool has_kappa = f.has("kappa_multiplier");
  const bool has_alpha = f.has("alpha");
  if ((has_kappa && has_alpha) || (has_kappa && base != "vmf") || (has_alpha && base != "dirichlet")) {
    f.problems.push_back("exactly one base spec: 'base' is '" + base + "' but" +
                         (has_kappa ? " 'kappa_multiplier' (vmf)" : "") +
                         (has_kappa && has_alpha ? " and" : "") + (has_alpha ? " 'alpha' (dirichlet)" : "") +
                         " is also set");
  }
  f.read("kappa_multiplier", cfg.base.kappa_multiplier);
  f.read("alpha", cfg.base.alpha);
  if (!(cfg.base.kappa_multiplier > 0.0)) f.problems.push_back("'kappa_multiplier' must be positive");
  if (!(cfg.base.alpha > 0.0)) f.problems.push_back("'alpha' must be positive");

  // Training.
  f.read("learning_rate", cfg.train.learning_rate);
  f.read("clip_norm", cfg.train.clip_norm);
  f.read("warmup_epochs", cfg.train.warmup_epochs);
  f.read("epochs", cfg.train.epochs);
  f.read("batch_size", cfg.train.batch_size);
  for (const auto& v : cfg.train.violations()) f.problems.push_back(v);

  f.read("quantized_bits", cfg.quantized_bits);
  if (cfg.quantized_bits < 0 || cfg.quantized_bits > 16) {
    f.problems.push_back("'quantized_bits' must lie in [0, 16]");
  }
  f.read("output_dir", cfg.output_dir, true);
  if (f.has("output_dir") && cfg.output_dir.empty()) f.problems.push_back("'output_dir' must not be empty");
  f.read("seed", cfg.seed);
  cfg.dataset.seed = cfg.seed;
  cfg.train.seed = cfg.seed;

  if (!f.problems.empty()) {
    std::ostringstream msg;
    msg << "invalid config (" << f.problems.size() << " problem" << (f.problems.size() == 1 ? "" : "s") << "):";
    for (const auto& p : f.problems) msg << "\n  - " << p;
    throw ValidationError(msg.str());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error& e) {
    throw ValidationError(std::string("cannot read config: ") + e.what());
  }
  return parse_config(text);
}

}  // namespace pnflow::cli
