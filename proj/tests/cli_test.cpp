// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "pnflow/checkpoint.hpp"
#include "pnflow/errors.hpp"
#include "pnflow/io.hpp"
#include "pnflow_cli/commands.hpp"
#include "pnflow_cli/config.hpp"

namespace pnflow::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / "pnflow_cli_test" / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  std::string toy_config(const std::string& name, json overrides = json::object()) const {
    json c = {{"schema_version", 1}, {"dataset", "two_moons"}, {"dataset_n", 200},   {"steps", 2},
              {"coupling_width", 16}, {"epochs", 2},           {"warmup_epochs", 1}, {"batch_size", 64},
              {"base", "gaussian"},  {"output_dir", path(name)}, {"seed", 3}};
    c.update(overrides);
    return write(name + ".json", c.dump());
  }

  std::string save_model(const std::string& name, const FlowModel& m) const {
    save_checkpoint(path(name), m);
    return path(name);
  }

  fs::path dir_;
};

Eigen::MatrixXd read_matrix(const std::string& path) { return load_csv(path, false).data; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PNFLOW_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Config, RejectsTwoBaseSpecs) {
  const std::string text =
      R"({"schema_version":1,"dataset":"two_moons","base":"vmf","kappa_multiplier":2,"alpha":2,"output_dir":"o"})";
  try {
    parse_config(text);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("exactly one base spec"), std::string::npos) << e.what();
  }
}

TEST(Config, ListsEveryProblem) {
  const std::string text =
      R"({"schema_version":1,"dataset":"two_moons","base":"gaussian","output_dir":"o",)"
      R"("learning_rate":-1,"batch_size":0,"stpes":4,"quantized_bits":40})";
  try {
    parse_config(text);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    for (const char* key : {"learning_rate", "batch_size", "stpes", "quantized_bits"}) {
      EXPECT_NE(msg.find(key), std::string::npos) << key << " missing from: " << msg;
    }
  }
  EXPECT_THROW(parse_config("{not json"), ValidationError);
  EXPECT_THROW(parse_config(R"({"schema_version":2})"), ValidationError);
}

TEST(Config, Defaults) {
  const auto c = parse_config(
      R"({"schema_version":1,"dataset":"rings","base":"vmf","kappa_multiplier":1.5,"output_dir":"o"})");
  EXPECT_EQ(c.base.kind, BaseKind::kVmf);
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 1e-3);
  EXPECT_DOUBLE_EQ(c.train.clip_norm, 50.0);
  EXPECT_EQ(c.train.warmup_epochs, 10);
  const auto vmf = std::get<VmfBase>(c.base.make(4));
  EXPECT_DOUBLE_EQ(vmf.kappa(), 6.0);
}

TEST_F(CliTest, TrainIsDeterministic) {
  const auto a = cmd_train(toy_config("a"));
  const auto b = cmd_train(toy_config("b"));
  EXPECT_EQ(io::read_bytes(a.checkpoint_path), io::read_bytes(b.checkpoint_path));
  EXPECT_EQ(io::read_text(a.loss_path), io::read_text(b.loss_path));
  const json m = json::parse(io::read_text(a.manifest_path));
  EXPECT_EQ(m["schema_version"], 1);
  EXPECT_EQ(m["epochs_run"], 2);
  EXPECT_EQ(m["config"]["dataset"], "two_moons");
  EXPECT_EQ(m["inputs"][0]["git_blob_sha1"].get<std::string>().size(), 40u);
  EXPECT_TRUE(m.contains("wall_time_seconds"));
  EXPECT_EQ(io::read_text(a.loss_path).substr(0, 18), "epoch,mean_nll,bpd");
}

TEST_F(CliTest, ZeroEpochCheckpointEqualsInitialization) {
  const auto out = cmd_train(toy_config("z", {{"epochs", 0}, {"warmup_epochs", 0}}));
  const FlowModel loaded = load_checkpoint(out.checkpoint_path);
  Architecture arch;
  arch.steps = 2;
  arch.hidden = {16, 16};
  Rng rng(3 ^ 0x9e3779b97f4a7c15ULL);
  const FlowModel init = FlowModel::build(2, GaussianBase(2), arch, rng);
  EXPECT_EQ(loaded.flat_parameters(), init.flat_parameters());
  EXPECT_EQ(serialize_checkpoint(init), io::read_bytes(out.checkpoint_path));
  EXPECT_TRUE(out.trace.empty());
}

TEST(GitHash, KnownValues) {
  EXPECT_EQ(git_blob_sha1({}), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  const std::string hello = "hello\n";
  EXPECT_EQ(git_blob_sha1({reinterpret_cast<const std::uint8_t*>(hello.data()), hello.size()}),
            "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_F(CliTest, SampleCountsAndTemperature) {
  const std::string ckpt = save_model("g100.sflw", FlowModel(100, GaussianBase(100)));
  SampleOptions o{ckpt, 0, 1.0, 1, path("empty.csv"), 0};
  cmd_sample(o);
  EXPECT_EQ(io::read_text(path("empty.csv")).find('\n'), io::read_text(path("empty.csv")).size() - 1);

  o.n = 4000;
  o.temperature = 0.5;
  o.out = path("t05.csv");
  cmd_sample(o);
  const Eigen::MatrixXd s = read_matrix(o.out);
  ASSERT_EQ(s.rows(), 4000);
  ASSERT_EQ(s.cols(), 100);
  EXPECT_NEAR(s.rowwise().squaredNorm().mean(), 25.0, 0.5);
}

TEST_F(CliTest, SampleVmfReencodesOnSphere) {
  Rng rng(2);
  Architecture arch;
  arch.steps = 2;
  arch.hidden = {8};
  const std::string ckpt = save_model("v.sflw", FlowModel::build(3, VmfBase::south_pole(3, 6.0), arch, rng));
  SampleOptions o{ckpt, 200, 1.0, 5, path("v.csv"), 0};
  cmd_sample(o);
  const FlowModel m = load_checkpoint(ckpt);
  const auto fw = m.forward(read_matrix(o.out));
  EXPECT_LT((fw.points.rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-10);
}

TEST_F(CliTest, DirichletTemperatureUnsupported) {
  const std::string ckpt = save_model("d.sflw", FlowModel(2, DirichletBase::symmetric(2, 2.0)));
  SampleOptions o{ckpt, 10, 0.5, 1, path("d.csv"), 0};
  EXPECT_THROW(cmd_sample(o), UnsupportedError);
  EXPECT_EQ(run_cli("sample --checkpoint " + ckpt + " --n 10 --temperature 0.5 --out " + path("d.csv")), 1);
  EXPECT_EQ(run_cli("sample --checkpoint " + ckpt + " --n 10 --out " + path("d.csv")), 0);
}

TEST_F(CliTest, SamplePgmGrid) {
  const std::string ckpt = save_model("img.sflw", FlowModel(4, GaussianBase(4)));
  SampleOptions o{ckpt, 3, 1.0, 1, path("grid.pgm"), 2};
  cmd_sample(o);
  const std::string pgm = io::read_text(o.out);
  EXPECT_EQ(pgm.substr(0, 2), "P5");
}

std::string moons_csv(int n) {
  const auto m = two_moons(n, 0.05, 11);
  std::ostringstream s;
  s << "x0,x1,label\n";
  s.precision(17);
  for (int i = 0; i < n; ++i) s << m.data(i, 0) << ',' << m.data(i, 1) << ',' << (*m.labels)[i] << '\n';
  return s.str();
}

TEST_F(CliTest, InterpolateProducesNInterpolants) {
  const std::string ckpt = save_model("g.sflw", FlowModel(2, GaussianBase(2)));
  const std::string data = write("moons.csv", moons_csv(50));
  InterpolateOptions o;
  o.checkpoint = ckpt;
  o.data = data;
  o.csv_labels = true;
  o.within_class = true;
  o.seed = 4;
  o.out_dir = path("interp");
  const json summary = json::parse(io::read_text(cmd_interpolate(o)));
  EXPECT_EQ(summary["rule"], "lerp");
  const Eigen::MatrixXd rows = read_matrix(path("interp/interpolants.csv"));
  EXPECT_EQ(rows.rows(), 50);
  EXPECT_TRUE(fs::exists(path("interp/diagnostics.csv")));
  EXPECT_TRUE(fs::exists(path("interp/paths.csv")));

  o.rule = "nclerp";
  EXPECT_NO_THROW(cmd_interpolate(o));
}

TEST_F(CliTest, InterpolateRejectsIncompatibleRule) {
  const std::string ckpt = save_model("v.sflw", FlowModel(2, VmfBase::south_pole(2, 4.0)));
  const std::string data = write("moons.csv", moons_csv(20));
  InterpolateOptions o;
  o.checkpoint = ckpt;
  o.data = data;
  o.csv_labels = true;
  o.rule = "nclerp";
  o.out_dir = path("interp");
  EXPECT_THROW(cmd_interpolate(o), ValidationError);
  EXPECT_EQ(run_cli("interpolate --checkpoint " + ckpt + " --data " + data + " --csv-labels --rule nclerp --out " +
                    path("interp")),
            1);
  o.rule.reset();
  const json summary = json::parse(io::read_text(cmd_interpolate(o)));
  EXPECT_EQ(summary["rule"], "slerp");
}

TEST_F(CliTest, EvaluateReport) {
  const std::string ckpt = save_model("g.sflw", FlowModel(2, GaussianBase(2)));
  const std::string train = write("train.csv", moons_csv(100));
  const std::string test = write("zeros.csv", "a,b\n0,0\n0,0\n0,0\n");
  EvaluateOptions o;
  o.checkpoint = ckpt;
  o.train = train;
  o.test = test;
  o.seed = 2;
  o.out = path("report.json");
  // Labels sit in the third column only for the training file.
  o.csv_labels = false;
  const std::string train_nolabel = write("train_x.csv", [] {
    const auto m = two_moons(100, 0.05, 11);
    std::ostringstream s;
    s.precision(17);
    for (int i = 0; i < 100; ++i) s << m.data(i, 0) << ',' << m.data(i, 1) << '\n';
    return s.str();
  }());
  o.train = train_nolabel;
  const std::string text = io::read_text(cmd_evaluate(o));
  const json r = json::parse(text);
  EXPECT_EQ(r.dump(2) + "\n", text);
  EXPECT_NEAR(r["bpd_test"].get<double>(), 1.32575, 5e-6);
  EXPECT_EQ(r["interpolant_count"], 100);
  EXPECT_EQ(r["generated"]["sample_count"], 100);
  EXPECT_GE(r["generated"]["kid_stderr"].get<double>(), 0.0);
  EXPECT_EQ(r["generated"]["feature_kind"], "identity");
  EXPECT_TRUE(r["norm_diagnostics"].is_object());
  EXPECT_TRUE(fs::exists(path("report_norms.csv")));
  EXPECT_EQ(run_cli("evaluate --checkpoint " + ckpt + " --train " + train_nolabel + " --test " + test + " --out " +
                    path("r2.json")),
            0);
}

TEST_F(CliTest, ReferenceAgainstItself) {
  const auto m = two_moons(400, 0.05, 12);
  const FeatureExtractor f = FeatureExtractor::identity();
  const Eigen::MatrixXd feats = f.extract(m.data);
  EXPECT_NEAR(fid(feats, feats), 0.0, 1e-8);
  // Rows come ordered along each moon; shuffle before splitting.
  std::vector<int> idx(400);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), std::mt19937_64(13));
  const Eigen::MatrixXd shuffled = feats(idx, Eigen::all);
  const auto k = kid(shuffled.topRows(200), shuffled.bottomRows(200));
  EXPECT_LE(std::abs(k.value), 3 * k.std_error);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("train --config " + path("missing.json")), 1);
  EXPECT_EQ(run_cli("train --config " + write("bad.json", R"({"schema_version":1,"base":"x"})")), 1);
  EXPECT_EQ(run_cli("sample --checkpoint " + write("junk.sflw", "not a checkpoint") + " --n 3"), 2);
  EXPECT_EQ(run_cli("train --config " + toy_config("ok")), 0);
  EXPECT_TRUE(fs::exists(path("ok/checkpoint.sflw")));
}

}  // namespace
}  // namespace pnflow::cli
