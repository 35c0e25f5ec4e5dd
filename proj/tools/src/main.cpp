// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

// pnflow command-line entry point. Exit codes: 0 success, 1 validation error,
// 2 runtime or numeric error.

#include <CLI11.hpp>
#include <iostream>

#include "pnflow/errors.hpp"
#include "pnflow_cli/commands.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace pnflow::cli;
  CLI::App app{"pnflow: normalizing flows with Gaussian, von Mises-Fisher and Dirichlet bases"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "Train a flow from a JSON config");
  train->add_option("--config", config_path, "Config JSON path")->required();

  SampleOptions so;
  auto* sample = app.add_subcommand("sample", "Draw and decode base samples");
  sample->add_option("--checkpoint", so.checkpoint)->required();
  sample->add_option("--n", so.n)->required();
  sample->add_option("--temperature", so.temperature)->capture_default_str();
  sample->add_option("--seed", so.seed)->capture_default_str();
  sample->add_option("--out", so.out, "Output path (default: beside the checkpoint)");
  sample->add_option("--image-width", so.image_width, "Write a PGM grid of images this wide");

  InterpolateOptions io;
  std::string rule;
  auto* interp = app.add_subcommand("interpolate", "Interpolate between dataset pairs in the base space");
  interp->add_option("--checkpoint", io.checkpoint)->required();
  interp->add_option("--data", io.data, "CSV or IDX dataset")->required();
  interp->add_option("--data-labels", io.data_labels, "IDX label file");
  interp->add_flag("--csv-labels", io.csv_labels, "Final CSV column holds class labels");
  interp->add_option("--k", io.k, "Interior points per pair")->capture_default_str();
  interp->add_flag("--within-class", io.within_class, "Pair points that share a label");
  interp->add_option("--rule", rule, "lerp, nclerp, slerp, or simplex_lerp");
  interp->add_option("--seed", io.seed)->capture_default_str();
  interp->add_option("--out", io.out_dir, "Output directory");
  interp->add_option("--image-width", io.image_width, "Also write a PGM grid of interpolants");

  EvaluateOptions eo;
  auto* eval = app.add_subcommand("evaluate", "BPD, FID, KID, and norm diagnostics");
  eval->add_option("--checkpoint", eo.checkpoint)->required();
  eval->add_option("--train", eo.train, "Reference (training) set")->required();
  eval->add_option("--test", eo.test, "Test set")->required();
  eval->add_option("--train-labels", eo.train_labels, "IDX label file for the training set");
  eval->add_option("--test-labels", eo.test_labels, "IDX label file for the test set");
  eval->add_flag("--csv-labels", eo.csv_labels, "Final CSV column holds class labels");
  eval->add_option("--features", eo.features, "auto, identity, whitened, or file:<path>")->capture_default_str();
  eval->add_option("--k", eo.k, "Interior points per pair")->capture_default_str();
  eval->add_option("--quantized-bits", eo.quantized_bits, "Treat data as integers of this bit depth");
  eval->add_option("--seed", eo.seed)->capture_default_str();
  eval->add_option("--out", eo.out, "Report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*train) {
      const TrainOutcome t = cmd_train(config_path);
      std::cout << "checkpoint: " << t.checkpoint_path << "\nbase-only NLL: " << t.base_only_nll
                << "\nfinal NLL: " << t.final_nll << "\n";
    } else if (*sample) {
      std::cout << cmd_sample(so) << "\n";
    } else if (*interp) {
      if (!rule.empty()) io.rule = rule;
      std::cout << cmd_interpolate(io) << "\n";
    } else if (*eval) {
      std::cout << cmd_evaluate(eo) << "\n";
    }
  } catch (const pnflow::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const pnflow::UnsupportedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
