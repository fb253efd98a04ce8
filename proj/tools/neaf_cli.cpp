// Copyright 2026 The NeAF Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: synthetic cloud generation, angle-field training,
// normal prediction, classical baselines, evaluation and benchmark tables.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "neaf/bench.hpp"
#include "neaf/inference.hpp"
#include "neaf/pipeline.hpp"
#include "neaf/xyz_io.hpp"

namespace {

using namespace neaf;

std::vector<double> per_point_errors(const LabeledCloud& pred,
                                     const LabeledCloud& gt) {
  std::vector<double> errors;
  errors.reserve(pred.points.size());
  for (std::size_t i = 0; i < pred.points.size(); ++i) {
    errors.push_back(unoriented_angle_deg(pred.normals[i], gt.normals[i]));
  }
  return errors;
}

int run_synth(const ShapeSpec& spec, const std::string& output) {
  write_xyz(output, synth_cloud(spec));
  return 0;
}

struct TrainArgs {
  std::vector<std::string> inputs;
  std::string output;
  std::string log_path;
  bool epoch_checkpoints = false;
  TrainConfig cfg;
};

int run_train(const TrainArgs& args) {
  std::vector<LabeledCloud> clouds;
  for (const std::string& path : args.inputs) {
    clouds.push_back(read_xyz(path));
  }
  const std::string log_path =
      args.log_path.empty() ? args.output + ".log.csv" : args.log_path;

  const TrainResult result = train_on_samples(
      make_training_set(clouds, args.cfg), args.cfg, args.output,
      args.epoch_checkpoints ? std::filesystem::path(args.output)
                             : std::filesystem::path{});
  save_model(result.model, args.output);
  result.log.write_csv(log_path);
  const std::filesystem::path cfg_path =
      std::filesystem::path(args.output).parent_path() / "run.cfg";
  write_run_config(cfg_path, args.cfg, args.inputs);
  std::cerr << "trained " << result.log.steps.size() << " steps; final loss "
            << (result.log.steps.empty() ? 0.0 : result.log.steps.back().loss)
            << "\n";
  return 0;
}

struct PredictArgs {
  std::string model_path, input, output, errors_path;
  int k = 64;
  int threads = 1;
  InferConfig cfg;
};

int run_predict(const PredictArgs& args) {
  const AngleFieldModel model = load_model(args.model_path);
  const LabeledCloud cloud = read_xyz(args.input);
  LabeledCloud pred = cloud;
  pred.normals = estimate_cloud_normals(model, cloud, args.k, args.cfg,
                                        args.threads);
  write_xyz(args.output, pred);
  if (!args.errors_path.empty()) {
    if (!cloud.has_normals()) {
      throw MissingNormals("--errors needs ground-truth normals in the input");
    }
    write_point_errors(args.errors_path, cloud,
                       per_point_errors(pred, cloud));
  }
  return 0;
}

struct BaselineArgs {
  std::string method, input, output;
  int k = 64;
};

int run_baseline(const BaselineArgs& args) {
  const BaselineMethod method{
      args.method == "pca" ? BaselineKind::Pca : BaselineKind::Jet2, args.k};
  const LabeledCloud cloud = read_xyz(args.input);
  const KdIndex index = build_index(cloud);
  LabeledCloud pred = cloud;
  pred.normals.clear();
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    pred.normals.push_back(baseline_normal(
        method, extract_patch(index, cloud, Eigen::Index(i), method.k)));
  }
  write_xyz(args.output, pred);
  return 0;
}

struct EvalArgs {
  std::string pred, gt;
  int subsample = 5000;
  std::uint64_t seed = 0;
  bool csv = false;
};

int run_eval(const EvalArgs& args) {
  const EvalReport report = evaluate(args.pred, args.gt, args.subsample, args.seed);
  if (args.csv) {
    std::cout << "points,rmse_deg\n"
              << report.per_cloud[0].points << ','
              << format_double(report.aggregate) << "\n";
  } else {
    std::cout << "RMSE " << std::fixed << std::setprecision(4)
              << report.aggregate << " deg\n";
  }
  return 0;
}

struct BenchArgs {
  std::string model_path, suite_path;
  BenchmarkOptions opts;
  bool csv = false;
};

int run_bench(const BenchArgs& args) {
  const AngleFieldModel model = load_model(args.model_path);
  const std::vector<ShapeSpec> suite = read_suite(args.suite_path);
  const BenchmarkTable table = run_benchmark(model, suite, args.opts);
  std::cout << (args.csv ? table.to_csv() : table.to_text());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-cloud normal estimation via a learned angle field"};
  app.require_subcommand(1);

  // --- synth ---
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled cloud");
  ShapeSpec spec;
  std::string synth_out;
  std::map<std::string, ShapeKind> kinds{{"plane", ShapeKind::Plane},
                                         {"sphere", ShapeKind::Sphere},
                                         {"cylinder", ShapeKind::Cylinder},
                                         {"torus", ShapeKind::Torus}};
  std::map<std::string, DensityMode> densities{
      {"uniform", DensityMode::Uniform},
      {"stripes", DensityMode::Stripes},
      {"gradient", DensityMode::Gradient}};
  synth->add_option("--shape", spec.kind, "plane|sphere|cylinder|torus")
      ->required()
      ->transform(CLI::CheckedTransformer(kinds, CLI::ignore_case));
  synth->add_option("--points", spec.points, "surface samples before density filtering")
      ->check(CLI::PositiveNumber);
  synth->add_option("--noise", spec.noise_sigma,
                    "Gaussian sigma as a fraction of the bbox diagonal")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--density", spec.density, "uniform|stripes|gradient")
      ->transform(CLI::CheckedTransformer(densities, CLI::ignore_case));
  synth->add_option("--seed", spec.seed, "RNG seed");
  synth->add_option("--extent", spec.extent, "plane side length");
  synth->add_option("--radius", spec.radius, "sphere/cylinder radius");
  synth->add_option("--height", spec.height, "cylinder height");
  synth->add_option("--major-radius", spec.major_radius, "torus ring radius");
  synth->add_option("--minor-radius", spec.minor_radius, "torus tube radius");
  synth->add_option("-o,--output", synth_out, "output XYZ path")->required();

  // --- train ---
  auto* train_cmd = app.add_subcommand("train", "Train an angle-field model");
  TrainArgs train_args;
  train_cmd->add_option("-i,--input", train_args.inputs, "labeled XYZ file(s)")
      ->required()
      ->expected(-1);
  train_cmd->add_option("-o,--output", train_args.output, "checkpoint path")
      ->required();
  train_cmd->add_option("--k", train_args.cfg.k, "patch neighbor count")
      ->check(CLI::Range(3, 1 << 20));
  train_cmd->add_option("-M,--query-pool", train_args.cfg.query_pool,
                        "sphere query pool size")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-queries", train_args.cfg.batch_queries,
                        "queries per optimizer step")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", train_args.cfg.epochs, "epochs over the patches")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_args.cfg.lr, "peak learning rate")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--warmup", train_args.cfg.warmup_steps,
                        "linear warm-up steps")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seed", train_args.cfg.seed, "RNG seed");
  train_cmd->add_option("--cap", train_args.cfg.patch_cap,
                        "per-cloud patch subsample (0 = all points)")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--clip-norm", train_args.cfg.clip_norm,
                        "global gradient-norm clip (0 disables)");
  train_cmd->add_option("--log", train_args.log_path,
                        "loss CSV path (default: <output>.log.csv)");
  train_cmd->add_flag("--epoch-checkpoints", train_args.epoch_checkpoints,
                      "also write a checkpoint after each epoch");

  // --- predict ---
  auto* predict = app.add_subcommand("predict", "Estimate normals with a model");
  PredictArgs predict_args;
  predict->add_option("--model", predict_args.model_path, "checkpoint path")
      ->required();
  predict->add_option("-i,--input", predict_args.input, "input XYZ")->required();
  predict->add_option("-o,--output", predict_args.output, "output 6-field XYZ")
      ->required();
  predict->add_option("--k", predict_args.k, "patch neighbor count")
      ->check(CLI::Range(3, 1 << 20));
  predict->add_option("-m,--samples", predict_args.cfg.sample_count,
                      "sphere queries scored per point")
      ->check(CLI::PositiveNumber);
  predict->add_option("-l,--coarse", predict_args.cfg.coarse_count,
                      "coarse candidates kept")
      ->check(CLI::PositiveNumber);
  predict->add_option("--refine-steps", predict_args.cfg.refine_steps,
                      "Adam steps per candidate")
      ->check(CLI::NonNegativeNumber);
  predict->add_option("--refine-lr", predict_args.cfg.refine_lr,
                      "refinement learning rate")
      ->check(CLI::PositiveNumber);
  predict->add_option("--seed", predict_args.cfg.seed, "RNG seed");
  predict->add_flag("--skip-coarse", predict_args.cfg.skip_coarse,
                    "refine random vectors instead of coarse predictions");
  std::map<std::string, FinalSelect> selects{{"average", FinalSelect::Average},
                                             {"min", FinalSelect::Min}};
  predict->add_option("--final", predict_args.cfg.select,
                      "aggregation over refined candidates: average|min")
      ->transform(CLI::CheckedTransformer(selects, CLI::ignore_case));
  predict->add_option("--errors", predict_args.errors_path,
                      "also dump 'x y z err_degrees' per point");
  predict->add_option("--threads", predict_args.threads, "worker threads")
      ->check(CLI::PositiveNumber);

  // --- baseline ---
  auto* baseline = app.add_subcommand("baseline", "Classical estimators");
  BaselineArgs baseline_args;
  baseline->add_option("--method", baseline_args.method, "pca|jet2")
      ->required()
      ->check(CLI::IsMember({"pca", "jet2"}));
  baseline->add_option("--k", baseline_args.k, "neighborhood size")
      ->check(CLI::Range(3, 1 << 20));
  baseline->add_option("-i,--input", baseline_args.input, "input XYZ")->required();
  baseline->add_option("-o,--output", baseline_args.output, "output 6-field XYZ")
      ->required();

  // --- eval ---
  auto* eval_cmd = app.add_subcommand("eval", "Unoriented RMSE of predictions");
  EvalArgs eval_args;
  eval_cmd->add_option("--pred", eval_args.pred, "predicted 6-field XYZ")->required();
  eval_cmd->add_option("--gt", eval_args.gt, "ground-truth 6-field XYZ")->required();
  eval_cmd->add_option("--subsample", eval_args.subsample,
                       "evaluation subset size (0 = all points)")
      ->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--seed", eval_args.seed, "subsample seed");
  eval_cmd->add_flag("--csv", eval_args.csv, "CSV output");

  // --- bench ---
  auto* bench = app.add_subcommand("bench", "Benchmark table over a suite file");
  BenchArgs bench_args;
  bench->add_option("--model", bench_args.model_path, "checkpoint path")->required();
  bench->add_option("--suite", bench_args.suite_path, "shape suite manifest")
      ->required();
  bench->add_option("--k", bench_args.opts.k, "patch neighbor count")
      ->check(CLI::Range(3, 1 << 20));
  bench->add_option("--baseline-k", bench_args.opts.baseline_k,
                    "baseline neighborhood size")
      ->check(CLI::Range(3, 1 << 20));
  bench->add_option("-m,--samples", bench_args.opts.infer.sample_count,
                    "sphere queries per point")
      ->check(CLI::PositiveNumber);
  bench->add_option("-l,--coarse", bench_args.opts.infer.coarse_count,
                    "coarse candidates kept")
      ->check(CLI::PositiveNumber);
  bench->add_option("--refine-steps", bench_args.opts.infer.refine_steps,
                    "Adam steps per candidate")
      ->check(CLI::NonNegativeNumber);
  bench->add_option("--refine-lr", bench_args.opts.infer.refine_lr,
                    "refinement learning rate")
      ->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_args.opts.infer.seed, "inference seed");
  bench->add_flag("--skip-coarse", bench_args.opts.infer.skip_coarse,
                  "refine random vectors instead of coarse predictions");
  bench->add_option("--final", bench_args.opts.infer.select,
                    "aggregation over refined candidates: average|min")
      ->transform(CLI::CheckedTransformer(selects, CLI::ignore_case));
  bench->add_option("--subsample", bench_args.opts.eval_subsample,
                    "evaluation subset size")
      ->check(CLI::NonNegativeNumber);
  bench->add_option("--eval-seed", bench_args.opts.eval_seed, "subsample seed");
  bench->add_option("--threads", bench_args.opts.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  bench->add_flag("--csv", bench_args.csv, "CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc == 0) return 0;  // --help and friends
    for (const CLI::App* sub : app.get_subcommands()) {
      std::cerr << sub->help();
    }
    return 1;
  }

  try {
    if (synth->parsed()) return run_synth(spec, synth_out);
    if (train_cmd->parsed()) {
      if (train_args.cfg.batch_queries > train_args.cfg.query_pool) {
        std::cerr << "--batch-queries must not exceed --query-pool\n"
                  << train_cmd->help();
        return 1;
      }
      return run_train(train_args);
    }
    if (predict->parsed()) {
      if (predict_args.cfg.coarse_count > predict_args.cfg.sample_count) {
        std::cerr << "--coarse must not exceed --samples\n" << predict->help();
        return 1;
      }
      return run_predict(predict_args);
    }
    if (baseline->parsed()) {
      if (baseline_args.method == "jet2" && baseline_args.k < 6) {
        std::cerr << "--k must be >= 6 for jet2\n" << baseline->help();
        return 1;
      }
      return run_baseline(baseline_args);
    }
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (bench->parsed()) return run_bench(bench_args);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
