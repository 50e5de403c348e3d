// rgcinit: closed-form classifier head initialization from feature files.
//
// Exit status: 0 success, 1 usage, 2 data or format, 3 numerical.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rgcinit/bench.hpp"
#include "rgcinit/calibration.hpp"
#include "rgcinit/class_stats.hpp"
#include "rgcinit/cmd.hpp"
#include "rgcinit/errors.hpp"
#include "rgcinit/logistic.hpp"
#include "rgcinit/model.hpp"
#include "rgcinit/rgc.hpp"
#include "rgcinit/synth.hpp"
#include "rgcinit/tensor_store.hpp"

namespace fs = std::filesystem;
using namespace rgcinit;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::kUsage: return kExitUsage;
    case ErrorKind::kData: return kExitData;
    case ErrorKind::kNumerical: return kExitNumerical;
  }
  return kExitData;
}

// Features come from FMAT files, or from CSV when the name ends in ".csv".
struct FeatureSource {
  std::string path;
  bool csv_header = false;
};

FeatureMatrix load_features(const FeatureSource& src) {
  const fs::path p(src.path);
  if (p.extension() == ".csv") return read_csv_features(p, src.csv_header);
  return read_features(p);
}

struct Dataset {
  FeatureMatrix x;
  LabelVector y;
};

Dataset load_dataset(const FeatureSource& features, const std::string& labels) {
  Dataset d{load_features(features), read_labels(labels)};
  check_paired(d.x, d.y);
  return d;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

RgcConfig rgc_config(double epsilon, const std::string& mode) {
  return RgcConfig{epsilon, epsilon_mode_from_string(mode)};
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// fit ------------------------------------------------------------------------

struct FitArgs {
  FeatureSource features;
  std::string labels, method = "rgc", epsilon_mode = "absolute", out;
  double epsilon = 0.1;
};

int run_fit(const FitArgs& a, bool epsilon_given) {
  const Dataset d = load_dataset(a.features, a.labels);
  if (a.method != "rgc" && a.method != "ncc") {
    throw UsageError("--method must be rgc or ncc, got '" + a.method + "'");
  }
  if (a.method == "ncc" && epsilon_given) {
    std::cerr << "warning: --epsilon is ignored by --method ncc\n";
  }
  const auto start = std::chrono::steady_clock::now();
  const ClassStatistics stats = fit_statistics(d.x, d.y);
  const LinearClassifier model =
      a.method == "rgc" ? fit_rgc(stats, rgc_config(a.epsilon, a.epsilon_mode)) : fit_ncc(stats);
  const auto stop = std::chrono::steady_clock::now();
  print_warnings(stats.warnings);
  write_model(model, a.out);
  std::cout << "method " << a.method << "\n";
  if (model.metadata.epsilon) std::cout << "epsilon_eff " << fmt(*model.metadata.epsilon) << "\n";
  std::cout << "fit_seconds " << fmt(std::chrono::duration<double>(stop - start).count()) << "\n";
  return 0;
}

// calibrate ------------------------------------------------------------------

struct CalibrateArgs {
  std::string model, reference, out;
  bool as_printed = false;
};

int run_calibrate(const CalibrateArgs& a) {
  const LinearClassifier model = read_model(a.model);
  const LinearClassifier reference = read_model(a.reference);
  const AlphaRule rule = a.as_printed ? AlphaRule::kAsPrinted : AlphaRule::kMatchReferenceSpread;
  const CalibrationParams p = compute_calibration(model, reference, rule);
  write_model(apply_calibration(model, p), a.out);
  double v_norm = 0.0;
  for (double x : p.v) v_norm += x * x;
  std::cout << "rule " << to_string(p.rule) << "\n"
            << "alpha " << fmt(p.alpha) << "\n";
  if (p.alternate_alpha) std::cout << "alternate_alpha " << fmt(*p.alternate_alpha) << "\n";
  std::cout << "beta " << fmt(p.beta) << "\n"
            << "v_norm " << fmt(std::sqrt(v_norm)) << "\n";
  return 0;
}

// eval -----------------------------------------------------------------------

struct EvalArgs {
  std::string model, labels, out_json;
  FeatureSource features;
};

int run_eval(const EvalArgs& a) {
  const LinearClassifier model = read_model(a.model);
  const Dataset d = load_dataset(a.features, a.labels);
  if (model.dim() != d.x.cols()) {
    throw ValidationError("model dim " + std::to_string(model.dim()) + " differs from feature dim " +
                          std::to_string(d.x.cols()));
  }
  if (d.y.num_classes > model.num_classes()) {
    throw ValidationError("labels declare " + std::to_string(d.y.num_classes) +
                          " classes but the model has " + std::to_string(model.num_classes()));
  }
  const Evaluation e = evaluate(model, d.x, d.y);
  std::cout << "accuracy " << fmt(e.accuracy) << "\n"
            << "mean_cross_entropy " << fmt(e.mean_cross_entropy) << "\n";
  if (!a.out_json.empty()) {
    nlohmann::json doc{{"format_version", 1},
                       {"kind", "evaluation"},
                       {"accuracy", e.accuracy},
                       {"mean_cross_entropy", e.mean_cross_entropy},
                       {"num_samples", d.x.rows()}};
    write_text_file(a.out_json, doc.dump(2) + "\n");
  }
  return 0;
}

// train-lr -------------------------------------------------------------------

struct TrainArgs {
  std::string init = "random", labels, test_labels, trace_out, out;
  FeatureSource features, test_features;
  std::optional<double> init_stddev;
  double epsilon = 0.1;
  std::string epsilon_mode = "absolute";
  bool calibrate = false;
  TrainConfig cfg;
};

int run_train(TrainArgs a) {
  const Dataset d = load_dataset(a.features, a.labels);
  std::optional<Dataset> test;
  if (!a.test_features.path.empty() || !a.test_labels.empty()) {
    if (a.test_features.path.empty() || a.test_labels.empty()) {
      throw UsageError("--test-features and --test-labels go together");
    }
    test = load_dataset(a.test_features, a.test_labels);
  }

  BenchConfig bc;
  bc.train = a.cfg;
  bc.rgc = rgc_config(a.epsilon, a.epsilon_mode);
  bc.random_stddev = a.init_stddev;
  bc.calibrate_to_random = a.calibrate;

  LinearClassifier init;
  if (a.init == "rgc" || a.init == "ncc" || a.init == "random") {
    init = make_initial_head(init_method_from_string(a.init), d.x, d.y, bc);
  } else {
    init = read_model(a.init);
  }

  std::optional<LabeledSet> test_set;
  if (test) test_set.emplace(LabeledSet{test->x, test->y});
  const TrainResult r = train(init, d.x, d.y, a.cfg, test_set);
  write_model(r.model, a.out);
  if (!a.trace_out.empty()) write_text_file(a.trace_out, r.trace.to_csv());
  const TracePoint& last = r.trace.points.back();
  std::cout << "iterations " << a.cfg.iterations << "\n"
            << "train_loss " << fmt(last.train_loss) << "\n"
            << "train_accuracy " << fmt(last.train_accuracy) << "\n";
  if (last.test_loss) {
    std::cout << "test_loss " << fmt(*last.test_loss) << "\n"
              << "test_accuracy " << fmt(*last.test_accuracy) << "\n";
  }
  return 0;
}

// cmd-study ------------------------------------------------------------------

struct CmdArgs {
  FeatureSource features;
  std::string labels, out;
  std::size_t pca_dims = 2;
};

int run_cmd_study(const CmdArgs& a) {
  const Dataset d = load_dataset(a.features, a.labels);
  const CmdReport r = cmd_study(d.x, d.y, a.pca_dims);
  if (!a.out.empty()) write_text_file(a.out, r.to_text());
  std::cout << "mean_cmd " << fmt(r.mean_cmd) << "\n"
            << "var_cmd " << fmt(r.var_cmd) << "\n"
            << "explained_variance_ratio " << fmt(r.explained_variance_ratio) << "\n";
  return 0;
}

// synth ----------------------------------------------------------------------

struct SynthArgs {
  SynthSpec spec;
  std::string cov = "shared", out_prefix;
};

int run_synth(SynthArgs a) {
  a.spec.covariance_mode = covariance_mode_from_string(a.cov);
  const SynthData data = generate(a.spec);
  write_features(data.features, a.out_prefix + ".fmat");
  write_labels(data.labels, a.out_prefix + ".lvec");
  write_truth(data.truth, a.spec, a.out_prefix + ".truth.json");
  std::cout << "wrote " << a.out_prefix << ".fmat, .lvec, .truth.json ("
            << data.features.rows() << " x " << data.features.cols() << ")\n";
  return 0;
}

// bayes ----------------------------------------------------------------------

int run_bayes(const std::string& truth, const std::string& out) {
  write_model(bayes_classifier(read_truth(truth)), out);
  return 0;
}

// bench ----------------------------------------------------------------------

struct BenchArgs {
  FeatureSource features, test_features;
  std::string labels, test_labels, methods = "rgc,ncc,random", out;
  double epsilon = 0.1;
  std::string epsilon_mode = "absolute";
  bool omit_timing = false;
  BenchConfig cfg;
};

int run_bench_cmd(BenchArgs a) {
  a.cfg.methods = parse_method_list(a.methods);
  a.cfg.rgc = rgc_config(a.epsilon, a.epsilon_mode);
  a.cfg.record_timing = !a.omit_timing;
  const Dataset d = load_dataset(a.features, a.labels);
  std::optional<Dataset> test;
  if (!a.test_features.path.empty() || !a.test_labels.empty()) {
    if (a.test_features.path.empty() || a.test_labels.empty()) {
      throw UsageError("--test-features and --test-labels go together");
    }
    test = load_dataset(a.test_features, a.test_labels);
  }
  std::optional<LabeledSet> test_set;
  if (test) test_set.emplace(LabeledSet{test->x, test->y});
  const BenchReport r = run_bench(d.x, d.y, a.cfg, test_set);
  if (!a.out.empty()) write_text_file(a.out, r.to_text());
  std::printf("%-8s %10s %10s %10s %10s %12s %10s\n", "method", "init_acc", "init_ce", "final_acc",
              "final_ce", "iters_to_thr", "fit_s");
  for (const auto& m : r.methods) {
    const std::string iters =
        m.iters_to_threshold ? std::to_string(*m.iters_to_threshold) : "not-reached";
    std::printf("%-8s %10.4f %10.4f %10.4f %10.4f %12s %10.4g\n",
                std::string(to_string(m.method)).c_str(), m.init_accuracy, m.init_ce,
                m.final_accuracy, m.final_ce, iters.c_str(), m.wallclock_fit_seconds);
  }
  std::printf("threshold %.10g\n", r.threshold);
  return 0;
}

void add_features(CLI::App* cmd, FeatureSource& f, const std::string& name, bool required) {
  auto* opt = cmd->add_option("--" + name, f.path, "FMAT file, or CSV when the name ends in .csv");
  if (required) opt->required();
}

void add_train_options(CLI::App* cmd, TrainConfig& cfg) {
  cmd->add_option("--lr", cfg.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--iters", cfg.iterations, "Gradient steps")->capture_default_str();
  cmd->add_option("--batch", cfg.batch_size, "Mini-batch size (0 = full batch)")->capture_default_str();
  cmd->add_option("--weight-decay", cfg.weight_decay, "L2 decay on W and b")->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "Seed for random init and batch order")->capture_default_str();
  cmd->add_option("--log-every", cfg.log_every, "Trace interval in iterations")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form classifier head initialization and evaluation"};
  app.require_subcommand(1);
  bool csv_header = false;
  app.add_flag("--csv-header", csv_header, "CSV feature files start with a header line");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit an RGC or NCC head from features and labels");
  add_features(fit_cmd, fit.features, "features", true);
  fit_cmd->add_option("--labels", fit.labels, "LVEC label file")->required();
  fit_cmd->add_option("--method", fit.method, "rgc or ncc")->capture_default_str();
  auto* eps_opt = fit_cmd->add_option("--epsilon", fit.epsilon, "Ridge added to the covariance")
                      ->capture_default_str();
  fit_cmd->add_option("--epsilon-mode", fit.epsilon_mode, "absolute or relative (times trace/d)")
      ->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "Model file to write")->required();

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Match a head's weight moments to a reference head");
  cal_cmd->add_option("--model", cal.model)->required();
  cal_cmd->add_option("--reference", cal.reference)->required();
  cal_cmd->add_option("--out", cal.out)->required();
  cal_cmd->add_flag("--eq19-as-printed", cal.as_printed,
                    "Use alpha = sqrt(Var(w) / Var(w_ref)) instead of the moment-matching ratio");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy and mean cross-entropy of a model");
  eval_cmd->add_option("--model", ev.model)->required();
  add_features(eval_cmd, ev.features, "features", true);
  eval_cmd->add_option("--labels", ev.labels)->required();
  eval_cmd->add_option("--out-json", ev.out_json, "Also write the results as JSON");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train-lr", "Train a softmax head by gradient descent");
  tr.cfg.iterations = 100;
  tr.cfg.learning_rate = 0.1;
  train_cmd->add_option("--init", tr.init, "rgc, ncc, random, or a model file")->capture_default_str();
  train_cmd->add_option("--init-stddev", tr.init_stddev, "Random init stddev (default sqrt(2/d))");
  train_cmd->add_option("--epsilon", tr.epsilon)->capture_default_str();
  train_cmd->add_option("--epsilon-mode", tr.epsilon_mode)->capture_default_str();
  train_cmd->add_flag("--calibrate", tr.calibrate,
                      "Calibrate rgc/ncc init against the random head for this seed");
  add_features(train_cmd, tr.features, "features", true);
  train_cmd->add_option("--labels", tr.labels)->required();
  add_features(train_cmd, tr.test_features, "test-features", false);
  train_cmd->add_option("--test-labels", tr.test_labels);
  add_train_options(train_cmd, tr.cfg);
  train_cmd->add_option("--trace-out", tr.trace_out, "CSV training trace");
  train_cmd->add_option("--out", tr.out, "Trained model file")->required();

  CmdArgs cm;
  auto* cmd_cmd = app.add_subcommand("cmd-study", "Per-class covariance distance study");
  add_features(cmd_cmd, cm.features, "features", true);
  cmd_cmd->add_option("--labels", cm.labels)->required();
  cmd_cmd->add_option("--pca-dims", cm.pca_dims)->capture_default_str();
  cmd_cmd->add_option("--out", cm.out, "Report file");

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Generate Gaussian class data with known parameters");
  synth_cmd->add_option("--classes", sy.spec.num_classes)->required();
  synth_cmd->add_option("--dim", sy.spec.dim)->required();
  synth_cmd->add_option("--per-class", sy.spec.samples_per_class)->required();
  synth_cmd->add_option("--seed", sy.spec.seed)->capture_default_str();
  synth_cmd->add_option("--cov", sy.cov, "shared or distinct")->capture_default_str();
  synth_cmd->add_option("--cond", sy.spec.condition_number)->capture_default_str();
  synth_cmd->add_option("--mean-scale", sy.spec.mean_scale)->capture_default_str();
  synth_cmd->add_option("--split", sy.spec.split, "Sample draw index; 0 train, 1 test, ...")
      ->capture_default_str();
  synth_cmd->add_option("--out-prefix", sy.out_prefix)->required();

  std::string truth_path, bayes_out;
  auto* bayes_cmd = app.add_subcommand("bayes", "Write the optimal linear rule for a synth truth file");
  bayes_cmd->add_option("--truth", truth_path)->required();
  bayes_cmd->add_option("--out", bayes_out)->required();

  BenchArgs be;
  be.cfg.train.iterations = 200;
  be.cfg.train.learning_rate = 0.1;
  auto* bench_cmd = app.add_subcommand("bench", "Compare initializations under one training setup");
  add_features(bench_cmd, be.features, "features", true);
  bench_cmd->add_option("--labels", be.labels)->required();
  add_features(bench_cmd, be.test_features, "test-features", false);
  bench_cmd->add_option("--test-labels", be.test_labels);
  bench_cmd->add_option("--methods", be.methods)->capture_default_str();
  add_train_options(bench_cmd, be.cfg.train);
  bench_cmd->add_option("--threshold-margin", be.cfg.threshold_margin)->capture_default_str();
  bench_cmd->add_option("--epsilon", be.epsilon)->capture_default_str();
  bench_cmd->add_option("--epsilon-mode", be.epsilon_mode)->capture_default_str();
  bench_cmd->add_flag("--calibrate", be.cfg.calibrate_to_random,
                      "Calibrate rgc/ncc heads against the random head for this seed");
  bench_cmd->add_flag("--omit-timing", be.omit_timing, "Write zero fit times for byte-stable reports");
  bench_cmd->add_option("--out", be.out, "Report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  for (FeatureSource* f : {&fit.features, &ev.features, &tr.features, &tr.test_features,
                           &cm.features, &be.features, &be.test_features}) {
    f->csv_header = csv_header;
  }

  try {
    if (*fit_cmd) return run_fit(fit, eps_opt->count() > 0);
    if (*cal_cmd) return run_calibrate(cal);
    if (*eval_cmd) return run_eval(ev);
    if (*train_cmd) return run_train(tr);
    if (*cmd_cmd) return run_cmd_study(cm);
    if (*synth_cmd) return run_synth(sy);
    if (*bayes_cmd) return run_bayes(truth_path, bayes_out);
    if (*bench_cmd) return run_bench_cmd(be);
  } catch (const DivergedError& e) {
    std::cerr << "error: " << e.what() << " (iteration " << e.iteration() << ")\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
