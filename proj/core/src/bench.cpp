#include "rgcinit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <limits>

#include <nlohmann/json.hpp>

#include "rgcinit/calibration.hpp"
#include "rgcinit/class_stats.hpp"
#include "rgcinit/errors.hpp"
#include "rgcinit/parallel.hpp"

namespace rgcinit {

std::string_view to_string(InitMethod m) {
  switch (m) {
    case InitMethod::kRgc: return "rgc";
    case InitMethod::kNcc: return "ncc";
    case InitMethod::kRandom: return "random";
  }
  return "rgc";
}

InitMethod init_method_from_string(std::string_view s) {
  if (s == "rgc") return InitMethod::kRgc;
  if (s == "ncc") return InitMethod::kNcc;
  if (s == "random") return InitMethod::kRandom;
  throw UsageError("unknown method '" + std::string(s) + "' (expected rgc, ncc or random)");
}

std::vector<InitMethod> parse_method_list(std::string_view list) {
  std::vector<InitMethod> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    const InitMethod m = init_method_from_string(list.substr(start, comma - start));
    if (std::find(out.begin(), out.end(), m) != out.end()) {
      throw UsageError("method '" + std::string(to_string(m)) + "' listed twice");
    }
    out.push_back(m);
    start = comma + 1;
  }
  return out;
}

const MethodResult& BenchReport::result(InitMethod m) const {
  for (const auto& r : methods)
    if (r.method == m) return r;
  throw UsageError("method '" + std::string(to_string(m)) + "' is not in the report");
}

std::optional<std::size_t> iterations_to_threshold(const TrainTrace& trace, double threshold) {
  for (const auto& p : trace.points)
    if (p.train_loss <= threshold) return p.iteration;
  return std::nullopt;
}

LinearClassifier make_initial_head(InitMethod method, const FeatureMatrix& x, const LabelVector& y,
                                   const BenchConfig& cfg, double* seconds) {
  const std::size_t k = y.num_classes;
  const std::size_t d = x.cols();
  if (method == InitMethod::kRandom) {
    if (seconds) *seconds = 0.0;
    return random_init(k, d, cfg.random_stddev, cfg.train.seed);
  }
  const auto start = std::chrono::steady_clock::now();
  const ClassStatistics stats = fit_statistics(x, y);
  LinearClassifier head = method == InitMethod::kRgc ? fit_rgc(stats, cfg.rgc) : fit_ncc(stats);
  const auto stop = std::chrono::steady_clock::now();
  if (seconds) *seconds = std::chrono::duration<double>(stop - start).count();
  if (cfg.calibrate_to_random) {
    const LinearClassifier ref = random_init(k, d, cfg.random_stddev, cfg.train.seed);
    head = apply_calibration(head, compute_calibration(head, ref));
  }
  return head;
}

BenchReport run_bench(const FeatureMatrix& x, const LabelVector& y, const BenchConfig& cfg,
                      std::optional<LabeledSet> test) {
  if (cfg.methods.empty()) throw UsageError("bench needs at least one method");
  if (!(cfg.threshold_margin >= 0.0)) throw UsageError("threshold margin must be non-negative");
  check_paired(x, y);

  BenchReport report;
  report.config = cfg;
  report.methods.resize(cfg.methods.size());
  std::vector<std::exception_ptr> errors(cfg.methods.size());

  for_each_chunk(cfg.methods.size(), configured_threads(), [&](std::size_t i) {
    try {
      MethodResult& r = report.methods[i];
      r.method = cfg.methods[i];
      double seconds = 0.0;
      const LinearClassifier init = make_initial_head(r.method, x, y, cfg, &seconds);
      r.wallclock_fit_seconds = cfg.record_timing ? seconds : 0.0;
      const Evaluation before = test ? evaluate(init, test->features, test->labels)
                                     : evaluate(init, x, y);
      r.init_accuracy = before.accuracy;
      r.init_ce = before.mean_cross_entropy;
      TrainResult trained = train(init, x, y, cfg.train, test);
      const Evaluation after = test ? evaluate(trained.model, test->features, test->labels)
                                    : evaluate(trained.model, x, y);
      r.final_accuracy = after.accuracy;
      r.final_ce = after.mean_cross_entropy;
      r.final_train_loss = trained.trace.points.back().train_loss;
      r.trace = std::move(trained.trace);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : report.methods) best = std::min(best, r.final_train_loss);
  report.threshold = best * (1.0 + cfg.threshold_margin);
  for (auto& r : report.methods) r.iters_to_threshold = iterations_to_threshold(r.trace, report.threshold);
  return report;
}

std::string BenchReport::to_text() const {
  using nlohmann::json;
  json doc;
  doc["format_version"] = 1;
  doc["kind"] = "bench-report";
  json methods_json = json::array();
  for (const auto& r : methods) {
    json m;
    m["method"] = std::string(to_string(r.method));
    m["init_accuracy"] = r.init_accuracy;
    m["init_ce"] = r.init_ce;
    m["final_accuracy"] = r.final_accuracy;
    m["final_ce"] = r.final_ce;
    m["final_train_loss"] = r.final_train_loss;
    if (r.iters_to_threshold) {
      m["iters_to_threshold"] = *r.iters_to_threshold;
    } else {
      m["iters_to_threshold"] = "not-reached";
    }
    m["wallclock_fit_seconds"] = r.wallclock_fit_seconds;
    methods_json.push_back(std::move(m));
  }
  doc["methods"] = std::move(methods_json);
  doc["threshold"] = threshold;
  json names = json::array();
  for (auto m : config.methods) names.push_back(std::string(to_string(m)));
  doc["environment"] = {
      {"seed", config.train.seed},
      {"methods", std::move(names)},
      {"learning_rate", config.train.learning_rate},
      {"iterations", config.train.iterations},
      {"batch_size", config.train.batch_size},
      {"weight_decay", config.train.weight_decay},
      {"log_every", config.train.log_every},
      {"threshold_margin", config.threshold_margin},
      {"epsilon", config.rgc.epsilon},
      {"epsilon_mode", std::string(to_string(config.rgc.mode))},
      {"calibrate_to_random", config.calibrate_to_random},
      {"timing_recorded", config.record_timing},
  };
  return doc.dump(2) + "\n";
}

}  // namespace rgcinit
