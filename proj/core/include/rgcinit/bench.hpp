#pragma once

// Side-by-side comparison of head initializations under one training setup:
// accuracy and cross-entropy at initialization, after training, closed-form
// fit time, and the first logged iteration whose training loss reaches
// (best final loss over all methods) * (1 + threshold_margin).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rgcinit/logistic.hpp"
#include "rgcinit/model.hpp"
#include "rgcinit/rgc.hpp"
#include "rgcinit/tensor_store.hpp"

namespace rgcinit {

enum class InitMethod { kRgc, kNcc, kRandom };

std::string_view to_string(InitMethod m);
InitMethod init_method_from_string(std::string_view s);
/// Parses "rgc,ncc,random"; throws UsageError on unknown or repeated names.
std::vector<InitMethod> parse_method_list(std::string_view list);

struct BenchConfig {
  std::vector<InitMethod> methods{InitMethod::kRgc, InitMethod::kNcc, InitMethod::kRandom};
  TrainConfig train;
  double threshold_margin = 0.05;
  RgcConfig rgc;
  std::optional<double> random_stddev;  // MSRA sqrt(2 / d) when absent
  bool calibrate_to_random = false;     // rescale closed-form heads to the random head's moments
  bool record_timing = true;
};

struct MethodResult {
  InitMethod method = InitMethod::kRgc;
  double init_accuracy = 0.0;
  double init_ce = 0.0;
  double final_accuracy = 0.0;
  double final_ce = 0.0;
  std::optional<std::size_t> iters_to_threshold;  // empty means not reached
  double wallclock_fit_seconds = 0.0;
  double final_train_loss = 0.0;
  TrainTrace trace;
};

struct BenchReport {
  BenchConfig config;
  double threshold = 0.0;
  std::vector<MethodResult> methods;

  const MethodResult& result(InitMethod m) const;
  std::string to_text() const;
};

/// Builds the initial head for a method. Closed-form heads are timed around
/// statistics and fit only; `seconds` receives that time when non-null.
LinearClassifier make_initial_head(InitMethod method, const FeatureMatrix& x, const LabelVector& y,
                                   const BenchConfig& cfg, double* seconds = nullptr);

/// Accuracies and cross-entropies are measured on `test` when given, else on
/// the training set. Trainings run concurrently up to RGC_THREADS workers.
BenchReport run_bench(const FeatureMatrix& x, const LabelVector& y, const BenchConfig& cfg,
                      std::optional<LabeledSet> test = std::nullopt);

/// First logged iteration with train_loss <= threshold.
std::optional<std::size_t> iterations_to_threshold(const TrainTrace& trace, double threshold);

}  // namespace rgcinit
