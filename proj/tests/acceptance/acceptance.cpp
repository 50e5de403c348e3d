// Acceptance suite. Prints one PASS/FAIL line per criterion with its runtime.
//
//   rgcinit_acceptance            run everything
//   rgcinit_acceptance --only 4   run a single criterion
//
// Exit status is 0 only if every selected criterion passed.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rgcinit/bench.hpp"
#include "rgcinit/calibration.hpp"
#include "rgcinit/class_stats.hpp"
#include "rgcinit/cmd.hpp"
#include "rgcinit/errors.hpp"
#include "rgcinit/logistic.hpp"
#include "rgcinit/model.hpp"
#include "rgcinit/random.hpp"
#include "rgcinit/rgc.hpp"
#include "rgcinit/synth.hpp"
#include "rgcinit/tensor_store.hpp"

namespace {

using namespace rgcinit;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0 means no runtime limit
  std::function<Outcome()> run;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double accuracy_of(const LinearClassifier& c, const FeatureMatrix& x, const LabelVector& y) {
  return evaluate(c, x, y).accuracy;
}

struct Split {
  SynthData train;
  SynthData test;
};

Split make_split(SynthSpec spec, std::size_t test_per_class) {
  spec.split = 0;
  Split s{generate(spec), {}};
  spec.split = 1;
  spec.samples_per_class = test_per_class;
  s.test = generate(spec);
  return s;
}

// Criteria 1 and 2 share one instance.
SynthSpec bayes_instance() {
  SynthSpec spec;
  spec.num_classes = 10;
  spec.dim = 64;
  spec.samples_per_class = 1000;
  spec.seed = 7;
  spec.mean_scale = 0.06;
  spec.condition_number = 100.0;
  return spec;
}

const RgcConfig kRgcRelative{1e-3, EpsilonMode::kRelative};

Outcome bayes_recovery() {
  Split s = make_split(bayes_instance(), 1000);
  LinearClassifier rgc = fit_rgc(fit_statistics(s.train.features, s.train.labels), kRgcRelative);
  LinearClassifier bayes = bayes_classifier(s.train.truth);
  double a_rgc = 100.0 * accuracy_of(rgc, s.test.features, s.test.labels);
  double a_bayes = 100.0 * accuracy_of(bayes, s.test.features, s.test.labels);
  double gap = std::abs(a_rgc - a_bayes);
  return {gap <= 1.0, fmt("seed 7: rgc %.2f%%, bayes %.2f%%, |gap| %.2f <= 1.00", a_rgc, a_bayes, gap)};
}

Outcome init_ordering() {
  Split s = make_split(bayes_instance(), 1000);
  ClassStatistics st = fit_statistics(s.train.features, s.train.labels);
  double a_rgc = 100.0 * accuracy_of(fit_rgc(st, kRgcRelative), s.test.features, s.test.labels);
  double a_ncc = 100.0 * accuracy_of(fit_ncc(st), s.test.features, s.test.labels);
  double a_rand = 100.0 * accuracy_of(random_init(10, 64, std::nullopt, 7), s.test.features,
                                      s.test.labels);
  bool ok = a_rgc >= a_ncc - 0.5 && a_rgc >= a_rand + 20.0;
  return {ok, fmt("rgc %.2f%%, ncc %.2f%%, random %.2f%%", a_rgc, a_ncc, a_rand)};
}

Outcome lr_equivalence() {
  Split s = make_split(bayes_instance(), 1000);
  double a_rgc = 100.0 * accuracy_of(fit_rgc(fit_statistics(s.train.features, s.train.labels),
                                             kRgcRelative),
                                     s.test.features, s.test.labels);

  // Full-batch descent in chunks until the objective settles.
  constexpr std::size_t kChunk = 250;
  constexpr std::size_t kMaxIters = 5000;
  constexpr double kTol = 1e-5;
  TrainConfig cfg;
  cfg.learning_rate = 8.0;
  cfg.iterations = kChunk;
  cfg.weight_decay = 1e-4;
  cfg.log_every = kChunk;
  LinearClassifier model = random_init(10, 64, std::nullopt, 7);
  BackoffResult first = train_with_backoff(model, s.train.features, s.train.labels, cfg);
  cfg.learning_rate = first.learning_rate;
  model = first.result.model;
  double prev = first.result.trace.points.back().objective;
  std::size_t iters = kChunk;
  bool settled = false;
  while (iters < kMaxIters) {
    TrainResult r = train(model, s.train.features, s.train.labels, cfg);
    model = r.model;
    iters += kChunk;
    double obj = cross_entropy(model, s.train.features, s.train.labels, cfg.weight_decay);
    if (std::abs(prev - obj) <= kTol * std::abs(obj)) {
      settled = true;
      break;
    }
    prev = obj;
  }
  double a_lr = 100.0 * accuracy_of(model, s.test.features, s.test.labels);
  double excess = a_lr - a_rgc;
  return {excess <= 2.0,
          fmt("lr %.2f%% after %zu iters at rate %g (%s), rgc init %.2f%%, excess %.2f <= 2.00",
              a_lr, iters, cfg.learning_rate, settled ? "settled" : "iteration cap", a_rgc,
              excess)};
}

Outcome convergence_speed() {
  SynthSpec spec;
  spec.num_classes = 20;
  spec.dim = 128;
  spec.samples_per_class = 100;
  spec.seed = 11;
  spec.mean_scale = 0.08;
  spec.condition_number = 10.0;
  SynthData d = generate(spec);

  BenchConfig cfg;
  cfg.methods = {InitMethod::kRgc, InitMethod::kRandom};
  cfg.train.learning_rate = 1.0;
  cfg.train.iterations = 2000;
  cfg.train.weight_decay = 1e-3;
  cfg.train.seed = 1;
  cfg.train.log_every = 10;
  cfg.threshold_margin = 0.05;
  cfg.rgc = kRgcRelative;
  cfg.record_timing = false;
  BenchReport rep = run_bench(d.features, d.labels, cfg);
  auto it_rgc = rep.result(InitMethod::kRgc).iters_to_threshold;
  auto it_rand = rep.result(InitMethod::kRandom).iters_to_threshold;
  auto show = [](const std::optional<std::size_t>& v) {
    return v ? std::to_string(*v) : std::string("not reached");
  };
  bool ok = it_rgc && it_rand && 2 * *it_rgc <= *it_rand;
  return {ok, fmt("threshold %.6f: rgc %s iters, random %s iters", rep.threshold,
                  show(it_rgc).c_str(), show(it_rand).c_str())};
}

Outcome unique_minimum() {
  SynthSpec spec;
  spec.num_classes = 5;
  spec.dim = 16;
  spec.samples_per_class = 100;
  spec.seed = 5;
  spec.mean_scale = 0.5;
  spec.condition_number = 10.0;
  SynthData d = generate(spec);

  TrainConfig cfg;
  cfg.learning_rate = 4.0;
  cfg.iterations = 20000;
  cfg.weight_decay = 1e-3;
  cfg.log_every = 1000;
  LinearClassifier from_rgc = fit_rgc(fit_statistics(d.features, d.labels), kRgcRelative);
  LinearClassifier from_rand = random_init(5, 16, std::nullopt, 5);
  BackoffResult a = train_with_backoff(from_rgc, d.features, d.labels, cfg);
  BackoffResult b = train_with_backoff(from_rand, d.features, d.labels, cfg);
  const TracePoint& ea = a.result.trace.points.back();
  const TracePoint& eb = b.result.trace.points.back();
  double d_obj = std::abs(ea.objective - eb.objective);
  double d_loss = std::abs(ea.train_loss - eb.train_loss);
  return {d_obj <= 1e-4 && d_loss <= 1e-4,
          fmt("objective %.10f vs %.10f (diff %.2e), train loss diff %.2e, rates %g / %g",
              ea.objective, eb.objective, d_obj, d_loss, a.learning_rate, b.learning_rate)};
}

struct OverfitRun {
  std::size_t iteration = 0;
  double rgc_gap = 0.0;     // |log(train/test)| of the rgc run
  double random_gap = 0.0;  // same for the random run
};

OverfitRun overfit_instance(std::uint64_t seed) {
  SynthSpec spec;
  spec.num_classes = 10;
  spec.dim = 256;
  spec.samples_per_class = 30;
  spec.seed = seed;
  spec.mean_scale = 0.2;
  spec.condition_number = 10.0;
  Split s = make_split(spec, 500);

  BenchConfig cfg;
  cfg.train.learning_rate = 0.5;
  cfg.train.iterations = 2000;
  cfg.train.weight_decay = 5e-4;
  cfg.train.seed = seed;
  cfg.train.log_every = 10;
  cfg.rgc = {1.0, EpsilonMode::kRelative};
  cfg.calibrate_to_random = true;
  LabeledSet test{s.test.features, s.test.labels};
  const FeatureMatrix& x = s.train.features;
  const LabelVector& y = s.train.labels;
  TrainResult rnd = train(make_initial_head(InitMethod::kRandom, x, y, cfg), x, y, cfg.train, test);
  TrainResult rgc = train(make_initial_head(InitMethod::kRgc, x, y, cfg), x, y, cfg.train, test);

  const auto& pr = rnd.trace.points;
  std::size_t best = 0;
  for (std::size_t i = 1; i < pr.size(); ++i) {
    if (*pr[i].test_loss < *pr[best].test_loss) best = i;
  }
  OverfitRun out;
  out.iteration = pr[best].iteration;
  out.random_gap = std::abs(std::log(*pr[best].loss_ratio));
  out.rgc_gap = std::abs(std::log(*rgc.trace.points[best].loss_ratio));
  return out;
}

constexpr std::uint64_t kOverfitSeed = 1;

Outcome overfit_direction() {
  OverfitRun main = overfit_instance(kOverfitSeed);
  bool ok = main.rgc_gap < main.random_gap;
  std::string detail = fmt("seed %llu at iter %zu: rgc %.4f vs random %.4f",
                           static_cast<unsigned long long>(kOverfitSeed), main.iteration,
                           main.rgc_gap, main.random_gap);
  int wins = 0;
  std::ostringstream report;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    OverfitRun r = seed == kOverfitSeed ? main : overfit_instance(seed);
    if (r.rgc_gap < r.random_gap) ++wins;
    report << fmt("      seed %2llu iter %4zu  rgc %.4f  random %.4f  %s\n",
                  static_cast<unsigned long long>(seed), r.iteration, r.rgc_gap, r.random_gap,
                  r.rgc_gap < r.random_gap ? "rgc closer" : "random closer");
  }
  detail += fmt("; seeds 1-10 (reported only): rgc closer on %d/10\n", wins) + report.str();
  if (!detail.empty() && detail.back() == '\n') detail.pop_back();
  return {ok, detail};
}

Outcome cmd_pipeline() {
  SynthSpec spec;
  spec.num_classes = 10;
  spec.dim = 32;
  spec.samples_per_class = 500;
  spec.seed = 3;
  spec.mean_scale = 1.0;
  spec.condition_number = 100.0;
  SynthData shared = generate(spec);
  spec.covariance_mode = CovarianceMode::kDistinct;
  SynthData distinct = generate(spec);
  double m_shared = cmd_study(shared.features, shared.labels, 2).mean_cmd;
  double m_distinct = cmd_study(distinct.features, distinct.labels, 2).mean_cmd;
  bool ok = m_shared <= 0.05 && m_distinct >= 0.3;
  return {ok, fmt("shared mean_cmd %.4f (<= 0.05 %s), distinct mean_cmd %.4f (>= 0.3 %s)",
                  m_shared, m_shared <= 0.05 ? "ok" : "FAILS", m_distinct,
                  m_distinct >= 0.3 ? "ok" : "FAILS")};
}

double rel_diff(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), std::numeric_limits<double>::min());
}

Outcome calibration_moments() {
  SynthSpec spec;
  spec.num_classes = 10;
  spec.dim = 32;
  spec.samples_per_class = 200;
  spec.seed = 8;
  spec.condition_number = 10.0;
  SynthData d = generate(spec);
  LinearClassifier fresh = fit_rgc(fit_statistics(d.features, d.labels), kRgcRelative);

  // Reference head with a different class count and non-trivial moments.
  LinearClassifier ref = random_init(100, 32, 0.3, 99);
  RandomStream rs(99, 1);
  for (std::size_t j = 0; j < ref.dim(); ++j) {
    double shift = rs.normal();
    for (std::size_t k = 0; k < ref.num_classes(); ++k) ref.weights(k, j) += shift;
  }
  for (double& b : ref.bias) b = 0.5 + rs.normal();

  LinearClassifier cal = apply_calibration(fresh, compute_calibration(fresh, ref));
  WeightMoments mc = weight_moments(cal);
  WeightMoments mr = weight_moments(ref);
  double e_w = rel_diff(mc.mean_weight, mr.mean_weight);
  double e_b = std::abs(mc.mean_bias - mr.mean_bias) / std::abs(mr.mean_bias);
  double e_v = std::abs(mc.spread - mr.spread) / mr.spread;
  bool moments_ok = e_w <= 1e-10 && e_b <= 1e-10 && e_v <= 1e-10;

  RandomStream px(8, 2);
  FeatureMatrix pts(1000, 32);
  for (double& v : pts.data()) v = 3.0 * px.normal();
  Matrix before = compute_logits(fresh, pts);
  Matrix after = compute_logits(cal, pts);
  std::size_t eligible = 0, agree = 0;
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    std::vector<double> row(before.row(i).begin(), before.row(i).end());
    std::sort(row.begin(), row.end(), std::greater<>());
    if (row[0] - row[1] <= 1e-9) continue;
    ++eligible;
    if (argmax_lowest(before.row(i)) == argmax_lowest(after.row(i))) ++agree;
  }
  bool argmax_ok = agree == eligible;
  return {moments_ok && argmax_ok,
          fmt("relative errors E(w) %.1e, E(b) %.1e, Var(w) %.1e; argmax kept on %zu/%zu points",
              e_w, e_b, e_v, agree, eligible)};
}

Outcome ncc_limit() {
  std::size_t eligible = 0, agree = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthSpec spec;
    spec.num_classes = 5;
    spec.dim = 16;
    spec.samples_per_class = 50;
    spec.seed = 1000 + seed;
    spec.condition_number = 10.0;
    Split s = make_split(spec, 200);
    ClassStatistics st = fit_statistics(s.train.features, s.train.labels);
    LinearClassifier rgc = fit_rgc(st, {1e6, EpsilonMode::kRelative});
    LinearClassifier ncc = fit_ncc(st);
    Matrix sn = compute_logits(ncc, s.test.features);
    Matrix sr = compute_logits(rgc, s.test.features);
    for (std::size_t i = 0; i < sn.rows(); ++i) {
      std::vector<double> row(sn.row(i).begin(), sn.row(i).end());
      std::sort(row.begin(), row.end(), std::greater<>());
      if (row[0] - row[1] <= 1e-6) continue;
      ++eligible;
      if (argmax_lowest(sn.row(i)) == argmax_lowest(sr.row(i))) ++agree;
    }
  }
  return {agree == eligible, fmt("20 instances: agreement on %zu/%zu points", agree, eligible)};
}

Outcome gradient_oracle() {
  RandomStream rs(2024, 0);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    std::size_t k = 2 + rs.uniform_index(4);
    std::size_t d = 1 + rs.uniform_index(6);
    std::size_t n = 1 + rs.uniform_index(10);
    double decay = inst % 2 ? 1e-2 : 0.0;
    FeatureMatrix x(n, d);
    for (double& v : x.data()) v = rs.normal();
    LabelVector y;
    y.num_classes = k;
    for (std::size_t i = 0; i < n; ++i) y.labels.push_back(static_cast<std::uint32_t>(rs.uniform_index(k)));
    LinearClassifier c;
    c.weights = Matrix(k, d);
    for (double& v : c.weights.data()) v = rs.normal();
    c.bias.resize(k);
    for (double& v : c.bias) v = rs.normal();

    Gradient g;
    cross_entropy_gradient(c, x, y, decay, g);
    std::vector<double> analytic(g.weights.data().begin(), g.weights.data().end());
    analytic.insert(analytic.end(), g.bias.begin(), g.bias.end());

    std::vector<double> numeric;
    auto probe = [&](double& p) {
      const double h = 1e-5;
      double keep = p;
      p = keep + h;
      double up = cross_entropy(c, x, y, decay);
      p = keep - h;
      double down = cross_entropy(c, x, y, decay);
      p = keep;
      numeric.push_back((up - down) / (2.0 * h));
    };
    for (double& p : c.weights.data()) probe(p);
    for (double& p : c.bias) probe(p);
    worst = std::max(worst, rel_diff(analytic, numeric));
  }
  return {worst <= 1e-5, fmt("50 instances: worst relative error %.2e <= 1e-5", worst)};
}

Outcome format_round_trips() {
  RandomStream rs(11, 0);
  std::vector<std::string> problems;

  // Awkward binary64 values: random finite bit patterns plus edge cases.
  FeatureMatrix m(7, 9);
  auto data = m.data();
  for (double& v : data) {
    double x;
    do {
      x = std::bit_cast<double>(rs.next_u64());
    } while (!std::isfinite(x));
    v = x;
  }
  data[0] = -0.0;
  data[1] = std::numeric_limits<double>::denorm_min();
  data[2] = std::numeric_limits<double>::max();
  data[3] = -std::numeric_limits<double>::lowest();
  auto bytes64 = encode_features(m, Dtype::kBinary64);
  auto back64 = decode_features(bytes64);
  if (std::memcmp(back64.values.data().data(), m.data().data(), m.size() * sizeof(double)) != 0 ||
      encode_features(back64.values, Dtype::kBinary64) != bytes64) {
    problems.push_back("FMAT binary64");
  }

  FeatureMatrix m32(5, 3);
  for (double& v : m32.data()) v = static_cast<float>(rs.normal());
  auto bytes32 = encode_features(m32, Dtype::kBinary32);
  auto back32 = decode_features(bytes32);
  if (!(back32.values == m32) || back32.stored_as != Dtype::kBinary32 ||
      encode_features(back32.values, Dtype::kBinary32) != bytes32) {
    problems.push_back("FMAT binary32");
  }

  LabelVector y;
  y.num_classes = 4294967295ull;
  for (int i = 0; i < 50; ++i) y.labels.push_back(rs.next_u32() % 4294967295u);
  auto lbytes = encode_labels(y);
  if (!(decode_labels(lbytes) == y) || encode_labels(decode_labels(lbytes)) != lbytes) {
    problems.push_back("LVEC");
  }

  LinearClassifier c;
  c.weights = Matrix(3, 4);
  for (double& v : c.weights.data()) {
    double x;
    do {
      x = std::bit_cast<double>(rs.next_u64());
    } while (!std::isfinite(x));
    v = x;
  }
  c.bias = {0.1, -1.0 / 3.0, 5e-324};
  c.metadata.source = ModelSource::kRgc;
  c.metadata.epsilon = 0.1;
  c.metadata.calibration = CalibrationRecord{1.0 / 7.0, -2.0 / 3.0, {1e-300, -0.0, 3.0, 2.5e17},
                                             AlphaRule::kMatchReferenceSpread, 7.0};
  std::string text = model_to_text(c);
  LinearClassifier c2 = model_from_text(text);
  if (!(c2 == c) || model_to_text(c2) != text) problems.push_back("model text");

  // Header mutation fuzz: flip bits in one of the 24 header bytes.
  FeatureMatrix fm(3, 5, 1.5);
  LabelVector lv{{0, 2, 1, 2, 0, 1}, 3};
  const auto fclean = encode_features(fm);
  const auto lclean = encode_labels(lv);
  std::size_t rejected = 0, widened = 0, silent = 0;
  for (int t = 0; t < 1000; ++t) {
    bool lvec = t % 2 == 1;
    auto bytes = lvec ? lclean : fclean;
    std::size_t pos = rs.uniform_index(24);
    auto mask = static_cast<std::uint8_t>(1 + rs.uniform_index(255));
    bytes[pos] ^= mask;
    try {
      if (lvec) {
        LabelVector got = decode_labels(bytes);
        // The class count is not tied to the payload size; raising it above
        // the largest label describes a valid file with identical labels.
        if (pos >= 16 && got.labels == lv.labels && got.num_classes > lv.num_classes) {
          ++widened;
        } else {
          ++silent;
        }
      } else {
        (void)decode_features(bytes);
        ++silent;
      }
    } catch (const Error&) {
      ++rejected;
    }
  }
  if (silent != 0) problems.push_back(fmt("%zu silent wrong reads", silent));

  std::string detail = "FMAT binary64/binary32, LVEC and model text exact";
  if (!problems.empty()) {
    detail = "problems:";
    for (const auto& p : problems) detail += " [" + p + "]";
  }
  detail += fmt("; fuzz 1000 cases: %zu rejected, %zu valid class-count raises, %zu silent",
                rejected, widened, silent);
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 1;
    }
  }

  const std::vector<Criterion> criteria = {
      {1, "bayes recovery", 10, bayes_recovery},
      {2, "init accuracy ordering", 10, init_ordering},
      {3, "lr equivalence", 60, lr_equivalence},
      {4, "convergence speed", 120, convergence_speed},
      {5, "unique minimum", 120, unique_minimum},
      {6, "over-fitting direction", 0, overfit_direction},
      {7, "cmd pipeline", 10, cmd_pipeline},
      {8, "calibration moments", 0, calibration_moments},
      {9, "ncc limit", 0, ncc_limit},
      {10, "gradient oracle", 5, gradient_oracle},
      {11, "format round-trips", 0, format_round_trips},
  };

  int failures = 0, ran = 0;
  for (const auto& c : criteria) {
    if (only && *only != c.id) continue;
    ++ran;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string budget = "";
    if (c.budget_seconds > 0) {
      budget = fmt(" / %.0f s", c.budget_seconds);
      if (secs >= c.budget_seconds) {
        o.pass = false;
        o.detail += "; over time budget";
      }
    }
    if (!o.pass) ++failures;
    std::printf("%s %2d %-24s %s (%.2f s%s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, budget.c_str());
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no such criterion\n");
    return 1;
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
