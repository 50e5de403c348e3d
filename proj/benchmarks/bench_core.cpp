#include <benchmark/benchmark.h>

#include "rgcinit/class_stats.hpp"
#include "rgcinit/cmd.hpp"
#include "rgcinit/logistic.hpp"
#include "rgcinit/numerics.hpp"
#include "rgcinit/random.hpp"
#include "rgcinit/rgc.hpp"
#include "rgcinit/synth.hpp"

namespace {

using namespace rgcinit;

SymmetricMatrix spd(std::size_t d) {
  RandomStream rs(1, 0);
  Matrix a(d, d);
  for (double& v : a.data()) v = rs.normal();
  Matrix aat = multiply(a, a.transposed());
  SymmetricMatrix s = SymmetricMatrix::from_lower(aat).scaled(1.0 / static_cast<double>(d));
  s.add_to_diagonal(0.1);
  return s;
}

SynthData data(std::size_t k, std::size_t d, std::size_t n) {
  SynthSpec spec;
  spec.num_classes = k;
  spec.dim = d;
  spec.samples_per_class = n;
  spec.seed = 3;
  spec.mean_scale = 0.1;
  spec.condition_number = 10.0;
  return generate(spec);
}

void BM_SpdFactor(benchmark::State& state) {
  SymmetricMatrix a = spd(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(spd_factor(a));
}
BENCHMARK(BM_SpdFactor)->Arg(64)->Arg(256)->Arg(1024);

void BM_SpdSolve(benchmark::State& state) {
  auto d = static_cast<std::size_t>(state.range(0));
  SpdFactorization f = spd_factor(spd(d));
  Matrix rhs(d, 100, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(spd_solve(f, rhs));
}
BENCHMARK(BM_SpdSolve)->Arg(64)->Arg(256)->Arg(1024);

void BM_FitStatistics(benchmark::State& state) {
  SynthData s = data(10, static_cast<std::size_t>(state.range(0)), 500);
  for (auto _ : state) benchmark::DoNotOptimize(fit_statistics(s.features, s.labels));
}
BENCHMARK(BM_FitStatistics)->Arg(64)->Arg(256);

void BM_FitRgc(benchmark::State& state) {
  SynthData s = data(100, static_cast<std::size_t>(state.range(0)), 20);
  ClassStatistics st = fit_statistics(s.features, s.labels);
  for (auto _ : state) benchmark::DoNotOptimize(fit_rgc(st));
}
BENCHMARK(BM_FitRgc)->Arg(64)->Arg(256);

void BM_TrainStep(benchmark::State& state) {
  SynthData s = data(20, 128, 100);
  LinearClassifier c = random_init(20, 128, std::nullopt, 1);
  Gradient g;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cross_entropy_gradient(c, s.features, s.labels, 1e-3, g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.features.rows()));
}
BENCHMARK(BM_TrainStep);

void BM_CmdStudy(benchmark::State& state) {
  SynthData s = data(10, 32, 500);
  for (auto _ : state) benchmark::DoNotOptimize(cmd_study(s.features, s.labels, 2));
}
BENCHMARK(BM_CmdStudy);

}  // namespace

BENCHMARK_MAIN();
