#include <benchmark/benchmark.h>

#include "invlab/erm.hpp"
#include "invlab/estimators.hpp"
#include "invlab/experiments.hpp"
#include "invlab/rkhs.hpp"
#include "invlab/sampling.hpp"

using namespace invlab;

namespace {

SampleSet noisy_samples(const SpectralProblem& p, int n, std::uint64_t seed = 1) {
  const auto truth = make_source_solution(p, 1.0, Coeffs::Ones(p.size()));
  return sample_outputs(p, truth, sample_design(Scheme::iid_uniform, n, seed), NoiseModel::gaussian(0.1), seed);
}

void BM_GramMatrix(benchmark::State& state) {
  const auto p = build_power_law_problem(static_cast<int>(state.range(0)), 2.0, 1.0);
  const auto pts = sample_design(Scheme::iid_uniform, static_cast<int>(state.range(1)), 1).points;
  for (auto _ : state) benchmark::DoNotOptimize(gram_matrix(p, pts).entries.data());
}
BENCHMARK(BM_GramMatrix)->Args({100, 64})->Args({100, 256})->Args({1000, 256});

void BM_KernelTikhonov(benchmark::State& state) {
  const auto p = build_power_law_problem(100, 2.0, 1.0);
  const auto s = noisy_samples(p, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernel_tikhonov(p, s, 1e-2).beta.data());
}
BENCHMARK(BM_KernelTikhonov)->Arg(64)->Arg(256)->Arg(1024);

void BM_ProjectionEstimator(benchmark::State& state) {
  const auto p = build_power_law_problem(static_cast<int>(state.range(0)), 2.0, 1.0);
  const auto s = noisy_samples(p, static_cast<int>(state.range(1)));
  const auto f = make_tikhonov(1e-2);
  for (auto _ : state) benchmark::DoNotOptimize(estimator_paper(p, f, s).coeffs.data());
}
BENCHMARK(BM_ProjectionEstimator)->Args({100, 256})->Args({100, 4096})->Args({1000, 4096});

void BM_EstimatorLearn(benchmark::State& state) {
  const auto p = build_power_law_problem(100, 2.0, 1.0);
  const auto s = noisy_samples(p, static_cast<int>(state.range(0)));
  const auto f = make_cutoff(1e-2);
  for (auto _ : state) benchmark::DoNotOptimize(estimator_learn(p, f, s).coeffs.data());
}
BENCHMARK(BM_EstimatorLearn)->Arg(64)->Arg(256);

void BM_ErmSquare(benchmark::State& state) {
  const auto p = build_power_law_problem(50, 2.0, 1.0);
  const auto s = noisy_samples(p, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(erm_representer_solve(p, s, LossSpec::square(), PenaltySpec{}, 1e-2).beta.data());
  }
}
BENCHMARK(BM_ErmSquare)->Arg(16)->Arg(64);

void BM_ErmAbsolute(benchmark::State& state) {
  const auto p = build_power_law_problem(50, 2.0, 1.0);
  const auto s = noisy_samples(p, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(erm_representer_solve(p, s, LossSpec::absolute(), PenaltySpec{}, 1e-2).beta.data());
  }
}
BENCHMARK(BM_ErmAbsolute)->Arg(16)->Arg(64);

void BM_LemmaCheckStudy(benchmark::State& state) {
  StudyConfig c = reference_config("lemma-check");
  c.replicates = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_study(c).stats.size());
}
BENCHMARK(BM_LemmaCheckStudy)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
