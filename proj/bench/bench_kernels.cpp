// Serial reference kernels against the blocked OpenMP kernels, plus one
// end-to-end PAD fit for scale.

#include <benchmark/benchmark.h>

#include <random>

#include "padr/estimators.hpp"
#include "padr/kernels.hpp"
#include "padr/simulation.hpp"

namespace {

Eigen::MatrixXd rows(Eigen::Index n, Eigen::Index p) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = z(rng);
  return m;
}

void BM_WeightedCrossSerial(benchmark::State& state) {
  const Eigen::MatrixXd a = rows(state.range(0), 13);
  const Eigen::VectorXd w = a.col(0).array().exp();
  for (auto _ : state) benchmark::DoNotOptimize(padr::kernels::reference::weighted_cross(a, a, w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_WeightedCrossOpenMP(benchmark::State& state) {
  const Eigen::MatrixXd a = rows(state.range(0), 13);
  const Eigen::VectorXd w = a.col(0).array().exp();
  padr::kernels::set_thread_count(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(padr::kernels::weighted_cross(a, a, w));
  padr::kernels::set_thread_count(0);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_WeightedMeanSerial(benchmark::State& state) {
  const Eigen::MatrixXd a = rows(state.range(0), 4);
  const Eigen::VectorXd w = a.col(1).array().exp();
  for (auto _ : state) benchmark::DoNotOptimize(padr::kernels::reference::weighted_mean(a, w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_WeightedMeanOpenMP(benchmark::State& state) {
  const Eigen::MatrixXd a = rows(state.range(0), 4);
  const Eigen::VectorXd w = a.col(1).array().exp();
  padr::kernels::set_thread_count(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(padr::kernels::weighted_mean(a, w));
  padr::kernels::set_thread_count(0);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PadPipeline(benchmark::State& state) {
  padr::SimulationSetting s;
  s.id = padr::SettingId::G3;
  s.n = s.N = static_cast<int>(state.range(0));
  const padr::TwoSampleData data = padr::generate_dataset(s, 7);
  padr::EstimatorOptions o;
  o.basis = padr::preset_sim(3);
  for (auto _ : state) benchmark::DoNotOptimize(padr::estimate_points({padr::Method::dr, padr::Method::pad}, data, o));
}

}  // namespace

BENCHMARK(BM_WeightedCrossSerial)->Arg(1000)->Arg(100000);
BENCHMARK(BM_WeightedCrossOpenMP)->Args({1000, 1})->Args({100000, 1})->Args({100000, 4});
BENCHMARK(BM_WeightedMeanSerial)->Arg(1000)->Arg(100000);
BENCHMARK(BM_WeightedMeanOpenMP)->Args({1000, 1})->Args({100000, 1})->Args({100000, 4});
BENCHMARK(BM_PadPipeline)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
