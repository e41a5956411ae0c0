// Serial reference against the OpenMP backend on the main Monte Carlo kernels.
// Both backends produce identical numbers; only the wall time differs.
// Worker count: MDPLAB_NUM_THREADS.

#include "mdplab/chains.hpp"
#include "mdplab/kernels.hpp"
#include "mdplab/mdp_verify.hpp"
#include "mdplab/poisson.hpp"

#include <benchmark/benchmark.h>

using namespace mdplab;

namespace {

kernels::Exec backend(const benchmark::State& s) {
  return s.range(0) == 0 ? kernels::kSerial : kernels::Exec{kernels::Backend::openmp};
}

void label(benchmark::State& s) { s.SetLabel(s.range(0) == 0 ? "serial" : "openmp"); }

const chains::ChainModel& ar1() {
  static const auto m = chains::ChainModel::linear_ar(0.5, NoiseSpec::gaussian(1.0));
  return m;
}

void BM_MapIndices(benchmark::State& s) {
  const auto exec = backend(s);
  for (auto _ : s) {
    auto v = kernels::map_indices(
        1 << 16,
        [](std::size_t i) {
          double x = static_cast<double>(i);
          for (int k = 0; k < 64; ++k) x = std::sin(x) + 1.0;
          return x;
        },
        exec);
    benchmark::DoNotOptimize(v.data());
  }
  label(s);
}

void BM_TailProbability(benchmark::State& s) {
  const auto exec = backend(s);
  verify::ExperimentConfig cfg;
  cfg.n_grid = {200};
  cfg.M = 20000;
  cfg.seed = 1;
  const auto obs = ObservableSpec::identity(1);
  for (auto _ : s) {
    auto t = verify::tail_probability(cfg, ar1(), obs, vec_of({0.5}), 0.0, verify::TailShape::half_space, exec);
    benchmark::DoNotOptimize(t.data());
  }
  label(s);
}

void BM_SeriesCovariance(benchmark::State& s) {
  const auto exec = backend(s);
  const auto obs = center(ObservableSpec::identity(1), ar1(), 0);
  for (auto _ : s) {
    auto b = poisson::asymptotic_covariance_series(ar1(), obs, 40, 20000, 2, 1e-2, exec);
    benchmark::DoNotOptimize(b.B_hat.data());
  }
  label(s);
}

void BM_PoissonSolution(benchmark::State& s) {
  const auto exec = backend(s);
  const auto model = chains::ChainModel::scaled_tanh(0.5, 1, NoiseSpec::gaussian(1.0));
  const auto obs = ObservableSpec::tanh(1).with_centering(Vec::Zero(1), 0.0, true);
  poisson::PoissonOptions o;
  o.N = 30;
  o.M = 4000;
  o.exec = exec;
  for (auto _ : s) {
    poisson::PoissonSolution U(model, obs, o);
    benchmark::DoNotOptimize(U(vec_of({1.0})).data());
  }
  label(s);
}

void BM_ExoticExperiment(benchmark::State& s) {
  const auto exec = backend(s);
  verify::ExperimentConfig cfg;
  cfg.n_grid = {100};
  cfg.M = 20000;
  cfg.y_grid = {0.4};
  cfg.x0 = vec_of({0.0});
  for (auto _ : s) {
    auto r = verify::exotic_mdp_experiment(cfg, 2.0, NoiseSpec::gaussian(1.0), exec);
    benchmark::DoNotOptimize(r.rows.data());
  }
  label(s);
}

}  // namespace

BENCHMARK(BM_MapIndices)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TailProbability)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SeriesCovariance)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PoissonSolution)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExoticExperiment)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  kernels::apply_worker_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
