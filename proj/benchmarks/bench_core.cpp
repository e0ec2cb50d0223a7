#include <benchmark/benchmark.h>

#include "eot/inference.hpp"
#include "eot/montecarlo.hpp"
#include "eot/operators.hpp"
#include "eot/rng.hpp"
#include "eot/sinkhorn.hpp"

namespace {

eot::DiscreteMeasure random_measure(eot::Rng& rng, int atoms, int dim) {
  Eigen::MatrixXd points(atoms, dim);
  Eigen::VectorXd weights(atoms);
  for (int i = 0; i < atoms; ++i) {
    for (int c = 0; c < dim; ++c) points(i, c) = 2.0 * rng.next_double();
    weights[i] = 0.1 + rng.next_double();
  }
  weights /= weights.sum();
  return eot::DiscreteMeasure(std::move(points), std::move(weights));
}

void BM_SinkhornSolve(benchmark::State& state) {
  eot::Rng rng(1);
  const int atoms = int(state.range(0));
  const auto P = random_measure(rng, atoms, 2);
  const auto Q = random_measure(rng, atoms, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eot::solve(P, Q, {1.0, 1e-10, 100000}));
  }
  state.counters["atoms"] = double(atoms);
}
BENCHMARK(BM_SinkhornSolve)->Arg(4)->Arg(16)->Arg(64);

void BM_ResolventSolve(benchmark::State& state) {
  eot::Rng rng(2);
  const int atoms = int(state.range(0));
  const auto P = random_measure(rng, atoms, 2);
  const auto Q = random_measure(rng, atoms, 2);
  const auto sol = eot::solve(P, Q, {1.0, 1e-10, 100000});
  const auto ops = eot::build_operators(sol, P, Q);
  Eigen::VectorXd v(atoms);
  for (int i = 0; i < atoms; ++i) v[i] = rng.next_double() - 0.5;
  v.array() -= ops.p.dot(v);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        eot::resolvent_solve(ops, eot::ResolventSide::X, v));
  }
}
BENCHMARK(BM_ResolventSolve)->Arg(16)->Arg(64)->Arg(256);

void BM_H0Spectrum(benchmark::State& state) {
  eot::Rng rng(3);
  const auto P = random_measure(rng, int(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eot::h0_limit_spectrum(P, {1.0, 1e-10, 100000}));
  }
}
BENCHMARK(BM_H0Spectrum)->Arg(8)->Arg(32);

void BM_Replications(benchmark::State& state) {
  eot::SimulationConfig cfg;
  {
    eot::Rng rng(4);
    cfg.truth_p = random_measure(rng, 4, 1);
    cfg.truth_q = random_measure(rng, 3, 1);
  }
  cfg.statistic.kind = eot::StatisticKind::Functional;
  cfg.statistic.eta = eot::FunctionalSpec::half_squared_distance();
  cfg.n = 1000;
  cfg.m = 1000;
  cfg.replications = std::size_t(state.range(0));
  cfg.seed = 5;
  cfg.threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eot::run_replications(cfg));
  }
  state.counters["replications"] = double(cfg.replications);
}
BENCHMARK(BM_Replications)->Arg(8)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
