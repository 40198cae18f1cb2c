#include <benchmark/benchmark.h>

#include <random>

#include "wassercalc/transport.hpp"

using namespace wassercalc;

namespace {

DiscreteMeasure random_uniform(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec> points;
  for (int i = 0; i < n; ++i) {
    Vec p(d);
    for (int c = 0; c < d; ++c) p[c] = gauss(rng);
    points.push_back(std::move(p));
  }
  return canonicalize(make_measure(d, std::move(points), std::vector<double>(n, 1.0 / n)));
}

}  // namespace

static void BM_SolveOt(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(7);
  DiscreteMeasure mu = random_uniform(rng, n, 2);
  DiscreteMeasure nu = random_uniform(rng, n, 2);
  CostFunction c = sqeuclidean_cost();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_ot(mu, nu, c).value);
  }
}
BENCHMARK(BM_SolveOt)->Arg(8)->Arg(32)->Arg(128)->Arg(512);

static void BM_W2(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(11);
  DiscreteMeasure mu = random_uniform(rng, n, 3);
  DiscreteMeasure nu = random_uniform(rng, n, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(w2(mu, nu).first);
  }
}
BENCHMARK(BM_W2)->Arg(16)->Arg(64)->Arg(256);

static void BM_EnumerateVertices(benchmark::State& state) {
  std::mt19937_64 rng(5);
  DiscreteMeasure mu = random_uniform(rng, 4, 2);
  DiscreteMeasure nu = random_uniform(rng, 4, 2);
  CostFunction c = sqeuclidean_cost();
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimal_plan_vertices(mu, nu, c, 16).size());
  }
}
BENCHMARK(BM_EnumerateVertices);
