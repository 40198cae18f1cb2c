#include <benchmark/benchmark.h>

#include <random>

#include "wassercalc/optimality.hpp"
#include "wassercalc/solvers.hpp"

using namespace wassercalc;

namespace {

Vec v1(double x) {
  Vec v(1);
  v << x;
  return v;
}

DiscreteMeasure two_point() {
  return canonicalize(make_measure(1, {v1(0), v1(1)}, {0.5, 0.5}));
}

}  // namespace

static void BM_MeanVarDro(benchmark::State& state) {
  DiscreteMeasure nu_hat = two_point();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_meanvar_dro(v1(1), 1.0, 0.1, nu_hat).lambda_star);
  }
}
BENCHMARK(BM_MeanVarDro);

static void BM_KktResidual(benchmark::State& state) {
  DiscreteMeasure nu_hat = two_point();
  DroSolution sol = solve_meanvar_dro(v1(1), 1.0, 0.1, nu_hat);
  Functional J = mean_variance_functional(v1(1), 1.0, -1);
  Constraint C = wasserstein_ball_constraint(nu_hat, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kkt_residual(J, C, sol.worst_case).residual);
  }
}
BENCHMARK(BM_KktResidual);

static void BM_Prox(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec> points;
  for (int i = 0; i < n; ++i) points.push_back(v1(gauss(rng)));
  DiscreteMeasure mu = canonicalize(make_measure(1, std::move(points),
                                                 std::vector<double>(n, 1.0 / n)));
  Potential V = double_well_potential();
  for (auto _ : state) {
    benchmark::DoNotOptimize(prox(V, mu, 6, 1).cost);
  }
}
BENCHMARK(BM_Prox)->Arg(8)->Arg(64);
