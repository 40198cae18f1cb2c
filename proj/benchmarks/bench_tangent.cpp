#include <benchmark/benchmark.h>

#include <random>

#include "wassercalc/tangent.hpp"

using namespace wassercalc;

namespace {

DiscreteMeasure random_measure(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.2, 1.0);
  std::vector<Vec> points;
  std::vector<double> weights;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec p(d);
    for (int c = 0; c < d; ++c) p[c] = gauss(rng);
    points.push_back(std::move(p));
    weights.push_back(uni(rng));
    total += weights.back();
  }
  for (double& w : weights) w /= total;
  return canonicalize(make_measure(d, std::move(points), std::move(weights)));
}

Variation random_variation(std::mt19937_64& rng, const DiscreteMeasure& anchor, int arrows) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Arrow> out;
  for (int k = 0; k < anchor.size(); ++k) {
    for (int a = 0; a < arrows; ++a) {
      Vec v(anchor.dim);
      for (int c = 0; c < anchor.dim; ++c) v[c] = gauss(rng);
      out.push_back(Arrow{k, std::move(v), anchor.weights[k] / arrows});
    }
  }
  return make_variation(anchor, std::move(out));
}

}  // namespace

static void BM_LocalInner(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int arrows = static_cast<int>(state.range(1));
  std::mt19937_64 rng(3);
  DiscreteMeasure anchor = random_measure(rng, n, 2);
  Variation a = random_variation(rng, anchor, arrows);
  Variation b = random_variation(rng, anchor, arrows);
  for (auto _ : state) {
    benchmark::DoNotOptimize(local_inner(a, b).value);
  }
}
BENCHMARK(BM_LocalInner)->Args({8, 2})->Args({32, 4})->Args({128, 4});

static void BM_MinSumNorm(benchmark::State& state) {
  std::mt19937_64 rng(4);
  DiscreteMeasure anchor = random_measure(rng, 32, 2);
  Variation a = random_variation(rng, anchor, 3);
  Variation b = random_variation(rng, anchor, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(min_sum_norm(a, b).value);
  }
}
BENCHMARK(BM_MinSumNorm);
