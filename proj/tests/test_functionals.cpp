#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "wassercalc/errors.hpp"
#include "wassercalc/functionals.hpp"

using namespace wassercalc;
namespace wt = wassercalc::testing;

namespace {

Vec v1(double x) {
  Vec v(1);
  v << x;
  return v;
}

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

DiscreteMeasure paper_mu() {
  return canonicalize(make_measure(2, {v2(0, 0), v2(1, 1)}, {0.5, 0.5}));
}

DiscreteMeasure paper_nu() {
  return canonicalize(make_measure(2, {v2(1, 0), v2(0, 1)}, {0.5, 0.5}));
}

Variation normalized(const Variation& xi) {
  double n = local_norm(xi);
  return n > 0 ? scale(1.0 / n, xi) : xi;
}

}  // namespace

TEST(Functionals, PaperHalfW2SquaredValue) {
  Functional J = w2sq_functional(paper_nu(), 0.5);
  EXPECT_NEAR(evaluate(J, paper_mu()), 0.5, 1e-12);
}

TEST(Functionals, EvaluateBasics) {
  Functional var = variance_functional(linear_potential(v1(1)));
  EXPECT_EQ(evaluate(var, dirac(v1(4.2))), 0.0);

  std::vector<Vec> data{v1(0)};
  Functional nll = gmm_nll_functional(data);
  EXPECT_NEAR(evaluate(nll, dirac(v1(0))), 0.5 * std::log(2 * 3.14159265358979323846), 1e-12);

  // kernel normalization in d=2
  std::vector<Vec> data2{v2(0, 0)};
  EXPECT_NEAR(evaluate(gmm_nll_functional(data2), dirac(v2(0, 0))),
              std::log(2 * 3.14159265358979323846), 1e-12);
}

TEST(Functionals, SubgradientExamples) {
  Vec theta = v2(0.7, -0.3);
  Functional lin = expected_value_functional(linear_potential(theta));
  std::mt19937_64 rng(9);
  DiscreteMeasure m = wt::random_measure(rng, 4, 2);
  SubgradientElement g = subgradient_element(lin, m);
  EXPECT_TRUE(g.map_induced);
  for (const auto& a : g.xi.arrows) EXPECT_EQ(a.v, theta);

  Functional w2sq = w2sq_functional(m, 0.5);
  SubgradientElement at_ref = subgradient_element(w2sq, m);
  EXPECT_NEAR(local_norm(at_ref.xi), 0.0, 1e-12);

  // MeanVariance with zero variance along theta: arrows are -theta
  DiscreteMeasure flat = canonicalize(make_measure(2, {v2(0, -1), v2(0, 1)}, {0.5, 0.5}));
  Functional mv = mean_variance_functional(v2(1, 0), 2.0, -1);
  SubgradientElement gm = subgradient_element(mv, flat);
  for (const auto& a : gm.xi.arrows) EXPECT_EQ(a.v, Vec(-v2(1, 0)));
}

TEST(Functionals, FdDirectionalBasics) {
  Functional quad = expected_value_functional(sq_norm_half_potential());
  DiscreteMeasure m = dirac(v1(1));
  EXPECT_EQ(fd_directional(quad, m, local_zero(m), 1e-5), 0.0);
  Variation xi = make_variation(m, {Arrow{0, v1(1), 1.0}});
  EXPECT_NEAR(fd_directional(quad, m, xi, 1e-5), 1.0, 1e-4);
  EXPECT_THROW(fd_directional(quad, dirac(v1(2)), xi, 1e-5), ValidationError);
}

TEST(Functionals, GradientConsistencyAcrossTheCatalog) {
  std::mt19937_64 rng(1234);
  std::vector<Vec> data;
  for (int i = 0; i < 12; ++i) data.push_back(wt::random_vec(rng, 2, 1.0));
  Eigen::MatrixXd A(2, 2);
  A << 1.4, 0.3, 0.3, 0.9;
  std::vector<std::pair<const char*, Functional>> catalog;
  catalog.emplace_back("expected_value",
                       expected_value_functional(quadratic_form_potential(A, v2(0.2, -0.1), 0.3)));
  catalog.emplace_back("variance", variance_functional(sq_norm_half_potential()));
  catalog.emplace_back("mean_variance", mean_variance_functional(v2(0.8, -0.5), 1.3, -1));
  catalog.emplace_back("interaction", interaction_functional(double_well_potential(), 0.5));
  catalog.emplace_back("gmm_nll", gmm_nll_functional(data));
  catalog.emplace_back(
      "linear_combination",
      linear_combination({{0.7, expected_value_functional(sq_norm_half_potential())},
                          {1.2, variance_functional(linear_potential(v2(1, 1)))}}));

  for (auto& [name, J] : catalog) {
    for (int trial = 0; trial < 8; ++trial) {
      DiscreteMeasure m = wt::random_measure(rng, 1 + trial % 4, 2);
      std::vector<Arrow> arrows;
      for (int k = 0; k < m.size(); ++k)
        arrows.push_back(Arrow{k, wt::random_vec(rng, 2), m.weights[k]});
      Variation xi = normalized(make_variation(m, std::move(arrows)));
      double value = evaluate(J, m);
      double fd = fd_directional(J, m, xi, 1e-5);
      double predicted = local_inner(subgradient_element(J, m).xi, xi).value;
      EXPECT_NEAR(fd, predicted, 1e-3 * (1 + std::abs(value))) << name << " trial " << trial;
    }
  }
}

TEST(Functionals, W2SubgradientConsistencyAtGenericMeasures) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 8; ++trial) {
    DiscreteMeasure ref = wt::random_uniform_measure(rng, 3, 2);
    DiscreteMeasure m = wt::random_uniform_measure(rng, 3, 2);
    Functional J = w2sq_functional(ref, 0.5);
    std::vector<Arrow> arrows;
    for (int k = 0; k < m.size(); ++k)
      arrows.push_back(Arrow{k, wt::random_vec(rng, 2), m.weights[k]});
    Variation xi = normalized(make_variation(m, std::move(arrows)));
    auto candidates = subgradient_candidates(J, m, 8);
    if (candidates.size() != 1 || !candidates[0].map_induced) continue;  // generic only
    double fd = fd_directional(J, m, xi, 1e-5);
    double predicted = local_inner(candidates[0].xi, xi).value;
    EXPECT_NEAR(fd, predicted, 1e-3 * (1 + evaluate(J, m)));
  }
}

TEST(Functionals, W2MultiPlanBracketing) {
  // At the two-plan instance the plan-induced candidates predict different
  // directional derivatives; the finite difference lands between them.
  DiscreteMeasure m = paper_mu();
  Functional J = w2sq_functional(paper_nu(), 0.5);
  auto candidates = subgradient_candidates(J, m, 8);
  ASSERT_EQ(candidates.size(), 2u);

  Variation xi =
      make_variation(m, {Arrow{0, v2(1, 0), 0.5}, Arrow{1, v2(0, 0), 0.5}});
  double p0 = local_inner(candidates[0].xi, xi).value;
  double p1 = local_inner(candidates[1].xi, xi).value;
  EXPECT_GT(std::abs(p0 - p1), 0.1);
  double fd = fd_directional(J, m, xi, 1e-4);
  EXPECT_GE(fd, std::min(p0, p1) - 1e-3);
  EXPECT_LE(fd, std::max(p0, p1) + 1e-3);
}

TEST(Functionals, LinearityOfMapInducedSubgradients) {
  std::mt19937_64 rng(55);
  DiscreteMeasure m = wt::random_measure(rng, 4, 2);
  Functional j1 = expected_value_functional(sq_norm_half_potential());
  Functional j2 = variance_functional(linear_potential(v2(1, -1)));
  double a = 0.6, b = 1.7;
  SubgradientElement combo = subgradient_element(linear_combination({{a, j1}, {b, j2}}), m);
  SubgradientElement g1 = subgradient_element(j1, m);
  SubgradientElement g2 = subgradient_element(j2, m);
  ASSERT_TRUE(combo.map_induced);
  auto groups = arrows_by_atom(combo.xi);
  for (int k = 0; k < m.size(); ++k) {
    Vec expected = a * g1.xi.arrows[k].v + b * g2.xi.arrows[k].v;
    EXPECT_LT((combo.xi.arrows[groups[k][0]].v - expected).norm(), 1e-12);
  }
}

TEST(Functionals, MeanVarianceNormIdentity) {
  std::mt19937_64 rng(66);
  for (int trial = 0; trial < 20; ++trial) {
    int d = 1 + trial % 3;
    Vec theta = wt::random_vec(rng, d);
    double rho = 0.3 + 0.2 * (trial % 5);
    DiscreteMeasure m = wt::random_measure(rng, 1 + trial % 5, d);
    Functional mv = mean_variance_functional(theta, rho, -1);
    double n = local_norm(subgradient_element(mv, m).xi);
    double var = variance(m, [&](const Vec& x) { return theta.dot(x); });
    double expected_sq = theta.squaredNorm() * (1 + rho * rho * var);
    EXPECT_NEAR(n * n, expected_sq, 1e-9 * (1 + expected_sq));
  }
}

TEST(Functionals, CompositionChainRule) {
  std::mt19937_64 rng(88);
  DiscreteMeasure m = wt::random_measure(rng, 3, 2);
  Functional j1 = expected_value_functional(sq_norm_half_potential());
  Functional j2 = expected_value_functional(linear_potential(v2(0.5, 0.5)));
  Functional comp = composition_functional(product_map(2), {j1, j2});
  double value = evaluate(comp, m);
  EXPECT_NEAR(value, evaluate(j1, m) * evaluate(j2, m), 1e-12);

  std::vector<Arrow> arrows;
  for (int k = 0; k < m.size(); ++k)
    arrows.push_back(Arrow{k, wt::random_vec(rng, 2), m.weights[k]});
  Variation xi = normalized(make_variation(m, std::move(arrows)));
  double fd = fd_directional(comp, m, xi, 1e-6);
  double predicted = local_inner(subgradient_element(comp, m).xi, xi).value;
  EXPECT_NEAR(fd, predicted, 1e-3 * (1 + std::abs(value)));
}

TEST(Functionals, CompositionCandidatesFollowInnerPlanVertices) {
  // a composition over the two-plan instance exposes one candidate per
  // optimal-plan vertex of the transport-valued inner term
  DiscreteMeasure m = paper_mu();
  Functional comp = composition_functional(
      sum_map(2),
      {w2sq_functional(paper_nu(), 0.5), expected_value_functional(linear_potential(v2(0.2, 0)))});
  auto candidates = subgradient_candidates(comp, m, 8);
  ASSERT_EQ(candidates.size(), 2u);
  EXPECT_GT(local_distance(candidates[0].xi, candidates[1].xi).value, 0.1);
}

TEST(Functionals, OtDiscrepancySubgradient) {
  std::mt19937_64 rng(99);
  DiscreteMeasure ref = wt::random_measure(rng, 3, 2);
  DiscreteMeasure m = wt::random_measure(rng, 3, 2);
  Functional J = ot_discrepancy_functional(ref, sqeuclidean_cost());
  // squared-Euclidean OT discrepancy equals W2^2 = 2 * (1/2 W2^2)
  EXPECT_NEAR(evaluate(J, m), 2.0 * evaluate(w2sq_functional(ref, 0.5), m), 1e-10);
  SubgradientElement g = subgradient_element(J, m);
  SubgradientElement h = subgradient_element(w2sq_functional(ref, 1.0), m);
  EXPECT_NEAR(local_distance(g.xi, h.xi).value, 0.0, 1e-12);
}

TEST(Functionals, GmmUnderflowIsReported) {
  std::vector<Vec> data{v1(0), v1(1e6)};
  Functional nll = gmm_nll_functional(data);
  try {
    evaluate(nll, dirac(v1(0)));
    FAIL() << "expected log_of_zero";
  } catch (const SolverError& e) {
    EXPECT_STREQ(e.code().c_str(), "log_of_zero");
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
}

TEST(Functionals, PotentialGradientsMatchFiniteDifferences) {
  Eigen::MatrixXd A(2, 2);
  A << 2.0, 0.4, 0.4, 1.1;
  for (const Potential& p :
       {quadratic_form_potential(A, v2(0.1, 0.2), 0.0), linear_potential(v2(1, -2)),
        sq_norm_half_potential(), double_well_potential(), log_sum_exp_potential()}) {
    EXPECT_LT(gradient_probe_error(p, 2, 17), 1e-5) << p.tag;
  }
  EXPECT_LT(gradient_probe_error(polynomial_1d_potential({1.0, -0.5, 0.25, 2.0}), 1, 17), 1e-5);
}

TEST(Functionals, InvalidSpecsRejected) {
  EXPECT_THROW(mean_variance_functional(v1(1), -0.5, -1), ValidationError);
  EXPECT_THROW(mean_variance_functional(v1(1), 1.0, 0), ValidationError);
  EXPECT_THROW(linear_combination({{-1.0, variance_functional(sq_norm_half_potential())}}),
               ValidationError);
  EXPECT_THROW(gmm_nll_functional({}), ValidationError);
}
