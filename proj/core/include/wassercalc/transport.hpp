#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wassercalc/measure.hpp"

namespace wassercalc {

// Lower semi-continuous transportation cost on atom pairs; grad_x is the
// partial gradient in the first argument when available.
struct CostFunction {
  std::string name;
  std::function<double(const Vec&, const Vec&)> eval;
  std::function<Vec(const Vec&, const Vec&)> grad_x;  // may be empty
  bool allows_mixed_dims = false;

  bool has_grad() const { return static_cast<bool>(grad_x); }
};

CostFunction sqeuclidean_cost();
CostFunction pnorm_cost(double p);
// Accepts "sqeuclidean", "pnorm:<p>", "catalog:sqeuclidean", "catalog:euclidean".
CostFunction cost_from_name(const std::string& name);

struct PlanEntry {
  int i = 0;
  int j = 0;
  double mass = 0.0;
};

struct TransportPlan {
  DiscreteMeasure source;
  DiscreteMeasure target;
  std::vector<PlanEntry> entries;
  double value = 0.0;
  std::vector<double> phi;  // source potentials, empty when absent
  std::vector<double> psi;  // target potentials

  bool has_potentials() const { return !phi.empty() && !psi.empty(); }
};

// Optimal basic solution of the transportation LP with dual potentials
// satisfying complementary slackness.
TransportPlan solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const CostFunction& c);

// Type-2 Wasserstein distance and an optimal plan (squared-Euclidean cost).
std::pair<double, TransportPlan> w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Exact minimum over all n! permutation couplings; uniform measures with the
// same atom count n <= 8 only. Test oracle.
TransportPlan brute_force_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             const CostFunction& c);

struct OptimalityCheck {
  bool optimal = false;
  std::vector<std::string> violations;
};

// Dual feasibility + complementary slackness within tol; for squared-Euclidean
// cost and support size <= 8 additionally enumerates cycles of length <= 4 for
// c-cyclical monotonicity.
OptimalityCheck verify_optimality(const TransportPlan& plan, const CostFunction& c, double tol);

// The solve_ot vertex plus alternate optimal vertices (zero-reduced-cost
// pivots) when size()*size() <= 36; index in the result is the plan id.
std::vector<TransportPlan> optimal_plan_vertices(const DiscreteMeasure& mu,
                                                 const DiscreteMeasure& nu,
                                                 const CostFunction& c,
                                                 std::size_t max_plans = 40);

}  // namespace wassercalc
