#pragma once

#include <string>
#include <vector>

#include "wassercalc/measure.hpp"
#include "wassercalc/transport.hpp"

namespace wassercalc {

// One weighted arrow anchored at atom k of the anchor measure.
struct Arrow {
  int k = 0;
  Vec v;
  double mass = 0.0;
};

// Tangent element: a measure over (anchor atom, arrow) pairs whose first
// marginal is the anchor. Arrow masses at each atom k sum to the atom weight.
struct Variation {
  DiscreteMeasure anchor;
  std::vector<Arrow> arrows;
};

// Three-way coupling of two variations sharing their anchor. a and b index
// into the per-atom arrow lists of the left and right variation.
struct CouplingEntry {
  int k = 0;
  int a = 0;
  int b = 0;
  double mass = 0.0;
};

struct GluedCoupling {
  std::vector<CouplingEntry> entries;
};

inline constexpr double kMarginalTol = 1e-9;

Variation make_variation(DiscreteMeasure anchor, std::vector<Arrow> arrows);

// Arrow indices grouped by anchor atom, in order of appearance.
std::vector<std::vector<int>> arrows_by_atom(const Variation& xi);

Variation local_zero(const DiscreteMeasure& anchor);

double local_norm(const Variation& xi);

struct CouplingResult {
  double value = 0.0;
  GluedCoupling coupling;
};

// max over gluings of the summed arrow inner products (per-atom assignment LP).
CouplingResult local_inner(const Variation& xi1, const Variation& xi2);
// sqrt of the min over gluings of the summed squared arrow differences.
CouplingResult local_distance(const Variation& xi1, const Variation& xi2);
// sqrt of the min over gluings of the summed squared arrow sums; the residual
// primitive of the optimality conditions. Same LP as local_distance with the
// right-hand arrows negated.
CouplingResult min_sum_norm(const Variation& xi1, const Variation& xi2);

Variation scale(double tau, const Variation& xi);

// Arrow-wise sums v1 + v2 carried by the coupling's masses.
Variation coupled_sum(const Variation& xi1, const Variation& xi2, const GluedCoupling& alpha);

// Fold of coupled sums using at each step the inner-product-maximizing gluing.
Variation coupled_sum_maximal(const Variation& xi1, const Variation& xi2);

enum class DisplacementSign { Displacement, Negative };

// Variation induced by a transport plan: arrows y - x (Displacement) or x - y
// (Negative) anchored at mu with the plan's masses.
Variation from_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                    const TransportPlan& plan, DisplacementSign sign);

// Measure with atoms x_k + eps * v and the arrow masses, canonicalized.
DiscreteMeasure apply(const Variation& xi, double eps);

struct TangentCheck {
  bool grid_verified = false;
  std::vector<double> grid;
  std::vector<double> plan_costs;
  std::vector<double> w2_squared;
  std::vector<bool> optimal;
  std::string note;
};

// Checks plan optimality of (pi1, pi1 + eps pi2)#xi over a finite eps grid.
// A passing report certifies "grid-verified", not tangent-space membership.
TangentCheck is_tangent(const Variation& xi, std::vector<double> eps_grid = {});

}  // namespace wassercalc
