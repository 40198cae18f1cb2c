#include "wassercalc/tangent.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "wassercalc/errors.hpp"
#include "wassercalc/parallel.hpp"
#include "wassercalc/transport_simplex.hpp"

namespace wassercalc {

namespace {

void require_same_anchor(const Variation& a, const Variation& b) {
  if (!canonically_equal(a.anchor, b.anchor))
    throw ValidationError("anchor_mismatch", "variations are anchored at different measures");
}

// Per-atom gluing LP shared by local_inner / local_distance / min_sum_norm.
// Atoms are independent, so the LPs run in parallel; the reduction walks atom
// indices in ascending order so results do not depend on the thread count.
CouplingResult optimize_gluing(const Variation& xi1, const Variation& xi2,
                               const std::function<double(const Vec&, const Vec&)>& cell_cost) {
  require_same_anchor(xi1, xi2);
  const auto left = arrows_by_atom(xi1);
  const auto right = arrows_by_atom(xi2);
  std::vector<RawPlan> per_atom(xi1.anchor.size());
  parallel_for(per_atom.size(), [&](std::size_t k) {
    const auto& la = left[k];
    const auto& ra = right[k];
    std::vector<double> supply(la.size()), demand(ra.size());
    for (std::size_t a = 0; a < la.size(); ++a) supply[a] = xi1.arrows[la[a]].mass;
    for (std::size_t b = 0; b < ra.size(); ++b) demand[b] = xi2.arrows[ra[b]].mass;
    std::vector<double> cost(la.size() * ra.size());
    for (std::size_t a = 0; a < la.size(); ++a)
      for (std::size_t b = 0; b < ra.size(); ++b)
        cost[a * ra.size() + b] = cell_cost(xi1.arrows[la[a]].v, xi2.arrows[ra[b]].v);
    per_atom[k] = solve_transportation(supply, demand, cost);
  });
  CouplingResult out;
  for (int k = 0; k < xi1.anchor.size(); ++k) {
    out.value += per_atom[k].value;
    for (const auto& e : per_atom[k].entries)
      out.coupling.entries.push_back(CouplingEntry{k, e.i, e.j, e.mass});
  }
  return out;
}

}  // namespace

Variation make_variation(DiscreteMeasure anchor, std::vector<Arrow> arrows) {
  Variation xi{std::move(anchor), std::move(arrows)};
  std::vector<double> per_atom(xi.anchor.size(), 0.0);
  for (const auto& a : xi.arrows) {
    if (a.k < 0 || a.k >= xi.anchor.size())
      throw ValidationError("invalid_arrow", "arrow anchored at out-of-range atom index");
    if (a.v.size() != xi.anchor.dim)
      throw ValidationError("shape_mismatch", "arrow dimension does not match anchor");
    if (!a.v.allFinite() || !std::isfinite(a.mass))
      throw ValidationError("non_finite_input", "arrow has non-finite entries");
    if (a.mass <= 0)
      throw ValidationError("invalid_arrow", "arrow masses must be positive");
    per_atom[a.k] += a.mass;
  }
  for (int k = 0; k < xi.anchor.size(); ++k) {
    if (std::abs(per_atom[k] - xi.anchor.weights[k]) > kMarginalTol)
      throw ValidationError("marginal_mismatch",
                            "arrow masses at atom " + std::to_string(k) +
                                " do not sum to the atom weight");
  }
  return xi;
}

std::vector<std::vector<int>> arrows_by_atom(const Variation& xi) {
  std::vector<std::vector<int>> groups(xi.anchor.size());
  for (std::size_t i = 0; i < xi.arrows.size(); ++i)
    groups[xi.arrows[i].k].push_back(static_cast<int>(i));
  return groups;
}

Variation local_zero(const DiscreteMeasure& anchor) {
  std::vector<Arrow> arrows;
  arrows.reserve(anchor.size());
  for (int k = 0; k < anchor.size(); ++k)
    arrows.push_back(Arrow{k, Vec::Zero(anchor.dim), anchor.weights[k]});
  return Variation{anchor, std::move(arrows)};
}

double local_norm(const Variation& xi) {
  double s = 0.0;
  for (const auto& a : xi.arrows) s += a.mass * a.v.squaredNorm();
  return std::sqrt(std::max(0.0, s));
}

CouplingResult local_inner(const Variation& xi1, const Variation& xi2) {
  CouplingResult r = optimize_gluing(
      xi1, xi2, [](const Vec& u, const Vec& w) { return -u.dot(w); });
  r.value = -r.value;
  return r;
}

CouplingResult local_distance(const Variation& xi1, const Variation& xi2) {
  CouplingResult r = optimize_gluing(
      xi1, xi2, [](const Vec& u, const Vec& w) { return (u - w).squaredNorm(); });
  r.value = std::sqrt(std::max(0.0, r.value));
  return r;
}

CouplingResult min_sum_norm(const Variation& xi1, const Variation& xi2) {
  CouplingResult r = optimize_gluing(
      xi1, xi2, [](const Vec& u, const Vec& w) { return (u + w).squaredNorm(); });
  r.value = std::sqrt(std::max(0.0, r.value));
  return r;
}

Variation scale(double tau, const Variation& xi) {
  Variation out = xi;
  for (auto& a : out.arrows) a.v *= tau;
  return out;
}

Variation coupled_sum(const Variation& xi1, const Variation& xi2, const GluedCoupling& alpha) {
  require_same_anchor(xi1, xi2);
  const auto left = arrows_by_atom(xi1);
  const auto right = arrows_by_atom(xi2);
  std::vector<double> left_mass(xi1.arrows.size(), 0.0), right_mass(xi2.arrows.size(), 0.0);
  std::vector<Arrow> arrows;
  arrows.reserve(alpha.entries.size());
  for (const auto& e : alpha.entries) {
    if (e.k < 0 || e.k >= xi1.anchor.size() || e.a < 0 ||
        e.a >= static_cast<int>(left[e.k].size()) || e.b < 0 ||
        e.b >= static_cast<int>(right[e.k].size()))
      throw ValidationError("coupling_marginal_mismatch", "coupling entry out of range");
    const Arrow& u = xi1.arrows[left[e.k][e.a]];
    const Arrow& w = xi2.arrows[right[e.k][e.b]];
    left_mass[left[e.k][e.a]] += e.mass;
    right_mass[right[e.k][e.b]] += e.mass;
    arrows.push_back(Arrow{e.k, u.v + w.v, e.mass});
  }
  for (std::size_t i = 0; i < xi1.arrows.size(); ++i)
    if (std::abs(left_mass[i] - xi1.arrows[i].mass) > kMarginalTol)
      throw ValidationError("coupling_marginal_mismatch",
                            "coupling does not project onto the left variation");
  for (std::size_t i = 0; i < xi2.arrows.size(); ++i)
    if (std::abs(right_mass[i] - xi2.arrows[i].mass) > kMarginalTol)
      throw ValidationError("coupling_marginal_mismatch",
                            "coupling does not project onto the right variation");
  return make_variation(xi1.anchor, std::move(arrows));
}

Variation coupled_sum_maximal(const Variation& xi1, const Variation& xi2) {
  return coupled_sum(xi1, xi2, local_inner(xi1, xi2).coupling);
}

Variation from_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                    const TransportPlan& plan, DisplacementSign sign) {
  if (!canonically_equal(plan.source, mu) || !canonically_equal(plan.target, nu))
    throw ValidationError("marginal_mismatch", "plan does not couple the given measures");
  std::vector<Arrow> arrows;
  arrows.reserve(plan.entries.size());
  for (const auto& e : plan.entries) {
    Vec d = nu.points[e.j] - mu.points[e.i];
    if (sign == DisplacementSign::Negative) d = -d;
    arrows.push_back(Arrow{e.i, std::move(d), e.mass});
  }
  return make_variation(mu, std::move(arrows));
}

DiscreteMeasure apply(const Variation& xi, double eps) {
  DiscreteMeasure out;
  out.dim = xi.anchor.dim;
  out.points.reserve(xi.arrows.size());
  out.weights.reserve(xi.arrows.size());
  for (const auto& a : xi.arrows) {
    out.points.push_back(xi.anchor.points[a.k] + eps * a.v);
    out.weights.push_back(a.mass);
  }
  return canonicalize(out);
}

TangentCheck is_tangent(const Variation& xi, std::vector<double> eps_grid) {
  if (eps_grid.empty()) eps_grid = {-1e-2, -1e-3, 1e-3, 1e-2};
  TangentCheck check;
  check.grid = eps_grid;
  check.grid_verified = true;
  double sq = 0.0;
  for (const auto& a : xi.arrows) sq += a.mass * a.v.squaredNorm();
  for (double eps : eps_grid) {
    DiscreteMeasure target = apply(xi, eps);
    double plan_cost = eps * eps * sq;
    double dist = w2(xi.anchor, target).first;
    double w2sq = dist * dist;
    bool ok = plan_cost <= w2sq + 1e-8 * (1.0 + std::abs(w2sq));
    check.plan_costs.push_back(plan_cost);
    check.w2_squared.push_back(w2sq);
    check.optimal.push_back(ok);
    if (!ok) check.grid_verified = false;
  }
  check.note = "grid-verified over the listed eps grid; closure membership is not certified";
  return check;
}

}  // namespace wassercalc
