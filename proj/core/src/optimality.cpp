#include "wassercalc/optimality.hpp"

#include <cmath>
#include <limits>

#include "wassercalc/errors.hpp"

namespace wassercalc {

namespace {

constexpr double kGolden = 0.6180339887498949;

// min over lambda >= 0 of min_sum_norm(g, lambda * n)^2 when g has one arrow
// per atom: the gluing is forced, so the objective is a single quadratic
// a*lambda^2 + b*lambda + c over the (atom, normal-arrow) pairs.
double closed_form_lambda(const Variation& g, const Variation& n) {
  const auto g_groups = arrows_by_atom(g);
  double a = 0.0, b = 0.0;
  for (const auto& arrow : n.arrows) {
    const Vec& gv = g.arrows[g_groups[arrow.k][0]].v;
    a += arrow.mass * arrow.v.squaredNorm();
    b += 2.0 * arrow.mass * gv.dot(arrow.v);
  }
  if (a <= 0.0) return 0.0;
  return std::max(0.0, -b / (2.0 * a));
}

double residual_at(const Variation& g, const Variation& n, double lambda,
                   GluedCoupling* coupling) {
  CouplingResult r = min_sum_norm(g, scale(lambda, n));
  if (coupling) *coupling = std::move(r.coupling);
  return r.value;
}

double grid_search_lambda(const Variation& g, const Variation& n, double lambda_max) {
  const int grid = 33;
  double best_lambda = 0.0;
  double best = std::numeric_limits<double>::infinity();
  int best_idx = 0;
  for (int i = 0; i < grid; ++i) {
    double lam = lambda_max * i / (grid - 1);
    double r = residual_at(g, n, lam, nullptr);
    if (r < best) {
      best = r;
      best_lambda = lam;
      best_idx = i;
    }
  }
  double lo = lambda_max * std::max(0, best_idx - 1) / (grid - 1);
  double hi = lambda_max * std::min(grid - 1, best_idx + 1) / (grid - 1);
  double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
  double f1 = residual_at(g, n, x1, nullptr), f2 = residual_at(g, n, x2, nullptr);
  while (hi - lo > 1e-8) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = residual_at(g, n, x1, nullptr);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = residual_at(g, n, x2, nullptr);
    }
  }
  double mid = 0.5 * (lo + hi);
  if (residual_at(g, n, mid, nullptr) <= best) best_lambda = mid;
  return best_lambda;
}

StationarityReport finish(StationarityReport rep, double g_norm, const OptimalityOptions& opts) {
  rep.tolerance = opts.stationarity_tol_scale * (1.0 + g_norm);
  rep.verdict = rep.residual <= rep.tolerance ? Verdict::StationaryWithin : Verdict::NotStationary;
  return rep;
}

}  // namespace

StationarityReport fermat_residual(const Functional& J, const DiscreteMeasure& mu,
                                   const OptimalityOptions& opts) {
  std::vector<SubgradientElement> candidates = subgradient_candidates(J, mu, opts.max_candidates);
  StationarityReport rep;
  rep.activity = ActivityReport{Activity::Interior, std::numeric_limits<double>::infinity()};
  rep.lambda = 0.0;
  rep.normal_id = -1;
  rep.candidates_searched = candidates.size();
  double best = std::numeric_limits<double>::infinity();
  double best_norm = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double norm = local_norm(candidates[i].xi);
    if (norm < best) {
      best = norm;
      best_norm = norm;
      rep.plan_id = static_cast<int>(i);
    }
  }
  rep.residual = best;
  rep.note = "Fermat residual over " + std::to_string(candidates.size()) +
             " subgradient candidate(s); NotStationary is relative to the searched set";
  return finish(std::move(rep), best_norm, opts);
}

StationarityReport kkt_residual(const Functional& J, const Constraint& C,
                                const DiscreteMeasure& mu, const OptimalityOptions& opts) {
  ActivityReport act = activity(C, mu, opts.activity_tol);
  if (act.activity == Activity::Infeasible)
    throw ValidationError("infeasible_point", "measure is outside the constraint set");
  if (act.activity == Activity::Interior) {
    StationarityReport rep = fermat_residual(J, mu, opts);
    rep.activity = act;
    rep.note += "; interior point, lambda = 0 by complementary slackness";
    return rep;
  }

  std::vector<SubgradientElement> grads = subgradient_candidates(J, mu, opts.max_candidates);
  std::vector<NormalElement> normals;
  try {
    normals = normal_base_candidates(C, mu, opts.max_candidates);
  } catch (const SolverError& e) {
    if (std::string(e.code()) == "zero_subgradient_qualification")
      throw SolverError("qualification_failure", e.what());
    throw;
  }

  StationarityReport rep;
  rep.activity = act;
  rep.candidates_searched = grads.size() * normals.size();
  double best = std::numeric_limits<double>::infinity();
  double best_norm = 0.0;
  for (std::size_t gi = 0; gi < grads.size(); ++gi) {
    const Variation& g = grads[gi].xi;
    double g_norm = local_norm(g);
    for (std::size_t ni = 0; ni < normals.size(); ++ni) {
      const Variation& n = normals[ni].xi;
      double lambda;
      if (grads[gi].map_induced && !opts.force_grid_search) {
        lambda = closed_form_lambda(g, n);
      } else {
        double n_norm = local_norm(n);
        double lambda_max = n_norm > 0 ? 20.0 * (1.0 + g_norm) / n_norm : 0.0;
        lambda = grid_search_lambda(g, n, lambda_max);
      }
      GluedCoupling coupling;
      double r = residual_at(g, n, lambda, &coupling);
      if (r < best - 1e-15) {
        best = r;
        best_norm = g_norm;
        rep.plan_id = static_cast<int>(gi);
        rep.normal_id = static_cast<int>(ni);
        rep.lambda = lambda;
        rep.coupling = std::move(coupling);
      }
    }
  }
  rep.residual = best;
  rep.note = "KKT residual over " + std::to_string(grads.size()) + " subgradient x " +
             std::to_string(normals.size()) +
             " normal candidate(s); SNC and the constraint qualification are assumed for the "
             "catalog constraints; NotStationary is relative to the searched set";
  return finish(std::move(rep), best_norm, opts);
}

}  // namespace wassercalc
