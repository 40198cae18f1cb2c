#include "wassercalc/transport.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "wassercalc/errors.hpp"
#include "wassercalc/transport_simplex.hpp"

namespace wassercalc {

CostFunction sqeuclidean_cost() {
  CostFunction c;
  c.name = "sqeuclidean";
  c.eval = [](const Vec& x, const Vec& y) { return (x - y).squaredNorm(); };
  c.grad_x = [](const Vec& x, const Vec& y) { return Vec(2.0 * (x - y)); };
  return c;
}

CostFunction pnorm_cost(double p) {
  if (!(p > 0))
    throw ValidationError("invalid_cost", "pnorm exponent must be positive");
  CostFunction c;
  c.name = "pnorm:" + std::to_string(p);
  c.eval = [p](const Vec& x, const Vec& y) { return std::pow((x - y).norm(), p); };
  c.grad_x = [p](const Vec& x, const Vec& y) {
    const Vec d = x - y;
    const double r = d.norm();
    if (r == 0.0) return Vec(Vec::Zero(x.size()));
    return Vec(p * std::pow(r, p - 2.0) * d);
  };
  return c;
}

CostFunction cost_from_name(const std::string& name) {
  std::string s = name;
  if (s.rfind("catalog:", 0) == 0) s = s.substr(8);
  if (s == "sqeuclidean") return sqeuclidean_cost();
  if (s == "euclidean") return pnorm_cost(1.0);
  if (s.rfind("pnorm:", 0) == 0) {
    try {
      return pnorm_cost(std::stod(s.substr(6)));
    } catch (const std::exception&) {
      throw ValidationError("invalid_cost", "cannot parse pnorm exponent in '" + name + "'");
    }
  }
  throw ValidationError("invalid_cost", "unknown cost '" + name + "'");
}

namespace {

std::vector<double> dense_costs(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                const CostFunction& c) {
  std::vector<double> cost(static_cast<std::size_t>(mu.size()) * nu.size());
  for (int i = 0; i < mu.size(); ++i)
    for (int j = 0; j < nu.size(); ++j)
      cost[static_cast<std::size_t>(i) * nu.size() + j] = c.eval(mu.points[i], nu.points[j]);
  return cost;
}

TransportPlan plan_from_raw(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const RawPlan& raw) {
  TransportPlan plan;
  plan.source = mu;
  plan.target = nu;
  plan.value = raw.value;
  plan.phi = raw.row_duals;
  plan.psi = raw.col_duals;
  plan.entries.reserve(raw.entries.size());
  for (const auto& e : raw.entries) plan.entries.push_back(PlanEntry{e.i, e.j, e.mass});
  return plan;
}

}  // namespace

TransportPlan solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const CostFunction& c) {
  if (mu.dim != nu.dim && !c.allows_mixed_dims)
    throw ValidationError("dimension_mismatch",
                          "cost '" + c.name + "' needs equal source and target dimensions");
  RawPlan raw = solve_transportation(mu.weights, nu.weights, dense_costs(mu, nu, c));
  return plan_from_raw(mu, nu, raw);
}

std::pair<double, TransportPlan> w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim != nu.dim)
    throw ValidationError("dimension_mismatch", "w2 requires equal dimensions");
  TransportPlan plan = solve_ot(mu, nu, sqeuclidean_cost());
  return {std::sqrt(std::max(0.0, plan.value)), std::move(plan)};
}

TransportPlan brute_force_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             const CostFunction& c) {
  const int n = mu.size();
  if (n != nu.size() || n > 8)
    throw ValidationError("unsupported_instance",
                          "brute force oracle needs equal atom counts with n <= 8");
  for (int i = 0; i < n; ++i) {
    if (std::abs(mu.weights[i] - 1.0 / n) > 1e-9 || std::abs(nu.weights[i] - 1.0 / n) > 1e-9)
      throw ValidationError("unsupported_instance", "brute force oracle needs uniform weights");
  }
  std::vector<double> cost = dense_costs(mu, nu, c);
  std::vector<int> perm(n), best(n);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_value = std::numeric_limits<double>::infinity();
  do {
    double v = 0.0;
    for (int i = 0; i < n; ++i) v += cost[static_cast<std::size_t>(i) * n + perm[i]];
    if (v < best_value) {
      best_value = v;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  TransportPlan plan;
  plan.source = mu;
  plan.target = nu;
  plan.value = best_value / n;
  for (int i = 0; i < n; ++i) plan.entries.push_back(PlanEntry{i, best[i], 1.0 / n});
  return plan;
}

OptimalityCheck verify_optimality(const TransportPlan& plan, const CostFunction& c, double tol) {
  OptimalityCheck out;
  out.optimal = true;
  const auto& mu = plan.source;
  const auto& nu = plan.target;
  const bool sq = c.name == "sqeuclidean" && plan.source.dim == plan.target.dim;
  const int support = static_cast<int>(plan.entries.size());

  if (plan.has_potentials()) {
    for (int i = 0; i < mu.size(); ++i) {
      for (int j = 0; j < nu.size(); ++j) {
        double slack = c.eval(mu.points[i], nu.points[j]) - plan.phi[i] - plan.psi[j];
        if (slack < -tol) {
          out.optimal = false;
          out.violations.push_back("dual infeasible at (" + std::to_string(i) + "," +
                                   std::to_string(j) + "): slack " + std::to_string(slack));
        }
      }
    }
    for (const auto& e : plan.entries) {
      double slack = c.eval(mu.points[e.i], nu.points[e.j]) - plan.phi[e.i] - plan.psi[e.j];
      if (std::abs(slack) > tol) {
        out.optimal = false;
        out.violations.push_back("complementary slackness violated on support at (" +
                                 std::to_string(e.i) + "," + std::to_string(e.j) + ")");
      }
    }
  } else if (!(sq && support <= 8)) {
    throw ValidationError("missing_potentials",
                          "plan has no dual potentials and the cycle check is inapplicable");
  }

  // c-cyclical monotonicity over short cycles of support pairs.
  if (sq && support <= 8) {
    for (int len = 2; len <= 4; ++len) {
      std::vector<int> idx(len, 0);
      std::function<void(int)> rec = [&](int pos) {
        if (!out.optimal && out.violations.size() > 16) return;
        if (pos == len) {
          for (int a = 0; a < len; ++a)
            for (int b = a + 1; b < len; ++b)
              if (idx[a] == idx[b]) return;
          double base = 0.0, swapped = 0.0;
          for (int a = 0; a < len; ++a) {
            const auto& ea = plan.entries[idx[a]];
            const auto& eb = plan.entries[idx[(a + 1) % len]];
            base += c.eval(mu.points[ea.i], nu.points[ea.j]);
            swapped += c.eval(mu.points[ea.i], nu.points[eb.j]);
          }
          if (base > swapped + tol) {
            out.optimal = false;
            std::string cyc = "cycle";
            for (int a = 0; a < len; ++a)
              cyc += " (" + std::to_string(plan.entries[idx[a]].i) + "," +
                     std::to_string(plan.entries[idx[a]].j) + ")";
            out.violations.push_back("cyclical monotonicity violated: " + cyc + " improves by " +
                                     std::to_string(base - swapped));
          }
          return;
        }
        for (int k = 0; k < support; ++k) {
          idx[pos] = k;
          rec(pos + 1);
        }
      };
      rec(0);
    }
  }
  return out;
}

std::vector<TransportPlan> optimal_plan_vertices(const DiscreteMeasure& mu,
                                                 const DiscreteMeasure& nu, const CostFunction& c,
                                                 std::size_t max_plans) {
  std::vector<double> cost = dense_costs(mu, nu, c);
  std::size_t cells = static_cast<std::size_t>(mu.size()) * nu.size();
  std::size_t want = cells <= 36 ? max_plans : 1;
  std::vector<RawPlan> raw = enumerate_optimal_vertices(mu.weights, nu.weights, cost, want);
  std::vector<TransportPlan> plans;
  plans.reserve(raw.size());
  for (const auto& r : raw) plans.push_back(plan_from_raw(mu, nu, r));
  return plans;
}

}  // namespace wassercalc
