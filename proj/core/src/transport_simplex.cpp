#include "wassercalc/transport_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <set>
#include <string>

#include "wassercalc/errors.hpp"

namespace wassercalc {

namespace {

struct BasisCell {
  int i, j;
  double flow;
};

// Tree basis over n row nodes (0..n-1) and m column nodes (n..n+m-1).
class Tableau {
 public:
  Tableau(int n, int m, const std::vector<double>& cost) : n_(n), m_(m), cost_(cost) {
    adj_.assign(n_ + m_, {});
  }

  double cost(int i, int j) const { return cost_[static_cast<std::size_t>(i) * m_ + j]; }

  void set_basis(std::vector<BasisCell> cells) {
    cells_ = std::move(cells);
    rebuild_adjacency();
  }
  const std::vector<BasisCell>& cells() const { return cells_; }

  void compute_duals(std::vector<double>& u, std::vector<double>& v) const {
    u.assign(n_, 0.0);
    v.assign(m_, 0.0);
    std::vector<char> seen(n_ + m_, 0);
    std::deque<int> queue{0};
    seen[0] = 1;
    while (!queue.empty()) {
      int node = queue.front();
      queue.pop_front();
      for (int ci : adj_[node]) {
        const BasisCell& c = cells_[ci];
        int other = (node < n_) ? n_ + c.j : c.i;
        if (seen[other]) continue;
        seen[other] = 1;
        if (node < n_)
          v[c.j] = cost(c.i, c.j) - u[c.i];
        else
          u[c.i] = cost(c.i, c.j) - v[c.j];
        queue.push_back(other);
      }
    }
  }

  // Path of basis-cell indices from row node i to column node n_+j.
  std::vector<int> tree_path(int i, int j) const {
    std::vector<int> parent_cell(n_ + m_, -1), parent_node(n_ + m_, -1);
    std::vector<char> seen(n_ + m_, 0);
    std::deque<int> queue{i};
    seen[i] = 1;
    const int target = n_ + j;
    while (!queue.empty()) {
      int node = queue.front();
      queue.pop_front();
      if (node == target) break;
      for (int ci : adj_[node]) {
        const BasisCell& c = cells_[ci];
        int other = (node < n_) ? n_ + c.j : c.i;
        if (seen[other]) continue;
        seen[other] = 1;
        parent_cell[other] = ci;
        parent_node[other] = node;
        queue.push_back(other);
      }
    }
    std::vector<int> path;
    for (int node = target; node != i; node = parent_node[node]) path.push_back(parent_cell[node]);
    std::reverse(path.begin(), path.end());
    return path;
  }

  // Pivot cell (ei, ej) into the basis. Returns the flow change theta.
  double pivot(int ei, int ej) {
    std::vector<int> path = tree_path(ei, ej);
    // Signs alternate starting with - on the cell adjacent to row ei.
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    long leave_key = std::numeric_limits<long>::max();
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const BasisCell& c = cells_[path[p]];
      long key = static_cast<long>(c.i) * m_ + c.j;
      if (leave < 0 || c.flow < theta || (c.flow == theta && key < leave_key)) {
        theta = c.flow;
        leave = path[p];
        leave_key = key;
      }
    }
    for (std::size_t p = 0; p < path.size(); ++p) {
      cells_[path[p]].flow += (p % 2 == 0) ? -theta : theta;
    }
    cells_[leave] = BasisCell{ei, ej, theta};
    rebuild_adjacency();
    return theta;
  }

  // Exact tree flows for given marginals via leaf stripping.
  std::vector<double> solve_flows(std::vector<double> a, std::vector<double> b) const {
    std::vector<double> bal(n_ + m_);
    for (int i = 0; i < n_; ++i) bal[i] = a[i];
    for (int j = 0; j < m_; ++j) bal[n_ + j] = -b[j];
    std::vector<int> degree(n_ + m_);
    std::vector<char> cell_done(cells_.size(), 0);
    for (int node = 0; node < n_ + m_; ++node) degree[node] = static_cast<int>(adj_[node].size());
    std::vector<double> flow(cells_.size(), 0.0);
    std::deque<int> leaves;
    for (int node = 0; node < n_ + m_; ++node)
      if (degree[node] == 1) leaves.push_back(node);
    while (!leaves.empty()) {
      int node = leaves.front();
      leaves.pop_front();
      int ci = -1;
      for (int c : adj_[node])
        if (!cell_done[c]) ci = c;
      if (ci < 0) continue;
      const BasisCell& c = cells_[ci];
      // Flow runs row -> column; a row leaf pushes its balance out, a column
      // leaf absorbs minus its balance.
      flow[ci] = (node < n_) ? bal[node] : -bal[node];
      int other = (node < n_) ? n_ + c.j : c.i;
      bal[other] += bal[node];
      bal[node] = 0;
      cell_done[ci] = 1;
      if (--degree[other] == 1) leaves.push_back(other);
      degree[node] = 0;
    }
    return flow;
  }

 private:
  void rebuild_adjacency() {
    for (auto& lst : adj_) lst.clear();
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      adj_[cells_[c].i].push_back(static_cast<int>(c));
      adj_[n_ + cells_[c].j].push_back(static_cast<int>(c));
    }
  }

  int n_, m_;
  const std::vector<double>& cost_;
  std::vector<BasisCell> cells_;
  std::vector<std::vector<int>> adj_;
};

std::vector<BasisCell> northwest_corner(std::vector<double> a, std::vector<double> b) {
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  std::vector<BasisCell> cells;
  cells.reserve(n + m - 1);
  int i = 0, j = 0;
  for (int step = 0; step < n + m - 1; ++step) {
    double t = std::min(a[i], b[j]);
    cells.push_back(BasisCell{i, j, t});
    a[i] -= t;
    b[j] -= t;
    if (step == n + m - 2) break;
    if ((a[i] <= b[j] && i < n - 1) || j == m - 1)
      ++i;
    else
      ++j;
  }
  return cells;
}

struct Scratch {
  std::vector<double> u, v;
};

// One simplex run; returns the final tableau through `tab`.
RawPlan run_simplex(const std::vector<double>& supply, const std::vector<double>& demand,
                    const std::vector<double>& cost, long pivot_cap, Tableau& tab) {
  const int n = static_cast<int>(supply.size()), m = static_cast<int>(demand.size());
  if (n == 0 || m == 0) throw ValidationError("empty_measure", "transport instance is empty");
  if (cost.size() != static_cast<std::size_t>(n) * m)
    throw ValidationError("shape_mismatch", "cost matrix has wrong shape");
  double cmax = 0.0;
  for (double c : cost) {
    if (!std::isfinite(c))
      throw ValidationError("non_finite_input", "cost is non-finite on an atom pair");
    cmax = std::max(cmax, std::abs(c));
  }
  if (pivot_cap < 0) pivot_cap = 50L * (n + m) * (n + m);

  // Lexicographic perturbation of the supplies; the last demand absorbs the
  // imbalance so the instance stays exactly balanced.
  double total_a = 0.0, total_b = 0.0;
  for (double x : supply) total_a += x;
  for (double x : demand) total_b += x;
  const double delta = 1e-9 * total_a / (static_cast<double>(n) * (n + 1) / 2 + 1);
  std::vector<double> a = supply, b = demand;
  for (int i = 0; i < n; ++i) a[i] += delta * (i + 1);
  double new_total = total_a + delta * (static_cast<double>(n) * (n + 1) / 2);
  b[m - 1] += new_total - total_b;

  tab.set_basis(northwest_corner(a, b));

  const double rc_tol = 1e-12 * (1.0 + cmax);
  Scratch s;
  long pivots = 0;
  long degenerate_run = 0;
  const long bland_trigger = 2L * (n + m);
  while (true) {
    tab.compute_duals(s.u, s.v);
    int enter_i = -1, enter_j = -1;
    if (degenerate_run < bland_trigger) {
      // Dantzig pricing: most negative reduced cost.
      double best = -rc_tol;
      for (int i = 0; i < n; ++i) {
        const double ui = s.u[i];
        const double* row = cost.data() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
          double rc = row[j] - ui - s.v[j];
          if (rc < best) {
            best = rc;
            enter_i = i;
            enter_j = j;
          }
        }
      }
    } else {
      // Bland's rule: first negative reduced cost in index order. The supply
      // perturbation already precludes cycling; this is the stall fallback.
      for (int i = 0; i < n && enter_i < 0; ++i) {
        for (int j = 0; j < m; ++j) {
          if (cost[static_cast<std::size_t>(i) * m + j] - s.u[i] - s.v[j] < -rc_tol) {
            enter_i = i;
            enter_j = j;
            break;
          }
        }
      }
    }
    if (enter_i < 0) break;
    if (++pivots > pivot_cap)
      throw SolverError("solver_stall",
                        "transportation simplex exceeded pivot cap " + std::to_string(pivot_cap) +
                            " on a " + std::to_string(n) + "x" + std::to_string(m) + " instance");
    double theta = tab.pivot(enter_i, enter_j);
    degenerate_run = theta <= 1e-15 ? degenerate_run + 1 : 0;
  }

  // Remove the perturbation: exact tree flows against the true marginals.
  std::vector<double> flows = tab.solve_flows(supply, demand);
  RawPlan plan;
  plan.pivots = pivots;
  tab.compute_duals(plan.row_duals, plan.col_duals);
  const auto& cells = tab.cells();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    double f = flows[c];
    if (f < 1e-15) continue;
    plan.entries.push_back(RawPlanEntry{cells[c].i, cells[c].j, f});
    plan.value += f * cost[static_cast<std::size_t>(cells[c].i) * m + cells[c].j];
  }
  std::sort(plan.entries.begin(), plan.entries.end(), [m](const RawPlanEntry& x, const RawPlanEntry& y) {
    return static_cast<long>(x.i) * m + x.j < static_cast<long>(y.i) * m + y.j;
  });
  return plan;
}

}  // namespace

RawPlan solve_transportation(const std::vector<double>& supply, const std::vector<double>& demand,
                             const std::vector<double>& cost_row_major, long pivot_cap) {
  Tableau tab(static_cast<int>(supply.size()), static_cast<int>(demand.size()), cost_row_major);
  return run_simplex(supply, demand, cost_row_major, pivot_cap, tab);
}

std::vector<RawPlan> enumerate_optimal_vertices(const std::vector<double>& supply,
                                                const std::vector<double>& demand,
                                                const std::vector<double>& cost_row_major,
                                                std::size_t max_plans) {
  const int n = static_cast<int>(supply.size()), m = static_cast<int>(demand.size());
  Tableau tab(n, m, cost_row_major);
  std::vector<RawPlan> plans{run_simplex(supply, demand, cost_row_major, -1, tab)};
  if (max_plans <= 1) return plans;

  double cmax = 0.0;
  for (double c : cost_row_major) cmax = std::max(cmax, std::abs(c));
  const double zero_rc = 1e-9 * (1.0 + cmax);

  auto basis_key = [m](const std::vector<BasisCell>& cells) {
    std::vector<long> key;
    key.reserve(cells.size());
    for (const auto& c : cells) key.push_back(static_cast<long>(c.i) * m + c.j);
    std::sort(key.begin(), key.end());
    return key;
  };
  auto plan_key = [](const RawPlan& p) {
    std::vector<std::int64_t> key;
    for (const auto& e : p.entries) {
      key.push_back(e.i);
      key.push_back(e.j);
      key.push_back(static_cast<std::int64_t>(std::llround(e.mass * 1e12)));
    }
    return key;
  };

  auto extract_plan = [&](Tableau& t) {
    RawPlan plan;
    std::vector<double> flows = t.solve_flows(supply, demand);
    t.compute_duals(plan.row_duals, plan.col_duals);
    const auto& cells = t.cells();
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (flows[c] < 1e-15) continue;
      plan.entries.push_back(RawPlanEntry{cells[c].i, cells[c].j, flows[c]});
      plan.value += flows[c] * cost_row_major[static_cast<std::size_t>(cells[c].i) * m + cells[c].j];
    }
    std::sort(plan.entries.begin(), plan.entries.end(),
              [m](const RawPlanEntry& x, const RawPlanEntry& y) {
                return static_cast<long>(x.i) * m + x.j < static_cast<long>(y.i) * m + y.j;
              });
    return plan;
  };

  std::set<std::vector<long>> seen_bases;
  std::set<std::vector<std::int64_t>> seen_plans;
  seen_bases.insert(basis_key(tab.cells()));
  seen_plans.insert(plan_key(plans[0]));

  std::deque<std::vector<BasisCell>> frontier{tab.cells()};
  std::size_t bases_visited = 0;
  const std::size_t max_bases = 256;
  std::vector<double> u, v;
  while (!frontier.empty() && plans.size() < max_plans && bases_visited < max_bases) {
    std::vector<BasisCell> base = frontier.front();
    frontier.pop_front();
    ++bases_visited;
    Tableau t(n, m, cost_row_major);
    t.set_basis(base);
    t.compute_duals(u, v);
    std::vector<char> basic(static_cast<std::size_t>(n) * m, 0);
    for (const auto& c : base) basic[static_cast<std::size_t>(c.i) * m + c.j] = 1;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        std::size_t idx = static_cast<std::size_t>(i) * m + j;
        if (basic[idx]) continue;
        if (std::abs(cost_row_major[idx] - u[i] - v[j]) > zero_rc) continue;
        Tableau t2(n, m, cost_row_major);
        t2.set_basis(base);
        t2.pivot(i, j);
        auto key = basis_key(t2.cells());
        if (!seen_bases.insert(key).second) continue;
        RawPlan p = extract_plan(t2);
        if (seen_plans.insert(plan_key(p)).second && plans.size() < max_plans)
          plans.push_back(p);
        frontier.push_back(t2.cells());
      }
    }
  }
  return plans;
}

}  // namespace wassercalc
