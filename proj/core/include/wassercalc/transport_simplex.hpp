#pragma once

#include <vector>

namespace wassercalc {

struct RawPlanEntry {
  int i = 0;
  int j = 0;
  double mass = 0.0;
};

struct RawPlan {
  std::vector<RawPlanEntry> entries;
  double value = 0.0;
  std::vector<double> row_duals;
  std::vector<double> col_duals;
  long pivots = 0;
};

// Exact dense transportation LP
//   min sum_ij x_ij c_ij   s.t.  row sums = supply, col sums = demand, x >= 0.
// Network simplex on the bipartite tree basis, Bland's entering rule, with a
// lexicographic perturbation of the supply vector to break degeneracy; the
// perturbation is removed on exit by re-solving the tree flows against the
// unperturbed marginals. pivot_cap < 0 selects the default 50*(n+m)^2.
RawPlan solve_transportation(const std::vector<double>& supply,
                             const std::vector<double>& demand,
                             const std::vector<double>& cost_row_major,
                             long pivot_cap = -1);

// Alternate optimal vertices reachable from the solve_transportation basis by
// pivoting in zero-reduced-cost cells (BFS over bases, bounded by max_plans
// distinct vertices). Entry 0 is the solve_transportation solution.
std::vector<RawPlan> enumerate_optimal_vertices(const std::vector<double>& supply,
                                                const std::vector<double>& demand,
                                                const std::vector<double>& cost_row_major,
                                                std::size_t max_plans);

}  // namespace wassercalc
