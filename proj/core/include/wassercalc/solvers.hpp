#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "wassercalc/constraints.hpp"
#include "wassercalc/functionals.hpp"
#include "wassercalc/measure.hpp"
#include "wassercalc/optimality.hpp"
#include "wassercalc/potential.hpp"

namespace wassercalc {

struct LinearSecondMomentSolution {
  DiscreteMeasure mu_star;
  double lambda_star = 0.0;
  double objective = 0.0;
  StationarityReport report;
};

// Minimizes E[<theta,x>] over the second-moment ball of radius eps:
// mu* = delta at -eps*theta/||theta||, lambda* = ||theta||/(2 eps).
LinearSecondMomentSolution solve_linear_second_moment(const Vec& theta, double eps);

struct DroSolution {
  double lambda_star = 0.0;
  Eigen::MatrixXd map_matrix;  // the affine T: x -> map_matrix x + map_offset
  Vec map_offset;
  DiscreteMeasure worst_case;
  double cost_direct = 0.0;   // E[<theta,x>] + (rho/2) Var[<theta,x>] at worst_case
  double cost_formula = 0.0;  // closed-form expression, cross-validated
  bool formula_mismatch = false;
  double radius_check = 0.0;  // W2(worst_case, nu_hat)
  StationarityReport report;
  std::string branch;
  std::vector<double> roots_considered;
};

// Worst-case mean-variance over a Wasserstein ball around nu_hat: multiplier
// from the quartic stationarity polynomial, worst case through the inverse
// affine map, certified by an independent KKT residual.
DroSolution solve_meanvar_dro(const Vec& theta, double rho, double eps,
                              const DiscreteMeasure& nu_hat);

struct ProxAtomReport {
  Vec minimizer;
  double value = 0.0;
  double first_order_error = 0.0;  // ||grad V(x*) + (x* - y)||
  bool converged = false;
};

struct ProxSolution {
  DiscreteMeasure mu_star;
  double cost = 0.0;
  std::vector<ProxAtomReport> atoms;
};

// Wasserstein proximal operator of V at mu_bar: per-atom multistart descent of
// V(z) + ||z - y||^2 / 2; ties break to the lexicographically smallest point.
ProxSolution prox(const Potential& V, const DiscreteMeasure& mu_bar, int multistart = 8,
                  std::uint64_t seed = 0);

struct GmmFit {
  DiscreteMeasure mu_star;
  double nll = 0.0;
  double residual = 0.0;
  std::vector<double> nll_trace;
  std::vector<double> residual_trace;
};

// Projected gradient descent on the mixture NLL over atom positions and
// simplex weights, k-means++ initialized; the stationarity residual of the fit
// is reported as certificate.
GmmFit fit_gaussian_mixture(const std::vector<Vec>& data, int m, std::uint64_t seed);

struct DualSolution {
  double lambda_star = 0.0;
  double beta_star = 0.0;
  double dual_value = 0.0;
  double lambda_min = 0.0;
  std::vector<Vec> per_atom_maximizers;
  DiscreteMeasure reconstructed_primal;
  double gap = 0.0;
};

// Dual of the nonlinear worst-case mean-variance over a Wasserstein ball:
// Nelder-Mead over (lambda, beta) with per-atom multistart inner ascents; the
// primal is reconstructed from the per-atom maximizers.
DualSolution solve_nonlinear_dro_dual(const Potential& V, double rho, double eps,
                                      const DiscreteMeasure& nu_hat, int multistart = 8,
                                      std::uint64_t seed = 0);

}  // namespace wassercalc
