#pragma once

#include <string>

#include "wassercalc/constraints.hpp"
#include "wassercalc/functionals.hpp"
#include "wassercalc/measure.hpp"
#include "wassercalc/tangent.hpp"

namespace wassercalc {

enum class Verdict { StationaryWithin, NotStationary };

struct StationarityReport {
  double residual = 0.0;
  double lambda = 0.0;
  ActivityReport activity;
  int plan_id = 0;    // subgradient candidate realizing the minimum
  int normal_id = -1; // normal candidate realizing the minimum, -1 when unconstrained
  GluedCoupling coupling;
  Verdict verdict = Verdict::NotStationary;
  double tolerance = 0.0;
  std::size_t candidates_searched = 0;
  std::string note;
};

struct OptimalityOptions {
  double stationarity_tol_scale = 1e-6;
  double activity_tol = -1.0;  // <0 selects the constraint default
  std::size_t max_candidates = 40;
  bool force_grid_search = false;  // bypass the closed-form multiplier
};

// Fermat's rule residual: min over subgradient candidates of the local norm.
StationarityReport fermat_residual(const Functional& J, const DiscreteMeasure& mu,
                                   const OptimalityOptions& opts = {});

// KKT residual: min over multipliers, subgradient candidates, normal
// candidates and gluings of || g (+) lambda n ||. Interior points defer to
// Fermat with lambda = 0.
StationarityReport kkt_residual(const Functional& J, const Constraint& C,
                                const DiscreteMeasure& mu, const OptimalityOptions& opts = {});

}  // namespace wassercalc
