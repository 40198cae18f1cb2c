#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wassercalc/functionals.hpp"
#include "wassercalc/measure.hpp"
#include "wassercalc/tangent.hpp"

namespace wassercalc {

enum class Activity { Interior, Boundary, Infeasible };

struct ActivityReport {
  Activity activity = Activity::Interior;
  double slack = 0.0;
};

// Constraint catalog: full space, Wasserstein ball, second-moment ball,
// sublevel set of a functional.
class Constraint {
 public:
  struct Impl;
  explicit Constraint(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  const Impl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const Impl> impl_;
};

Constraint full_space_constraint();
Constraint wasserstein_ball_constraint(DiscreteMeasure ref, double eps);
Constraint second_moment_ball_constraint(double eps);
Constraint sublevel_constraint(Functional J, double level);

// Boundary classification with relative tolerance 1e-7*(1+eps) on the radius;
// slack units follow the constraint (eps - W2 for the ball, eps^2 - second
// moment for the moment ball, level - J for sublevel sets).
ActivityReport activity(const Constraint& C, const DiscreteMeasure& mu, double tol = -1.0);

struct NormalElement {
  Variation xi;
  double lambda_effective = 0.0;
  std::string provenance;
  bool map_induced = false;
};

// One normal-cone element at multiplier lambda; interior points yield the
// local zero with lambda coerced to 0.
NormalElement normal_element(const Constraint& C, const DiscreteMeasure& mu, double lambda);

// Unit-lambda normal directions (one per transport-plan vertex for the
// Wasserstein ball); scale by lambda to recover normal_element. Empty when the
// point is interior.
std::vector<NormalElement> normal_base_candidates(const Constraint& C, const DiscreteMeasure& mu,
                                                  std::size_t max_candidates = 40);

}  // namespace wassercalc
