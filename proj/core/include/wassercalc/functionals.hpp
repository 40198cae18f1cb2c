#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "wassercalc/measure.hpp"
#include "wassercalc/potential.hpp"
#include "wassercalc/tangent.hpp"
#include "wassercalc/transport.hpp"

namespace wassercalc {

// Smooth outer map for compositions.
struct SmoothMap {
  std::string tag = "custom";
  int arity = 0;
  std::function<double(const std::vector<double>&)> eval;
  std::function<std::vector<double>(const std::vector<double>&)> grad;
};

SmoothMap sum_map(int arity);
SmoothMap product_map(int arity);

// Member of the functional catalog. Value type; cheap to copy.
class Functional {
 public:
  struct Impl;
  explicit Functional(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  const Impl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const Impl> impl_;
};

Functional expected_value_functional(Potential V);
Functional variance_functional(Potential V);
// sign * (E[<theta,x>] + rho/2 * Var[<theta,x>]); sign = -1 is the worst-case form.
Functional mean_variance_functional(Vec theta, double rho, int sign = -1);
Functional w2sq_functional(DiscreteMeasure ref, double scale = 0.5);
Functional ot_discrepancy_functional(DiscreteMeasure ref, CostFunction cost);
Functional interaction_functional(Potential W, double scale = 0.5);
// -sum_i log(sum_k w_k phi(x_k - X_i)) with phi the unit Gaussian kernel.
Functional gmm_nll_functional(std::vector<Vec> data);
Functional linear_combination(std::vector<std::pair<double, Functional>> terms);
Functional composition_functional(SmoothMap g, std::vector<Functional> inner);

// (2 pi)^(-d/2) exp(-||z||^2 / 2)
double unit_gaussian_kernel(const Vec& z);

double evaluate(const Functional& J, const DiscreteMeasure& mu);

struct SubgradientElement {
  Variation xi;
  std::string provenance;
  bool map_induced = false;
};

// One element of the general subgradient anchored at mu.
SubgradientElement subgradient_element(const Functional& J, const DiscreteMeasure& mu);

// The elements exposed by the finitely many transport-plan vertices; entry 0
// matches subgradient_element.
std::vector<SubgradientElement> subgradient_candidates(const Functional& J,
                                                       const DiscreteMeasure& mu,
                                                       std::size_t max_candidates = 40);

// (J(apply(xi, eps)) - J(mu)) / eps; validation oracle for gradients.
double fd_directional(const Functional& J, const DiscreteMeasure& mu, const Variation& xi,
                      double eps);

}  // namespace wassercalc
