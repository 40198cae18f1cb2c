#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wassercalc/measure.hpp"

namespace wassercalc {

// Scalar potential with gradient. Catalog items carry their parameters for
// serialization; custom ones are host-level only.
struct Potential {
  std::string tag = "custom";
  ScalarField eval;
  std::function<Vec(const Vec&)> grad;
  // Catalog parameters (unused fields stay empty).
  Eigen::MatrixXd A;
  Vec b;
  double c = 0.0;
  std::vector<double> coeffs;
};

// V(x) = 1/2 x'Ax + <b,x> + c
Potential quadratic_form_potential(Eigen::MatrixXd A, Vec b, double c);
// V(x) = <a,x>
Potential linear_potential(Vec a);
// V(x) = 1/2 ||x||^2, any dimension
Potential sq_norm_half_potential();
// V(x) = (||x||^2 - 1)^2, any dimension
Potential double_well_potential();
// V(x) = log sum_i exp(x_i), any dimension
Potential log_sum_exp_potential();
// V(t) = sum_i coeffs[i] t^i on R^1
Potential polynomial_1d_potential(std::vector<double> coeffs);
Potential custom_potential(ScalarField eval, std::function<Vec(const Vec&)> grad);

// Parameterless catalog items by name: sq_norm_half | double_well | log_sum_exp.
Potential potential_from_name(const std::string& name);

// Central finite differences of eval against grad on seeded random probes;
// max relative deviation observed.
double gradient_probe_error(const Potential& p, int dim, std::uint64_t seed = 0,
                            int probes = 16);

}  // namespace wassercalc
