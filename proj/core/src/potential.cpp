#include "wassercalc/potential.hpp"

#include <cmath>
#include <random>

#include "wassercalc/errors.hpp"

namespace wassercalc {

Potential quadratic_form_potential(Eigen::MatrixXd A, Vec b, double c) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw ValidationError("shape_mismatch", "quadratic form parameters are inconsistent");
  Potential p;
  p.tag = "quadratic_form";
  p.A = std::move(A);
  p.b = std::move(b);
  p.c = c;
  Eigen::MatrixXd M = p.A;
  Vec bb = p.b;
  p.eval = [M, bb, c](const Vec& x) { return 0.5 * x.dot(M * x) + bb.dot(x) + c; };
  Eigen::MatrixXd sym = 0.5 * (p.A + p.A.transpose());
  p.grad = [sym, bb](const Vec& x) { return Vec(sym * x + bb); };
  return p;
}

Potential linear_potential(Vec a) {
  Potential p;
  p.tag = "linear";
  p.b = std::move(a);
  Vec aa = p.b;
  p.eval = [aa](const Vec& x) { return aa.dot(x); };
  p.grad = [aa](const Vec&) { return aa; };
  return p;
}

Potential sq_norm_half_potential() {
  Potential p;
  p.tag = "sq_norm_half";
  p.eval = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
  p.grad = [](const Vec& x) { return x; };
  return p;
}

Potential double_well_potential() {
  Potential p;
  p.tag = "double_well";
  p.eval = [](const Vec& x) {
    double s = x.squaredNorm() - 1.0;
    return s * s;
  };
  p.grad = [](const Vec& x) { return Vec(4.0 * (x.squaredNorm() - 1.0) * x); };
  return p;
}

Potential log_sum_exp_potential() {
  Potential p;
  p.tag = "log_sum_exp";
  p.eval = [](const Vec& x) {
    double m = x.maxCoeff();
    return m + std::log((x.array() - m).exp().sum());
  };
  p.grad = [](const Vec& x) {
    double m = x.maxCoeff();
    Eigen::ArrayXd e = (x.array() - m).exp();
    return Vec(e / e.sum());
  };
  return p;
}

Potential polynomial_1d_potential(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  Potential p;
  p.tag = "polynomial_1d";
  p.coeffs = std::move(coeffs);
  const std::vector<double>& cs = p.coeffs;
  p.eval = [cs](const Vec& x) {
    double t = x[0], v = 0.0;
    for (std::size_t i = cs.size(); i-- > 0;) v = v * t + cs[i];
    return v;
  };
  p.grad = [cs](const Vec& x) {
    double t = x[0], d = 0.0;
    for (std::size_t i = cs.size(); i-- > 1;) d = d * t + i * cs[i];
    Vec g = Vec::Zero(x.size());
    g[0] = d;
    return g;
  };
  return p;
}

Potential custom_potential(ScalarField eval, std::function<Vec(const Vec&)> grad) {
  Potential p;
  p.tag = "custom";
  p.eval = std::move(eval);
  p.grad = std::move(grad);
  return p;
}

Potential potential_from_name(const std::string& name) {
  if (name == "sq_norm_half") return sq_norm_half_potential();
  if (name == "double_well") return double_well_potential();
  if (name == "log_sum_exp") return log_sum_exp_potential();
  throw ValidationError("invalid_potential", "unknown catalog potential '" + name + "'");
}

double gradient_probe_error(const Potential& p, int dim, std::uint64_t seed, int probes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < probes; ++t) {
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x[i] = gauss(rng);
    Vec g = p.grad(x);
    for (int i = 0; i < dim; ++i) {
      double h = 1e-6 * (1.0 + std::abs(x[i]));
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      double fd = (p.eval(xp) - p.eval(xm)) / (2.0 * h);
      double err = std::abs(fd - g[i]) / (1.0 + std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace wassercalc
