#include "wassercalc/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wassercalc/errors.hpp"

namespace wassercalc {

namespace {

bool lex_less(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

void check_finite(const DiscreteMeasure& m) {
  for (const auto& p : m.points) {
    if (!p.allFinite())
      throw ValidationError("non_finite_input", "measure has a non-finite coordinate");
  }
  for (double w : m.weights) {
    if (!std::isfinite(w))
      throw ValidationError("non_finite_input", "measure has a non-finite weight");
  }
}

}  // namespace

DiscreteMeasure make_measure(int dim, std::vector<Vec> points, std::vector<double> weights) {
  if (dim <= 0) throw ValidationError("invalid_dimension", "dim must be positive");
  if (points.size() != weights.size())
    throw ValidationError("shape_mismatch", "points and weights differ in length");
  if (points.empty()) throw ValidationError("empty_measure", "measure has no atoms");
  DiscreteMeasure m{dim, std::move(points), std::move(weights)};
  for (const auto& p : m.points) {
    if (p.size() != dim)
      throw ValidationError("shape_mismatch", "atom dimension does not match dim");
  }
  check_finite(m);
  double sum = 0.0;
  for (double w : m.weights) {
    if (w < 0) throw ValidationError("negative_weight", "weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTol)
    throw ValidationError("weight_sum",
                          "weights sum " + std::to_string(sum) + " \xE2\x89\xA0 1");
  return m;
}

DiscreteMeasure dirac(const Vec& x) {
  return make_measure(static_cast<int>(x.size()), {x}, {1.0});
}

DiscreteMeasure canonicalize(const DiscreteMeasure& m) {
  check_finite(m);
  double sum = 0.0;
  for (double w : m.weights) {
    if (w < 0) throw ValidationError("negative_weight", "weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTol)
    throw ValidationError("weight_sum",
                          "weights sum " + std::to_string(sum) + " \xE2\x89\xA0 1");

  // First-fit merge onto the earliest representative within tolerance.
  std::vector<Vec> reps;
  std::vector<double> mass;
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    bool merged = false;
    for (std::size_t r = 0; r < reps.size(); ++r) {
      if ((m.points[i] - reps[r]).norm() <= kAtomMergeTol) {
        mass[r] += m.weights[i];
        merged = true;
        break;
      }
    }
    if (!merged) {
      reps.push_back(m.points[i]);
      mass.push_back(m.weights[i]);
    }
  }

  std::vector<std::size_t> order(reps.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return lex_less(reps[a], reps[b]); });

  DiscreteMeasure out;
  out.dim = m.dim;
  double kept = 0.0;
  for (std::size_t idx : order) {
    if (mass[idx] < 1e-15) continue;
    out.points.push_back(reps[idx]);
    out.weights.push_back(mass[idx]);
    kept += mass[idx];
  }
  if (out.points.empty())
    throw ValidationError("empty_measure", "all mass removed during canonicalization");
  for (double& w : out.weights) w /= kept;
  return out;
}

bool canonically_equal(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol) {
  if (a.dim != b.dim || a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i) {
    if ((a.points[i] - b.points[i]).lpNorm<Eigen::Infinity>() > tol) return false;
    if (std::abs(a.weights[i] - b.weights[i]) > tol) return false;
  }
  return true;
}

double second_moment(const DiscreteMeasure& m) {
  double s = 0.0;
  for (int i = 0; i < m.size(); ++i) s += m.weights[i] * m.points[i].squaredNorm();
  return s;
}

Vec mean_point(const DiscreteMeasure& m) {
  Vec mu = Vec::Zero(m.dim);
  for (int i = 0; i < m.size(); ++i) mu += m.weights[i] * m.points[i];
  return mu;
}

DiscreteMeasure pushforward(const DiscreteMeasure& m, const PointMap& f, int out_dim) {
  DiscreteMeasure out;
  out.dim = out_dim;
  out.weights = m.weights;
  out.points.reserve(m.points.size());
  for (const auto& p : m.points) {
    Vec y = f(p);
    if (y.size() != out_dim)
      throw ValidationError("shape_mismatch", "pushforward image has wrong dimension");
    if (!y.allFinite())
      throw ValidationError("non_finite_image", "pushforward image is non-finite");
    out.points.push_back(std::move(y));
  }
  return canonicalize(out);
}

double expected_value(const DiscreteMeasure& m, const ScalarField& V) {
  double s = 0.0;
  for (int i = 0; i < m.size(); ++i) {
    double v = V(m.points[i]);
    if (!std::isfinite(v))
      throw ValidationError("non_finite_potential", "potential is non-finite at an atom");
    s += m.weights[i] * v;
  }
  return s;
}

double variance(const DiscreteMeasure& m, const ScalarField& V) {
  double ev = 0.0, ev2 = 0.0;
  for (int i = 0; i < m.size(); ++i) {
    double v = V(m.points[i]);
    if (!std::isfinite(v))
      throw ValidationError("non_finite_potential", "potential is non-finite at an atom");
    ev += m.weights[i] * v;
    ev2 += m.weights[i] * v * v;
  }
  double var = ev2 - ev * ev;
  return var < 0 ? 0.0 : var;
}

}  // namespace wassercalc
