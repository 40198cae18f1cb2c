#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

namespace wassercalc {

using Vec = Eigen::VectorXd;
using PointMap = std::function<Vec(const Vec&)>;
using ScalarField = std::function<double(const Vec&)>;

// Finitely supported probability measure on R^d: atoms plus simplex weights.
// Canonical form has duplicate atoms merged, zero weights dropped, atoms
// sorted lexicographically, and weights renormalized to sum 1.
struct DiscreteMeasure {
  int dim = 0;
  std::vector<Vec> points;
  std::vector<double> weights;

  int size() const { return static_cast<int>(points.size()); }
};

inline constexpr double kAtomMergeTol = 1e-9;
inline constexpr double kWeightSumTol = 1e-6;

// Validates finiteness, nonnegative weights, weight sum within kWeightSumTol
// of 1, and consistent dimensions. Does not canonicalize.
DiscreteMeasure make_measure(int dim, std::vector<Vec> points, std::vector<double> weights);

DiscreteMeasure dirac(const Vec& x);

// Merges atoms within kAtomMergeTol, drops zero-weight atoms, sorts atoms
// lexicographically and renormalizes weights by their sum.
DiscreteMeasure canonicalize(const DiscreteMeasure& m);

// Positional comparison of two canonical measures.
bool canonically_equal(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol = 1e-12);

double second_moment(const DiscreteMeasure& m);
Vec mean_point(const DiscreteMeasure& m);

// Atoms mapped through f (codomain dimension out_dim), weights kept, then
// canonicalized.
DiscreteMeasure pushforward(const DiscreteMeasure& m, const PointMap& f, int out_dim);

double expected_value(const DiscreteMeasure& m, const ScalarField& V);
// E[V^2] - E[V]^2, clamped at 0 when rounding drives it slightly negative.
double variance(const DiscreteMeasure& m, const ScalarField& V);

}  // namespace wassercalc
