#include "wassercalc/solvers.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include "wassercalc/errors.hpp"
#include "wassercalc/parallel.hpp"
#include "wassercalc/transport.hpp"

namespace wassercalc {

namespace {

bool lex_less_vec(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

Vec gaussian_vec(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  return v;
}

// Backtracking gradient descent of f from z0. Returns the final iterate.
struct DescentResult {
  Vec z;
  double value = 0.0;
  double grad_norm = 0.0;
  bool diverged = false;
};

DescentResult descend(const std::function<double(const Vec&)>& f,
                      const std::function<Vec(const Vec&)>& grad, Vec z0, int max_iters,
                      double divergence_radius) {
  DescentResult out;
  Vec z = std::move(z0);
  double fz = f(z);
  for (int it = 0; it < max_iters; ++it) {
    Vec g = grad(z);
    double gn = g.norm();
    if (gn <= 1e-12 * (1.0 + std::abs(fz))) break;
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Vec zn = z - t * g;
      double fn = f(zn);
      if (std::isfinite(fn) && fn <= fz - 0.3 * t * gn * gn) {
        z = std::move(zn);
        fz = fn;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    if (divergence_radius > 0 && z.norm() > divergence_radius) {
      out.diverged = true;
      break;
    }
  }
  // Near a nondegenerate minimum the objective differences fall below double
  // resolution before the gradient does; polish on the gradient norm alone,
  // reverting if the value ever comes out worse than the descent left it.
  if (!out.diverged) {
    Vec z_pre = z;
    double fz_pre = fz;
    for (int it = 0; it < 60; ++it) {
      Vec g = grad(z);
      double gn = g.norm();
      if (gn <= 1e-13 * (1.0 + std::abs(fz))) break;
      double t = 1.0;
      bool improved = false;
      for (int bt = 0; bt < 40; ++bt) {
        Vec zn = z - t * g;
        double gnn = grad(zn).norm();
        if (std::isfinite(gnn) && gnn < gn * (1.0 - 1e-3)) {
          z = std::move(zn);
          improved = true;
          break;
        }
        t *= 0.5;
      }
      if (!improved) break;
    }
    fz = f(z);
    if (!(fz <= fz_pre + 1e-12 * (1.0 + std::abs(fz_pre)))) {
      z = std::move(z_pre);
      fz = fz_pre;
    }
  }
  out.value = fz;
  out.grad_norm = grad(z).norm();
  out.z = std::move(z);
  return out;
}

double dot_theta(const Vec& theta, const Vec& x) { return theta.dot(x); }

}  // namespace

LinearSecondMomentSolution solve_linear_second_moment(const Vec& theta, double eps) {
  double norm = theta.norm();
  if (norm == 0.0) throw ValidationError("zero_theta", "theta must be nonzero");
  if (!(eps > 0)) throw ValidationError("invalid_argument", "eps must be positive");
  LinearSecondMomentSolution sol;
  sol.mu_star = dirac(Vec(-eps / norm * theta));
  sol.lambda_star = norm / (2.0 * eps);
  sol.objective = -eps * norm;
  Functional J = expected_value_functional(linear_potential(theta));
  Constraint C = second_moment_ball_constraint(eps);
  sol.report = kkt_residual(J, C, sol.mu_star);
  return sol;
}

namespace {

std::vector<double> quartic_real_roots(double c4, double c3, double c2, double c1, double c0) {
  Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
  companion(0, 3) = -c0 / c4;
  companion(1, 3) = -c1 / c4;
  companion(2, 3) = -c2 / c4;
  companion(3, 3) = -c3 / c4;
  companion(1, 0) = companion(2, 1) = companion(3, 2) = 1.0;
  Eigen::EigenSolver<Eigen::Matrix4d> es(companion);
  std::vector<double> roots;
  for (int i = 0; i < 4; ++i) {
    std::complex<double> r = es.eigenvalues()[i];
    if (std::abs(r.imag()) <= 1e-8 * (1.0 + std::abs(r.real()))) roots.push_back(r.real());
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

struct MeanVarCandidate {
  double lambda = 0.0;
  Eigen::MatrixXd M;
  Vec offset;
  DiscreteMeasure mu;
  double cost_direct = 0.0;
  double cost_formula = 0.0;
  double radius = 0.0;
  StationarityReport report;
  std::string branch;
};

MeanVarCandidate evaluate_candidate(const Vec& theta, double rho, double eps,
                                    const DiscreteMeasure& nu_hat, DiscreteMeasure mu,
                                    double lambda, Eigen::MatrixXd M, Vec offset,
                                    std::string branch, double cost_formula) {
  MeanVarCandidate cand;
  cand.lambda = lambda;
  cand.M = std::move(M);
  cand.offset = std::move(offset);
  cand.mu = std::move(mu);
  cand.branch = std::move(branch);
  cand.cost_formula = cost_formula;
  auto lin = [&theta](const Vec& x) { return dot_theta(theta, x); };
  cand.cost_direct = expected_value(cand.mu, lin) + 0.5 * rho * variance(cand.mu, lin);
  cand.radius = w2(cand.mu, nu_hat).first;
  Functional J = mean_variance_functional(theta, rho, -1);
  Constraint C = wasserstein_ball_constraint(nu_hat, eps);
  cand.report = kkt_residual(J, C, cand.mu);
  return cand;
}

}  // namespace

DroSolution solve_meanvar_dro(const Vec& theta, double rho, double eps,
                              const DiscreteMeasure& nu_hat_in) {
  const double tn = theta.norm();
  if (tn == 0.0) throw ValidationError("zero_theta", "theta must be nonzero");
  if (!(eps > 0)) throw ValidationError("invalid_argument", "eps must be positive");
  if (rho < 0) throw ValidationError("invalid_argument", "rho must be nonnegative");
  DiscreteMeasure nu_hat = canonicalize(nu_hat_in);
  if (nu_hat.dim != theta.size())
    throw ValidationError("dimension_mismatch", "theta and nu_hat dimensions differ");

  auto lin = [&theta](const Vec& x) { return dot_theta(theta, x); };
  const double e_nu = expected_value(nu_hat, lin);
  const double var_nu = variance(nu_hat, lin);
  const double s = tn * tn;
  const int d = nu_hat.dim;

  std::vector<MeanVarCandidate> candidates;
  std::vector<double> roots_considered;

  auto shift_candidate = [&]() {
    // Var[<theta,x>] at mu* equals Var at nu_hat: every atom shifts by
    // eps*theta/||theta||, lambda = ||theta||/(2 eps).
    double lambda = tn / (2.0 * eps);
    Vec shift = (eps / tn) * theta;
    DiscreteMeasure mu = nu_hat;
    for (auto& p : mu.points) p += shift;
    mu = canonicalize(mu);
    return evaluate_candidate(theta, rho, eps, nu_hat, std::move(mu), lambda,
                              Eigen::MatrixXd::Identity(d, d), Vec(-shift), "shift",
                              e_nu + tn * eps);
  };

  if (rho == 0.0) {
    candidates.push_back(shift_candidate());
  } else if (var_nu <= 1e-14 * (1.0 + s)) {
    // Both analytic branches; selection by direct evaluation below.
    candidates.push_back(shift_candidate());
    double lambda1 = 0.5 * rho * s;
    double sigma_sq = eps * eps / s - 1.0 / (rho * rho * s * s);
    if (sigma_sq >= -1e-15) {
      sigma_sq = std::max(0.0, sigma_sq);
      double mean_t = 1.0 / (rho * s);
      double sd = std::sqrt(sigma_sq);
      DiscreteMeasure mu;
      mu.dim = d;
      for (int j = 0; j < nu_hat.size(); ++j) {
        mu.points.push_back(nu_hat.points[j] + (mean_t + sd) * theta);
        mu.weights.push_back(0.5 * nu_hat.weights[j]);
        mu.points.push_back(nu_hat.points[j] + (mean_t - sd) * theta);
        mu.weights.push_back(0.5 * nu_hat.weights[j]);
      }
      mu = canonicalize(mu);
      Eigen::MatrixXd M =
          Eigen::MatrixXd::Identity(d, d) - (rho / (2.0 * lambda1)) * (theta * theta.transpose());
      double estar = e_nu + 1.0 / rho;
      Vec offset = -(1.0 / (2.0 * lambda1)) * (1.0 - rho * estar) * theta;
      candidates.push_back(evaluate_candidate(theta, rho, eps, nu_hat, std::move(mu), lambda1,
                                              std::move(M), std::move(offset), "var0_split",
                                              e_nu + rho * s * eps * eps));
    }
  } else {
    const double A = rho * s;
    std::vector<double> roots =
        quartic_real_roots(16.0 * eps * eps, -16.0 * A * eps * eps,
                           4.0 * eps * eps * A * A - 4.0 * s - 4.0 * rho * rho * s * var_nu,
                           4.0 * A * s, -A * A * s);
    roots_considered = roots;
    std::vector<std::string> rejections;
    for (double lambda : roots) {
      if (lambda < 0.5 * A - 1e-9) {
        rejections.push_back("root " + std::to_string(lambda) + " violates lambda >= rho||theta||^2/2");
        continue;
      }
      if (4.0 * lambda * lambda * eps * eps < s - 1e-9 * (1.0 + s)) {
        rejections.push_back("root " + std::to_string(lambda) + " violates 4 lambda^2 eps^2 >= ||theta||^2");
        continue;
      }
      double det = 1.0 - A / (2.0 * lambda);
      if (std::abs(det) <= 1e-12) {
        rejections.push_back("root " + std::to_string(lambda) + " makes the map singular");
        continue;
      }
      Eigen::MatrixXd M =
          Eigen::MatrixXd::Identity(d, d) - (rho / (2.0 * lambda)) * (theta * theta.transpose());
      // Offset from the stationarity condition with Step 1 substituted; the
      // rho factors are carried (cf. decisions ledger).
      Vec offset = -(1.0 / (2.0 * lambda)) * (1.0 - rho * e_nu - rho * s / (2.0 * lambda)) * theta;
      Eigen::MatrixXd Minv = M.inverse();
      DiscreteMeasure mu;
      mu.dim = d;
      mu.weights = nu_hat.weights;
      for (const auto& y : nu_hat.points) mu.points.push_back(Minv * (y - offset));
      mu = canonicalize(mu);
      double denom = A - 2.0 * lambda;
      double formula = s / (2.0 * lambda) + e_nu +
                       rho / (4.0 * lambda * lambda * denom * denom) * var_nu;
      candidates.push_back(evaluate_candidate(theta, rho, eps, nu_hat, std::move(mu), lambda,
                                              std::move(M), std::move(offset), "quartic", formula));
    }
    if (candidates.empty()) {
      std::string what = "no quartic root satisfies the validity conditions;";
      for (const auto& r : rejections) what += " " + r + ";";
      if (roots.empty()) what += " no real roots";
      throw SolverError("no_valid_root", what);
    }
  }

  // Keep residual-feasible candidates, then take the most negative objective
  // (largest worst-case risk).
  const MeanVarCandidate* best = nullptr;
  for (const auto& cand : candidates) {
    bool feasible = cand.report.residual <= 1e-6 * (1.0 + tn) &&
                    std::abs(cand.radius - eps) <= 1e-6 * (1.0 + eps);
    if (!feasible) continue;
    if (!best || cand.cost_direct > best->cost_direct) best = &cand;
  }
  if (!best) {
    // Fall back to the best residual among all candidates rather than failing
    // silently; the report carries the achieved numbers.
    for (const auto& cand : candidates)
      if (!best || cand.report.residual < best->report.residual) best = &cand;
  }

  DroSolution sol;
  sol.lambda_star = best->lambda;
  sol.map_matrix = best->M;
  sol.map_offset = best->offset;
  sol.worst_case = best->mu;
  sol.cost_direct = best->cost_direct;
  sol.cost_formula = best->cost_formula;
  sol.formula_mismatch =
      std::abs(best->cost_direct - best->cost_formula) > 1e-6 * (1.0 + std::abs(best->cost_direct));
  sol.radius_check = best->radius;
  sol.report = best->report;
  sol.branch = best->branch;
  sol.roots_considered = roots_considered;
  return sol;
}

ProxSolution prox(const Potential& V, const DiscreteMeasure& mu_bar, int multistart,
                  std::uint64_t seed) {
  if (multistart < 1) throw ValidationError("invalid_argument", "multistart must be >= 1");
  DiscreteMeasure base = canonicalize(mu_bar);
  ProxSolution sol;
  sol.atoms.resize(base.size());

  parallel_for(base.size(), [&](std::size_t k) {
    const Vec& y = base.points[k];
    auto f = [&](const Vec& z) { return V.eval(z) + 0.5 * (z - y).squaredNorm(); };
    auto g = [&](const Vec& z) { return Vec(V.grad(z) + (z - y)); };
    std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(k));
    Vec best_z = y;
    double best_f = std::numeric_limits<double>::infinity();
    for (int s = 0; s < multistart; ++s) {
      Vec z0 = (s == 0) ? y : Vec(y + (1.0 + y.norm()) * gaussian_vec(rng, base.dim));
      DescentResult r = descend(f, g, std::move(z0), 500, -1.0);
      if (s == 0) {
        best_f = r.value;
        best_z = r.z;
        continue;
      }
      bool tie = std::abs(r.value - best_f) <= 1e-10 * (1.0 + std::abs(best_f));
      if (r.value < best_f && !tie) {
        best_f = r.value;
        best_z = r.z;
      } else if (tie && lex_less_vec(r.z, best_z)) {
        best_f = std::min(best_f, r.value);
        best_z = r.z;
      }
    }
    ProxAtomReport rep;
    rep.minimizer = best_z;
    rep.value = best_f;
    rep.first_order_error = (V.grad(best_z) + (best_z - y)).norm();
    rep.converged = rep.first_order_error <= 1e-8;
    sol.atoms[k] = std::move(rep);
  });

  DiscreteMeasure out;
  out.dim = base.dim;
  sol.cost = 0.0;
  for (int k = 0; k < base.size(); ++k) {
    out.points.push_back(sol.atoms[k].minimizer);
    out.weights.push_back(base.weights[k]);
    sol.cost += base.weights[k] * sol.atoms[k].value;
  }
  sol.mu_star = canonicalize(out);
  return sol;
}

namespace {

// Euclidean projection onto the probability simplex.
void project_simplex(std::vector<double>& w) {
  std::vector<double> u = w;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, tau = 0.0;
  int rho_idx = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0) {
      rho_idx = static_cast<int>(i);
      tau = t;
    }
  }
  (void)rho_idx;
  for (double& x : w) x = std::max(0.0, x - tau);
  double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= sum;
}

struct GmmState {
  std::vector<Vec> x;
  std::vector<double> w;
};

struct GmmGrads {
  std::vector<Vec> gx;  // full derivative w.r.t. x_k (mass included)
  std::vector<double> gw;
  double nll = 0.0;
  double residual = 0.0;  // local norm of the Wasserstein gradient
};

GmmGrads gmm_eval(const GmmState& st, const std::vector<Vec>& data) {
  const int m = static_cast<int>(st.x.size());
  const std::size_t n = data.size();
  GmmGrads out;
  out.gx.assign(m, Vec::Zero(st.x[0].size()));
  out.gw.assign(m, 0.0);
  std::vector<double> denom(n, 0.0);
  std::vector<std::vector<double>> phi(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < m; ++k) {
      phi[i][k] = unit_gaussian_kernel(st.x[k] - data[i]);
      denom[i] += st.w[k] * phi[i][k];
    }
    if (!(denom[i] > 0.0))
      throw SolverError("log_of_zero",
                        "gmm mixture density underflows at data index " + std::to_string(i));
    out.nll -= std::log(denom[i]);
  }
  for (int k = 0; k < m; ++k) {
    Vec arrow = Vec::Zero(st.x[0].size());
    double gw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      arrow += (st.x[k] - data[i]) * (phi[i][k] / denom[i]);
      gw -= phi[i][k] / denom[i];
    }
    out.gx[k] = st.w[k] * arrow;
    out.gw[k] = gw;
    out.residual += st.w[k] * arrow.squaredNorm();
  }
  out.residual = std::sqrt(std::max(0.0, out.residual));
  return out;
}

std::vector<Vec> kmeanspp_init(const std::vector<Vec>& data, int m, std::mt19937_64& rng) {
  std::vector<Vec> centers;
  std::uniform_int_distribution<std::size_t> uni(0, data.size() - 1);
  centers.push_back(data[uni(rng)]);
  std::vector<double> dist2(data.size());
  while (static_cast<int>(centers.size()) < m) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, (data[i] - c).squaredNorm());
      dist2[i] = best;
      total += best;
    }
    if (total <= 0) {
      centers.push_back(data[uni(rng)]);
      continue;
    }
    std::uniform_real_distribution<double> pick(0.0, total);
    double target = pick(rng);
    std::size_t chosen = data.size() - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      acc += dist2[i];
      if (acc >= target) {
        chosen = i;
        break;
      }
    }
    centers.push_back(data[chosen]);
  }
  return centers;
}

}  // namespace

GmmFit fit_gaussian_mixture(const std::vector<Vec>& data, int m, std::uint64_t seed) {
  if (m < 1) throw ValidationError("invalid_argument", "component count must be >= 1");
  if (data.empty()) throw ValidationError("invalid_argument", "data must be nonempty");
  const int dim = static_cast<int>(data[0].size());
  for (const auto& x : data)
    if (x.size() != dim || !x.allFinite())
      throw ValidationError("non_finite_input", "data point invalid");

  std::vector<Vec> sorted = data;
  std::sort(sorted.begin(), sorted.end(), lex_less_vec);
  int distinct = 1;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if ((sorted[i] - sorted[i - 1]).norm() > 1e-12) ++distinct;
  if (m > distinct)
    throw ValidationError("degenerate_init",
                          "component count exceeds the number of distinct data points");

  std::mt19937_64 rng(seed);
  GmmState st;
  st.x = kmeanspp_init(data, m, rng);
  st.w.assign(m, 1.0 / m);

  GmmFit fit;
  GmmGrads cur = gmm_eval(st, data);
  fit.nll_trace.push_back(cur.nll);
  fit.residual_trace.push_back(cur.residual);

  double step = 1.0;
  const int max_iters = 2000;
  for (int it = 0; it < max_iters; ++it) {
    double gx2 = 0.0, gnorm2 = 0.0;
    for (int k = 0; k < m; ++k) {
      gx2 += cur.gx[k].squaredNorm();
      gnorm2 += cur.gx[k].squaredNorm() + cur.gw[k] * cur.gw[k];
    }
    if (std::sqrt(gnorm2) <= 1e-13 * (1.0 + std::abs(cur.nll))) break;

    bool accepted = false;
    double t = std::min(step * 2.0, 1e3);
    for (int bt = 0; bt < 60; ++bt) {
      GmmState trial = st;
      for (int k = 0; k < m; ++k) {
        trial.x[k] -= t * cur.gx[k];
        trial.w[k] -= t * cur.gw[k];
      }
      project_simplex(trial.w);
      GmmGrads nxt;
      try {
        nxt = gmm_eval(trial, data);
      } catch (const SolverError&) {
        t *= 0.5;
        continue;
      }
      // Armijo decrease on the unprojected position block, with a strictness
      // floor so weight-only plateau steps cannot loop.
      if (nxt.nll <= cur.nll - 0.3 * t * gx2 - 1e-16 * (1.0 + std::abs(cur.nll))) {
        st = std::move(trial);
        cur = std::move(nxt);
        step = t;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    fit.nll_trace.push_back(cur.nll);
    fit.residual_trace.push_back(cur.residual);
  }

  DiscreteMeasure out;
  out.dim = dim;
  out.points = st.x;
  out.weights = st.w;
  fit.mu_star = canonicalize(out);
  fit.nll = evaluate(gmm_nll_functional(data), fit.mu_star);
  fit.residual = local_norm(subgradient_element(gmm_nll_functional(data), fit.mu_star).xi);
  return fit;
}

namespace {

struct InnerMax {
  Vec maximizer;
  double value = -std::numeric_limits<double>::infinity();
  bool bounded = true;
};

InnerMax inner_maximize(const Potential& V, double rho, double lambda, double beta,
                        const Vec& anchor, int multistart, std::uint64_t seed) {
  auto h = [&](const Vec& y) {
    double v = V.eval(y);
    return v + rho * (v - beta) * (v - beta) - lambda * (y - anchor).squaredNorm();
  };
  auto grad_h = [&](const Vec& y) {
    double v = V.eval(y);
    return Vec(V.grad(y) * (1.0 + 2.0 * rho * (v - beta)) - 2.0 * lambda * (y - anchor));
  };
  auto neg = [&](const Vec& y) { return -h(y); };
  auto neg_grad = [&](const Vec& y) { return Vec(-grad_h(y)); };
  const double radius = 1e8 * (1.0 + anchor.norm());

  InnerMax out;
  std::mt19937_64 rng(seed);
  for (int s = 0; s < multistart; ++s) {
    Vec y0 = (s == 0) ? anchor
                      : Vec(anchor + (1.0 + anchor.norm()) *
                                         gaussian_vec(rng, static_cast<int>(anchor.size())));
    DescentResult r = descend(neg, neg_grad, std::move(y0), 300, radius);
    if (r.diverged) {
      // Divergence from the atom itself means the multiplier does not bound
      // the ascent; a runaway perturbed start is merely discarded.
      if (s == 0) {
        out.bounded = false;
        return out;
      }
      continue;
    }
    double val = -r.value;
    if (val > out.value || (val == out.value && lex_less_vec(r.z, out.maximizer))) {
      out.value = val;
      out.maximizer = r.z;
    }
  }
  return out;
}

}  // namespace

DualSolution solve_nonlinear_dro_dual(const Potential& V, double rho, double eps,
                                      const DiscreteMeasure& nu_hat_in, int multistart,
                                      std::uint64_t seed) {
  if (!(eps > 0)) throw ValidationError("invalid_argument", "eps must be positive");
  if (rho < 0) throw ValidationError("invalid_argument", "rho must be nonnegative");
  if (multistart < 1) throw ValidationError("invalid_argument", "multistart must be >= 1");
  DiscreteMeasure nu_hat = canonicalize(nu_hat_in);

  const double beta_probe = expected_value(nu_hat, V.eval);
  const double j_at_nu = -(expected_value(nu_hat, V.eval) + rho * variance(nu_hat, V.eval));

  // Inner maxima across all atoms; infinity when any ascent diverges. The
  // per-atom ascents are independent (seed XOR atom index) and run in
  // parallel; the weighted sum reduces in ascending atom order.
  auto dual_at = [&](double lambda, double beta, std::vector<Vec>* maximizers) {
    std::vector<InnerMax> per_atom(nu_hat.size());
    parallel_for(per_atom.size(), [&](std::size_t k) {
      per_atom[k] = inner_maximize(V, rho, lambda, beta, nu_hat.points[k], multistart,
                                   seed ^ static_cast<std::uint64_t>(k));
    });
    double total = lambda * eps * eps;
    if (maximizers) maximizers->assign(nu_hat.size(), Vec());
    for (int k = 0; k < nu_hat.size(); ++k) {
      if (!per_atom[k].bounded) return std::numeric_limits<double>::infinity();
      total += nu_hat.weights[k] * per_atom[k].value;
      if (maximizers) (*maximizers)[k] = per_atom[k].maximizer;
    }
    return total;
  };

  auto bounded_at = [&](double lambda) {
    return std::isfinite(dual_at(lambda, beta_probe, nullptr));
  };

  // Bisection on inner-max boundedness.
  double lambda_hi = 1.0;
  int doublings = 0;
  while (!bounded_at(lambda_hi)) {
    lambda_hi *= 2.0;
    if (++doublings > 40) {
      int witness = 0;
      for (int k = 0; k < nu_hat.size(); ++k) {
        InnerMax im = inner_maximize(V, rho, lambda_hi, beta_probe, nu_hat.points[k], multistart,
                                     seed ^ static_cast<std::uint64_t>(k));
        if (!im.bounded) {
          witness = k;
          break;
        }
      }
      throw SolverError("unbounded_inner",
                        "no multiplier bounds the inner maximization; witnessing atom " +
                            std::to_string(witness));
    }
  }
  double lambda_lo = 0.0;
  for (int it = 0; it < 60 && lambda_hi - lambda_lo > 1e-10 * (1.0 + lambda_hi); ++it) {
    double mid = 0.5 * (lambda_lo + lambda_hi);
    if (bounded_at(mid))
      lambda_hi = mid;
    else
      lambda_lo = mid;
  }
  const double lambda_min = lambda_hi;

  // Nelder-Mead over (lambda, beta), multistart, deterministic.
  long evals = 0;
  auto objective = [&](double lambda, double beta) {
    if (lambda < lambda_min) return std::numeric_limits<double>::infinity();
    double d = dual_at(lambda, beta, nullptr);
    if (++evals % 64 == 0 && std::isfinite(d)) {
      // Weak duality spot check against the (feasible) center nu_hat.
      if (-d > j_at_nu + 1e-9 * (1.0 + std::abs(j_at_nu)))
        throw SolverError("weak_duality_violation",
                          "dual bound exceeded the primal value at nu_hat");
    }
    return d;
  };

  using Pt = std::array<double, 2>;
  auto run_nm = [&](Pt start) {
    std::array<Pt, 3> simplex{start, Pt{start[0] * 1.3 + 0.5, start[1]},
                              Pt{start[0], start[1] + 0.5 * (1.0 + std::abs(start[1]))}};
    std::array<double, 3> f;
    for (int i = 0; i < 3; ++i) f[i] = objective(simplex[i][0], simplex[i][1]);
    for (int it = 0; it < 400; ++it) {
      std::array<int, 3> ord{0, 1, 2};
      std::sort(ord.begin(), ord.end(), [&](int a, int b) { return f[a] < f[b]; });
      std::array<Pt, 3> sx{simplex[ord[0]], simplex[ord[1]], simplex[ord[2]]};
      std::array<double, 3> fx{f[ord[0]], f[ord[1]], f[ord[2]]};
      simplex = sx;
      f = fx;
      double size = std::max(
          std::hypot(simplex[1][0] - simplex[0][0], simplex[1][1] - simplex[0][1]),
          std::hypot(simplex[2][0] - simplex[0][0], simplex[2][1] - simplex[0][1]));
      if (size < 1e-10 * (1.0 + std::abs(simplex[0][0]) + std::abs(simplex[0][1]))) break;
      Pt centroid{0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])};
      auto affine = [&](double t) {
        return Pt{centroid[0] + t * (simplex[2][0] - centroid[0]),
                  centroid[1] + t * (simplex[2][1] - centroid[1])};
      };
      Pt refl = affine(-1.0);
      double fr = objective(refl[0], refl[1]);
      if (fr < f[0]) {
        Pt exp_pt = affine(-2.0);
        double fe = objective(exp_pt[0], exp_pt[1]);
        if (fe < fr) {
          simplex[2] = exp_pt;
          f[2] = fe;
        } else {
          simplex[2] = refl;
          f[2] = fr;
        }
      } else if (fr < f[1]) {
        simplex[2] = refl;
        f[2] = fr;
      } else {
        Pt con = affine(fr < f[2] ? -0.5 : 0.5);
        double fc = objective(con[0], con[1]);
        if (fc < std::min(fr, f[2])) {
          simplex[2] = con;
          f[2] = fc;
        } else {
          for (int i = 1; i < 3; ++i) {
            simplex[i][0] = 0.5 * (simplex[i][0] + simplex[0][0]);
            simplex[i][1] = 0.5 * (simplex[i][1] + simplex[0][1]);
            f[i] = objective(simplex[i][0], simplex[i][1]);
          }
        }
      }
    }
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (f[i] < f[best]) best = i;
    return std::make_pair(simplex[best], f[best]);
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Pt best_pt{std::max(2.0 * lambda_min, lambda_min + 1.0), beta_probe};
  double best_val = std::numeric_limits<double>::infinity();
  for (int s = 0; s < multistart; ++s) {
    Pt start = best_pt;
    if (s > 0) {
      start[0] = lambda_min + (std::max(2.0 * lambda_min, lambda_min + 1.0) - lambda_min) *
                                  std::exp(0.5 * gauss(rng));
      start[1] = beta_probe + (1.0 + std::abs(beta_probe)) * gauss(rng);
    }
    auto [pt, val] = run_nm(start);
    if (val < best_val) {
      best_val = val;
      best_pt = pt;
    }
  }

  DualSolution sol;
  sol.lambda_star = best_pt[0];
  sol.beta_star = best_pt[1];
  sol.lambda_min = lambda_min;
  sol.dual_value = dual_at(best_pt[0], best_pt[1], &sol.per_atom_maximizers);

  DiscreteMeasure primal;
  primal.dim = nu_hat.dim;
  primal.points = sol.per_atom_maximizers;
  primal.weights = nu_hat.weights;
  sol.reconstructed_primal = canonicalize(primal);
  double obj = -(expected_value(sol.reconstructed_primal, V.eval) +
                 rho * variance(sol.reconstructed_primal, V.eval));
  sol.gap = std::abs(-sol.dual_value - obj);
  return sol;
}

}  // namespace wassercalc
