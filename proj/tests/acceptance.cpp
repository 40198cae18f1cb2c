// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code is the number of
// failed criteria.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "wassercalc/io.hpp"
#include "wassercalc/solvers.hpp"

using namespace wassercalc;
namespace wt = wassercalc::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Harness {
  int failures = 0;

  void criterion(int id, const std::string& title, const std::function<bool(std::string&)>& fn) {
    std::string detail;
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", id, title.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

Vec v1(double x) {
  Vec v(1);
  v << x;
  return v;
}

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

DiscreteMeasure paper_mu() {
  return canonicalize(make_measure(2, {v2(0, 0), v2(1, 1)}, {0.5, 0.5}));
}

DiscreteMeasure paper_nu() {
  return canonicalize(make_measure(2, {v2(1, 0), v2(0, 1)}, {0.5, 0.5}));
}

}  // namespace

int main() {
  Harness h;

  h.criterion(1, "OT oracle equivalence on 200 random uniform instances", [](std::string& d) {
    std::mt19937_64 rng(20240001);
    auto t0 = Clock::now();
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      int n = 1 + trial % 6, dim = 1 + trial % 3;
      DiscreteMeasure mu = wt::random_uniform_measure(rng, n, dim);
      DiscreteMeasure nu = wt::random_uniform_measure(rng, n, dim);
      if (mu.size() != n || nu.size() != n) continue;
      double fast = solve_ot(mu, nu, sqeuclidean_cost()).value;
      double slow = brute_force_ot(mu, nu, sqeuclidean_cost()).value;
      worst = std::max(worst, std::abs(fast - slow));
    }
    double elapsed = seconds_since(t0);
    std::ostringstream os;
    os << "max |solve_ot - brute_force| = " << worst << ", " << elapsed << " s";
    d = os.str();
    return worst <= 1e-9 && elapsed < 10.0;
  });

  h.criterion(2, "paper value reproduction: half W2^2 at the two-plan example",
              [](std::string& d) {
                double value = evaluate(w2sq_functional(paper_nu(), 0.5), paper_mu());
                std::ostringstream os;
                os << "J(mu) = " << value;
                d = os.str();
                return std::abs(value - 0.5) <= 1e-12;
              });

  h.criterion(3, "W2 metric axioms on 100 random triples", [](std::string& d) {
    std::mt19937_64 rng(20240003);
    double worst_sym = 0.0, worst_tri = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      int dim = 1 + trial % 3;
      DiscreteMeasure a = wt::random_measure(rng, 1 + trial % 6, dim);
      DiscreteMeasure b = wt::random_measure(rng, 1 + (trial + 2) % 6, dim);
      DiscreteMeasure c = wt::random_measure(rng, 1 + (trial + 4) % 6, dim);
      double ab = w2(a, b).first, ba = w2(b, a).first;
      double ac = w2(a, c).first, cb = w2(c, b).first;
      worst_sym = std::max(worst_sym, std::abs(ab - ba));
      worst_tri = std::max(worst_tri, ab - (ac + cb));
    }
    std::ostringstream os;
    os << "max asymmetry " << worst_sym << ", max triangle violation " << worst_tri;
    d = os.str();
    return worst_sym <= 1e-9 && worst_tri <= 1e-8;
  });

  h.criterion(4, "tangent identity and per-atom LP vs enumeration on 100 pairs",
              [](std::string& d) {
                std::mt19937_64 rng(20240004);
                double worst_id = 0.0, worst_lp = 0.0;
                for (int trial = 0; trial < 100; ++trial) {
                  DiscreteMeasure anchor =
                      wt::random_measure(rng, 1 + trial % 3, 1 + trial % 2);
                  Variation xi1 = wt::random_variation(rng, anchor, 4);
                  Variation xi2 = wt::random_variation(rng, anchor, 4);
                  double dist = local_distance(xi1, xi2).value;
                  double n1 = local_norm(xi1), n2 = local_norm(xi2);
                  double inner = local_inner(xi1, xi2).value;
                  worst_id = std::max(
                      worst_id, std::abs(dist * dist - (n1 * n1 - 2 * inner + n2 * n2)));
                  worst_lp = std::max(
                      worst_lp, std::abs(inner - wt::gluing_enum_inner_max(xi1, xi2)));
                  worst_lp = std::max(
                      worst_lp,
                      std::abs(dist - wt::gluing_enum_distance_min(xi1, xi2)));
                }
                std::ostringstream os;
                os << "max identity defect " << worst_id << ", max LP-vs-enumeration gap "
                   << worst_lp;
                d = os.str();
                return worst_id <= 1e-8 && worst_lp <= 1e-9;
              });

  h.criterion(5, "gradient checks across the differentiable catalog", [](std::string& d) {
    std::mt19937_64 rng(20240005);
    std::vector<Vec> data;
    for (int i = 0; i < 10; ++i) data.push_back(wt::random_vec(rng, 2, 1.0));
    Eigen::MatrixXd A(2, 2);
    A << 1.2, 0.4, 0.4, 0.8;
    std::vector<std::pair<std::string, Functional>> catalog;
    catalog.emplace_back("expected_value", expected_value_functional(
                                               quadratic_form_potential(A, v2(0.1, -0.2), 0.0)));
    catalog.emplace_back("variance", variance_functional(sq_norm_half_potential()));
    catalog.emplace_back("mean_variance", mean_variance_functional(v2(0.9, -0.4), 1.1, -1));
    catalog.emplace_back("interaction",
                         interaction_functional(double_well_potential(), 0.5));
    catalog.emplace_back("gmm_nll", gmm_nll_functional(data));
    double worst = 0.0;
    std::string worst_name;
    for (auto& [name, J] : catalog) {
      for (int trial = 0; trial < 20; ++trial) {
        DiscreteMeasure m = wt::random_measure(rng, 1 + trial % 4, 2);
        std::vector<Arrow> arrows;
        for (int k = 0; k < m.size(); ++k)
          arrows.push_back(Arrow{k, wt::random_vec(rng, 2), m.weights[k]});
        Variation xi = make_variation(m, std::move(arrows));
        double n = local_norm(xi);
        if (n < 1e-9) continue;
        xi = scale(1.0 / n, xi);
        double value = evaluate(J, m);
        double fd = fd_directional(J, m, xi, 1e-5);
        double predicted = local_inner(subgradient_element(J, m).xi, xi).value;
        double err = std::abs(fd - predicted) / (1.0 + std::abs(value));
        if (err > worst) {
          worst = err;
          worst_name = name;
        }
      }
    }
    std::ostringstream os;
    os << "max normalized gradient error " << worst << " (" << worst_name << ")";
    d = os.str();
    return worst <= 1e-3;
  });

  h.criterion(6, "closed-form KKT at the second-moment boundary, 20 random (theta, eps)",
              [](std::string& d) {
                std::mt19937_64 rng(20240006);
                double worst_res = 0.0, worst_lam = 0.0;
                for (int trial = 0; trial < 20; ++trial) {
                  int dim = 1 + trial % 3;
                  Vec theta = wt::random_vec(rng, dim);
                  if (theta.norm() < 0.1) theta[0] += 1.0;
                  double eps = 0.1 + 0.2 * (trial % 5);
                  DiscreteMeasure mu = dirac(Vec(-eps / theta.norm() * theta));
                  StationarityReport rep =
                      kkt_residual(expected_value_functional(linear_potential(theta)),
                                   second_moment_ball_constraint(eps), mu);
                  worst_res = std::max(worst_res, rep.residual);
                  worst_lam =
                      std::max(worst_lam, std::abs(rep.lambda - theta.norm() / (2 * eps)));
                }
                std::ostringstream os;
                os << "max residual " << worst_res << ", max |lambda - ||theta||/(2 eps)| "
                   << worst_lam;
                d = os.str();
                return worst_res <= 1e-10 && worst_lam <= 1e-9;
              });

  h.criterion(7, "non-attainment certificate for the mean-variance functional",
              [](std::string& d) {
                std::mt19937_64 rng(20240007);
                double worst = 0.0;
                bool all_above = true;
                for (int trial = 0; trial < 50; ++trial) {
                  int dim = 1 + trial % 3;
                  Vec theta = wt::random_vec(rng, dim);
                  if (theta.norm() < 0.1) theta[0] += 1.0;
                  double rho = 0.1 + 0.3 * (trial % 4);
                  DiscreteMeasure m = wt::random_measure(rng, 1 + trial % 5, dim);
                  StationarityReport rep =
                      fermat_residual(mean_variance_functional(theta, rho, -1), m);
                  double var = variance(m, [&](const Vec& x) { return theta.dot(x); });
                  double expect = theta.norm() * std::sqrt(1.0 + rho * rho * var);
                  worst = std::max(worst, std::abs(rep.residual - expect));
                  all_above = all_above && rep.residual >= theta.norm() - 1e-9;
                }
                std::ostringstream os;
                os << "max |residual - closed form| " << worst;
                d = os.str();
                return worst <= 1e-9 && all_above;
              });

  h.criterion(8, "mean-variance DRO on 10 random centers, certified and cross-checked",
              [](std::string& d) {
                std::mt19937_64 rng(20240008);
                auto t0 = Clock::now();
                double worst_rad = 0.0, worst_res = 0.0, worst_cost = 0.0;
                bool lambda_ok = true;
                int done = 0;
                while (done < 10) {
                  int dim = 1 + done % 2;
                  DiscreteMeasure nu_hat = wt::random_measure(rng, 2 + done % 4, dim);
                  Vec theta = wt::random_vec(rng, dim);
                  if (theta.norm() < 0.2) theta[0] += 1.0;
                  double rho = 0.2 + 0.3 * (done % 4);
                  double eps = 0.1 + 0.04 * done;
                  if (variance(nu_hat, [&](const Vec& x) { return theta.dot(x); }) <= 1e-8)
                    continue;
                  DroSolution sol = solve_meanvar_dro(theta, rho, eps, nu_hat);
                  worst_rad = std::max(worst_rad, std::abs(sol.radius_check - eps));
                  worst_res = std::max(worst_res, sol.report.residual);
                  lambda_ok =
                      lambda_ok && sol.lambda_star >= 0.5 * rho * theta.squaredNorm() - 1e-9;
                  double baseline = wt::meanvar_primal_baseline(theta, rho, eps, nu_hat);
                  worst_cost = std::max(worst_cost, std::abs(sol.cost_direct - baseline) /
                                                        (1.0 + std::abs(sol.cost_direct)));
                  ++done;
                }
                double elapsed = seconds_since(t0);
                std::ostringstream os;
                os << "max |radius - eps| " << worst_rad << ", max residual " << worst_res
                   << ", max rel cost gap vs baseline " << worst_cost << ", " << elapsed << " s";
                d = os.str();
                return worst_rad <= 1e-6 && worst_res <= 1e-6 && lambda_ok &&
                       worst_cost <= 1e-3 && elapsed < 60.0;
              });

  h.criterion(9, "nonlinear DRO duality: linear closed form and quadratic sandwich",
              [](std::string& d) {
                DiscreteMeasure nu_lin =
                    canonicalize(make_measure(1, {v1(0), v1(1)}, {0.5, 0.5}));
                Vec theta = v1(2);
                double eps = 0.1;
                DualSolution lin =
                    solve_nonlinear_dro_dual(linear_potential(theta), 0.0, eps, nu_lin, 6, 3);
                double e_nu =
                    expected_value(nu_lin, [&](const Vec& x) { return theta.dot(x); });
                double lin_err = std::abs(lin.dual_value - (e_nu + eps * theta.norm()));

                DiscreteMeasure nu_quad =
                    canonicalize(make_measure(1, {v1(-1), v1(1)}, {0.5, 0.5}));
                Eigen::MatrixXd A(1, 1);
                A << 2.0;
                DualSolution quad = solve_nonlinear_dro_dual(
                    quadratic_form_potential(A, v1(0), 0.0), 0.5, 0.1, nu_quad, 8, 3);
                std::ostringstream os;
                os << "linear dual error " << lin_err << ", quadratic gap " << quad.gap;
                d = os.str();
                return lin_err <= 1e-6 && quad.gap <= 1e-3;
              });

  h.criterion(10, "proximal operator: half-identity exactness and double-well vs grid oracle",
              [](std::string& d) {
                std::mt19937_64 rng(20240010);
                DiscreteMeasure mu_bar = wt::random_measure(rng, 5, 2);
                ProxSolution quad = prox(sq_norm_half_potential(), mu_bar, 6, 11);
                DiscreteMeasure expected = pushforward(
                    mu_bar, [](const Vec& x) { return Vec(0.5 * x); }, 2);
                bool exact = canonically_equal(quad.mu_star, expected, 1e-12);

                ProxSolution dw = prox(double_well_potential(), dirac(v1(0)), 12, 11);
                auto hfun = [](double z) {
                  double s = z * z - 1;
                  return s * s + 0.5 * z * z;
                };
                double oracle = wt::grid_search_min_1d(hfun, -3.0, 3.0, 1e-4);
                double dw_err = std::abs(dw.mu_star.points[0][0] - oracle);
                std::ostringstream os;
                os << "half-identity exact: " << (exact ? "yes" : "no")
                   << ", double-well |x - oracle| = " << dw_err;
                d = os.str();
                return exact && dw_err <= 1e-4;
              });

  h.criterion(11, "Gaussian mixture fitting: exact mean at m=1, center recovery at m=3",
              [](std::string& d) {
                std::mt19937_64 rng(20240011);
                std::vector<Vec> sample;
                Vec mean = Vec::Zero(2);
                for (int i = 0; i < 80; ++i) {
                  sample.push_back(wt::random_vec(rng, 2, 1.0));
                  mean += sample.back();
                }
                mean /= 80.0;
                GmmFit one = fit_gaussian_mixture(sample, 1, 13);
                double mean_err = (one.mu_star.points[0] - mean).norm();

                std::vector<Vec> centers{v2(-6, 0), v2(6, 0), v2(0, 6)};
                std::vector<Vec> data;
                for (int i = 0; i < 500; ++i)
                  data.push_back(centers[i % 3] + wt::random_vec(rng, 2, 1.0));
                GmmFit three = fit_gaussian_mixture(data, 3, 7);
                double worst_center = 1e300;
                bool three_atoms = three.mu_star.size() == 3;
                double max_dev = 0.0;
                if (three_atoms) {
                  for (const auto& c : centers) {
                    double best = 1e300;
                    for (const auto& p : three.mu_star.points)
                      best = std::min(best, (p - c).norm());
                    max_dev = std::max(max_dev, best);
                  }
                  worst_center = max_dev;
                }
                std::ostringstream os;
                os << "m=1 mean error " << mean_err << ", m=3 max center deviation "
                   << worst_center << ", residual " << three.residual;
                d = os.str();
                return mean_err <= 1e-6 && three_atoms && worst_center <= 0.2 &&
                       std::isfinite(three.residual);
              });

  h.criterion(12, "determinism: byte-identical solver JSON under a fixed seed",
              [](std::string& d) {
                fs::path dir =
                    fs::temp_directory_path() / ("wassercalc_acc_" + std::to_string(::getpid()));
                fs::create_directories(dir);
                auto write = [&](const std::string& name, const std::string& text) {
                  std::ofstream f(dir / name);
                  f << text << "\n";
                };
                write("nuhat.json", R"({"dim":1,"points":[[0],[1]],"weights":[0.5,0.5]})");
                write("pts.json", R"([[0.0],[1.0],[2.5],[-0.5]])");
                write("mv.json", R"({"type":"mean_variance","theta":[1.0],"rho":1.0,"sign":-1})");
                write("ball.json",
                      std::string(R"({"type":"w2ball","ref":")") + (dir / "nuhat.json").string() +
                          R"(","eps":0.5})");
                std::vector<std::vector<std::string>> runs = {
                    {"ot", "--mu", (dir / "nuhat.json").string(), "--nu",
                     (dir / "nuhat.json").string()},
                    {"residual", "--J", (dir / "mv.json").string(), "--C",
                     (dir / "ball.json").string(), "--mu", (dir / "nuhat.json").string()},
                    {"dro-meanvar", "--theta", "1", "--rho", "0.8", "--eps", "0.1", "--nuhat",
                     (dir / "nuhat.json").string()},
                    {"prox", "--V", "catalog:double_well", "--mu", (dir / "nuhat.json").string(),
                     "--seed", "17"},
                    {"gmm-fit", "--data", (dir / "pts.json").string(), "--m", "2", "--seed",
                     "17"},
                    {"dro-nonlinear", "--V", "catalog:sq_norm_half", "--rho", "0.4", "--eps",
                     "0.1", "--nuhat", (dir / "nuhat.json").string(), "--seed", "17"},
                };
                bool ok = true;
                std::string which;
                for (const auto& args : runs) {
                  std::ostringstream o1, e1, o2, e2;
                  int c1 = cli::run(args, o1, e1);
                  int c2 = cli::run(args, o2, e2);
                  if (c1 != c2 || o1.str() != o2.str() || c1 != 0) {
                    ok = false;
                    which = args[0];
                    break;
                  }
                }
                fs::remove_all(dir);
                d = ok ? "all solver reruns byte-identical" : ("mismatch in " + which);
                return ok;
              });

  std::printf("%d of 12 criteria passed\n", 12 - h.failures);
  return h.failures;
}
