#include "cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "wassercalc/errors.hpp"
#include "wassercalc/io.hpp"
#include "wassercalc/solvers.hpp"

namespace wassercalc::cli {

namespace {

using Json = nlohmann::json;

struct Common {
  double tol = -1.0;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string csv_path;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--tol", common.tol, "override the default tolerance");
  cmd->add_option("--seed", common.seed, "64-bit seed for all stochastic steps");
  cmd->add_option("--out", common.out_path, "write the result JSON to a file instead of stdout");
  cmd->add_option("--csv-out", common.csv_path, "write plot-ready support points as CSV");
}

void emit_json(const Json& j, const Common& common, std::ostream& out) {
  if (common.out_path.empty()) {
    out << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(common.out_path);
  if (!f) throw ValidationError("write_error", "cannot write '" + common.out_path + "'");
  f << j.dump(2) << "\n";
}

void emit_measure_csv(const DiscreteMeasure& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ValidationError("write_error", "cannot write '" + path + "'");
  f.precision(17);
  for (int k = 0; k < m.size(); ++k) {
    for (int c = 0; c < m.dim; ++c) f << m.points[k][c] << ",";
    f << m.weights[k] << "\n";
  }
}

void emit_plan_csv(const TransportPlan& plan, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ValidationError("write_error", "cannot write '" + path + "'");
  f.precision(17);
  for (const auto& e : plan.entries) f << e.i << "," << e.j << "," << e.mass << "\n";
}

int report_exit(const StationarityReport& rep, bool assert_stationary) {
  if (assert_stationary && rep.verdict == Verdict::NotStationary) return 4;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"wassercalc: variational calculus over discrete probability measures"};
  app.require_subcommand(1);

  Common common;
  std::function<int()> action;

  // ot
  {
    auto* cmd = app.add_subcommand("ot", "solve a discrete optimal transport problem");
    auto mu_path = std::make_shared<std::string>();
    auto nu_path = std::make_shared<std::string>();
    auto cost_name = std::make_shared<std::string>("sqeuclidean");
    cmd->add_option("--mu", *mu_path, "source measure (JSON or CSV)")->required();
    cmd->add_option("--nu", *nu_path, "target measure (JSON or CSV)")->required();
    cmd->add_option("--cost", *cost_name, "sqeuclidean | pnorm:<p> | catalog:<name>");
    add_common(cmd, common);
    cmd->callback([&, mu_path, nu_path, cost_name] {
      action = [&, mu_path, nu_path, cost_name] {
        TransportPlan plan =
            solve_ot(load_measure(*mu_path), load_measure(*nu_path), cost_from_name(*cost_name));
        emit_json(plan_to_json(plan), common, out);
        if (!common.csv_path.empty()) emit_plan_csv(plan, common.csv_path);
        return 0;
      };
    });
  }

  // residual / fermat
  {
    auto* cmd = app.add_subcommand("residual", "KKT stationarity residual of a candidate");
    auto j_path = std::make_shared<std::string>();
    auto c_path = std::make_shared<std::string>();
    auto mu_path = std::make_shared<std::string>();
    auto assert_stat = std::make_shared<bool>(false);
    cmd->add_option("--J", *j_path, "functional spec JSON")->required();
    cmd->add_option("--C", *c_path, "constraint spec JSON")->required();
    cmd->add_option("--mu", *mu_path, "candidate measure")->required();
    cmd->add_flag("--assert-stationary", *assert_stat, "exit 4 on a NotStationary verdict");
    add_common(cmd, common);
    cmd->callback([&, j_path, c_path, mu_path, assert_stat] {
      action = [&, j_path, c_path, mu_path, assert_stat] {
        OptimalityOptions opts;
        if (common.tol > 0) opts.stationarity_tol_scale = common.tol;
        StationarityReport rep = kkt_residual(load_functional(*j_path), load_constraint(*c_path),
                                              load_measure(*mu_path), opts);
        emit_json(report_to_json(rep), common, out);
        if (!common.csv_path.empty()) emit_measure_csv(load_measure(*mu_path), common.csv_path);
        return report_exit(rep, *assert_stat);
      };
    });
  }
  {
    auto* cmd = app.add_subcommand("fermat", "unconstrained stationarity residual");
    auto j_path = std::make_shared<std::string>();
    auto mu_path = std::make_shared<std::string>();
    auto assert_stat = std::make_shared<bool>(false);
    cmd->add_option("--J", *j_path, "functional spec JSON")->required();
    cmd->add_option("--mu", *mu_path, "candidate measure")->required();
    cmd->add_flag("--assert-stationary", *assert_stat, "exit 4 on a NotStationary verdict");
    add_common(cmd, common);
    cmd->callback([&, j_path, mu_path, assert_stat] {
      action = [&, j_path, mu_path, assert_stat] {
        OptimalityOptions opts;
        if (common.tol > 0) opts.stationarity_tol_scale = common.tol;
        StationarityReport rep =
            fermat_residual(load_functional(*j_path), load_measure(*mu_path), opts);
        emit_json(report_to_json(rep), common, out);
        return report_exit(rep, *assert_stat);
      };
    });
  }

  // dro-meanvar
  {
    auto* cmd = app.add_subcommand("dro-meanvar", "worst-case mean-variance over a W2 ball");
    auto theta = std::make_shared<std::vector<double>>();
    auto rho = std::make_shared<double>(0.0);
    auto eps = std::make_shared<double>(0.0);
    auto nuhat = std::make_shared<std::string>();
    cmd->add_option("--theta", *theta, "portfolio direction")->required()->expected(-1);
    cmd->add_option("--rho", *rho, "variance weight (>= 0)")->required();
    cmd->add_option("--eps", *eps, "ball radius")->required();
    cmd->add_option("--nuhat", *nuhat, "center measure")->required();
    add_common(cmd, common);
    cmd->callback([&, theta, rho, eps, nuhat] {
      action = [&, theta, rho, eps, nuhat] {
        Vec th(theta->size());
        for (std::size_t i = 0; i < theta->size(); ++i) th[static_cast<int>(i)] = (*theta)[i];
        DroSolution sol = solve_meanvar_dro(th, *rho, *eps, load_measure(*nuhat));
        Json j;
        j["lambda_star"] = sol.lambda_star;
        Json rows = Json::array();
        for (int r = 0; r < sol.map_matrix.rows(); ++r) {
          Json row = Json::array();
          for (int c = 0; c < sol.map_matrix.cols(); ++c) row.push_back(sol.map_matrix(r, c));
          rows.push_back(std::move(row));
        }
        j["map_matrix"] = std::move(rows);
        Json off = Json::array();
        for (int c = 0; c < sol.map_offset.size(); ++c) off.push_back(sol.map_offset[c]);
        j["map_offset"] = std::move(off);
        j["worst_case"] = measure_to_json(sol.worst_case);
        j["cost_direct"] = sol.cost_direct;
        j["cost_formula"] = sol.cost_formula;
        j["formula_mismatch"] = sol.formula_mismatch;
        j["radius_check"] = sol.radius_check;
        j["branch"] = sol.branch;
        j["roots_considered"] = sol.roots_considered;
        j["report"] = report_to_json(sol.report);
        emit_json(j, common, out);
        if (!common.csv_path.empty()) emit_measure_csv(sol.worst_case, common.csv_path);
        return 0;
      };
    });
  }

  // prox
  {
    auto* cmd = app.add_subcommand("prox", "Wasserstein proximal operator of a potential");
    auto v_arg = std::make_shared<std::string>();
    auto mu_path = std::make_shared<std::string>();
    auto multistart = std::make_shared<int>(8);
    cmd->add_option("--V", *v_arg, "catalog:<name> or a potential JSON file")->required();
    cmd->add_option("--mu", *mu_path, "reference measure")->required();
    cmd->add_option("--multistart", *multistart, "number of descent starts per atom");
    add_common(cmd, common);
    cmd->callback([&, v_arg, mu_path, multistart] {
      action = [&, v_arg, mu_path, multistart] {
        ProxSolution sol =
            prox(potential_from_arg(*v_arg), load_measure(*mu_path), *multistart, common.seed);
        Json j;
        j["mu_star"] = measure_to_json(sol.mu_star);
        j["cost"] = sol.cost;
        Json atoms = Json::array();
        for (const auto& a : sol.atoms) {
          Json ja;
          Json z = Json::array();
          for (int c = 0; c < a.minimizer.size(); ++c) z.push_back(a.minimizer[c]);
          ja["minimizer"] = std::move(z);
          ja["value"] = a.value;
          ja["first_order_error"] = a.first_order_error;
          ja["converged"] = a.converged;
          atoms.push_back(std::move(ja));
        }
        j["atoms"] = std::move(atoms);
        j["seed"] = common.seed;
        emit_json(j, common, out);
        if (!common.csv_path.empty()) emit_measure_csv(sol.mu_star, common.csv_path);
        for (const auto& a : sol.atoms)
          if (!a.converged)
            throw SolverError("descent_failure",
                              "an atom's descent did not reach the first-order tolerance");
        return 0;
      };
    });
  }

  // gmm-fit
  {
    auto* cmd = app.add_subcommand("gmm-fit", "fit a unit-variance Gaussian mixture");
    auto data_path = std::make_shared<std::string>();
    auto m = std::make_shared<int>(1);
    cmd->add_option("--data", *data_path, "data points (CSV rows or JSON array)")->required();
    cmd->add_option("--m", *m, "component count")->required();
    add_common(cmd, common);
    cmd->callback([&, data_path, m] {
      action = [&, data_path, m] {
        GmmFit fit = fit_gaussian_mixture(load_points(*data_path), *m, common.seed);
        Json j;
        j["mu_star"] = measure_to_json(fit.mu_star);
        j["nll"] = fit.nll;
        j["residual"] = fit.residual;
        j["nll_trace"] = fit.nll_trace;
        j["residual_trace"] = fit.residual_trace;
        j["seed"] = common.seed;
        emit_json(j, common, out);
        if (!common.csv_path.empty()) emit_measure_csv(fit.mu_star, common.csv_path);
        return 0;
      };
    });
  }

  // dro-nonlinear
  {
    auto* cmd = app.add_subcommand("dro-nonlinear", "dual of nonlinear mean-variance DRO");
    auto v_arg = std::make_shared<std::string>();
    auto rho = std::make_shared<double>(0.0);
    auto eps = std::make_shared<double>(0.0);
    auto nuhat = std::make_shared<std::string>();
    auto multistart = std::make_shared<int>(8);
    cmd->add_option("--V", *v_arg, "catalog:<name> or a potential JSON file")->required();
    cmd->add_option("--rho", *rho, "variance weight (>= 0)")->required();
    cmd->add_option("--eps", *eps, "ball radius")->required();
    cmd->add_option("--nuhat", *nuhat, "center measure")->required();
    cmd->add_option("--multistart", *multistart, "starts for the inner/outer searches");
    add_common(cmd, common);
    cmd->callback([&, v_arg, rho, eps, nuhat, multistart] {
      action = [&, v_arg, rho, eps, nuhat, multistart] {
        DualSolution sol = solve_nonlinear_dro_dual(potential_from_arg(*v_arg), *rho, *eps,
                                                    load_measure(*nuhat), *multistart, common.seed);
        Json j;
        j["lambda_star"] = sol.lambda_star;
        j["beta_star"] = sol.beta_star;
        j["dual_value"] = sol.dual_value;
        j["lambda_min"] = sol.lambda_min;
        Json maxers = Json::array();
        for (const auto& y : sol.per_atom_maximizers) {
          Json row = Json::array();
          for (int c = 0; c < y.size(); ++c) row.push_back(y[c]);
          maxers.push_back(std::move(row));
        }
        j["per_atom_maximizers"] = std::move(maxers);
        j["reconstructed_primal"] = measure_to_json(sol.reconstructed_primal);
        j["gap"] = sol.gap;
        j["seed"] = common.seed;
        emit_json(j, common, out);
        if (!common.csv_path.empty()) emit_measure_csv(sol.reconstructed_primal, common.csv_path);
        return 0;
      };
    });
  }

  // tangent-check
  {
    auto* cmd = app.add_subcommand("tangent-check", "grid-verify tangent-space membership");
    auto xi_path = std::make_shared<std::string>();
    auto grid = std::make_shared<std::vector<double>>();
    cmd->add_option("--xi", *xi_path, "variation JSON")->required();
    cmd->add_option("--eps-grid", *grid, "eps values to test")->expected(-1);
    add_common(cmd, common);
    cmd->callback([&, xi_path, grid] {
      action = [&, xi_path, grid] {
        TangentCheck check = is_tangent(load_variation(*xi_path), *grid);
        Json j;
        j["grid_verified"] = check.grid_verified;
        j["grid"] = check.grid;
        j["plan_costs"] = check.plan_costs;
        j["w2_squared"] = check.w2_squared;
        Json flags = Json::array();
        for (bool b : check.optimal) flags.push_back(b);
        j["optimal"] = std::move(flags);
        j["note"] = check.note;
        emit_json(j, common, out);
        return 0;
      };
    });
  }

  try {
    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    app.name("wassercalc");
    app.parse(std::move(argv_rev));
  } catch (const CLI::CallForHelp& e) {
    out << app.help() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    Json j;
    j["code"] = "usage";
    j["message"] = e.what();
    err << j.dump() << "\n";
    return 2;
  }

  try {
    return action ? action() : 2;
  } catch (const ValidationError& e) {
    Json j;
    j["code"] = e.code();
    j["message"] = e.what();
    err << j.dump() << "\n";
    return 2;
  } catch (const SolverError& e) {
    Json j;
    j["code"] = e.code();
    j["message"] = e.what();
    err << j.dump() << "\n";
    return 3;
  } catch (const std::exception& e) {
    // malformed input of any other kind (e.g. JSON type errors)
    Json j;
    j["code"] = "parse_error";
    j["message"] = e.what();
    err << j.dump() << "\n";
    return 2;
  }
}

}  // namespace wassercalc::cli
