#include "wassercalc/io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wassercalc/errors.hpp"

namespace wassercalc {

namespace {

namespace fs = std::filesystem;

std::string dir_of(const std::string& path) {
  fs::path p(path);
  return p.has_parent_path() ? p.parent_path().string() : std::string(".");
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / p).string();
}

Vec vec_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("parse_error", "expected a numeric array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

Json vec_to_json(const Vec& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing_file", "cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric && rows.empty()) continue;  // tolerate a header line
    if (!numeric)
      throw ValidationError("parse_error", "non-numeric cell in '" + path + "'");
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("parse_error", "no data rows in '" + path + "'");
  return rows;
}

}  // namespace

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing_file", "cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError("parse_error", "invalid JSON in '" + path + "': " + e.what());
  }
  return j;
}

Json measure_to_json(const DiscreteMeasure& m) {
  Json j;
  j["dim"] = m.dim;
  Json pts = Json::array();
  for (const auto& p : m.points) pts.push_back(vec_to_json(p));
  j["points"] = std::move(pts);
  j["weights"] = m.weights;
  return j;
}

DiscreteMeasure measure_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("points") || !j.contains("weights"))
    throw ValidationError("parse_error", "measure needs fields dim, points, weights");
  int dim = j.at("dim").get<int>();
  std::vector<Vec> points;
  for (const auto& p : j.at("points")) points.push_back(vec_from_json(p));
  std::vector<double> weights = j.at("weights").get<std::vector<double>>();
  return canonicalize(make_measure(dim, std::move(points), std::move(weights)));
}

DiscreteMeasure load_measure(const std::string& path) {
  if (fs::path(path).extension() == ".csv") {
    auto rows = read_csv_rows(path);
    std::size_t cols = rows[0].size();
    if (cols < 2)
      throw ValidationError("parse_error", "measure CSV needs coordinates plus a weight column");
    std::vector<Vec> points;
    std::vector<double> weights;
    for (const auto& row : rows) {
      if (row.size() != cols)
        throw ValidationError("parse_error", "ragged CSV row in '" + path + "'");
      Vec p(static_cast<int>(cols - 1));
      for (std::size_t c = 0; c + 1 < cols; ++c) p[static_cast<int>(c)] = row[c];
      points.push_back(std::move(p));
      weights.push_back(row.back());
    }
    return canonicalize(make_measure(static_cast<int>(cols - 1), std::move(points), std::move(weights)));
  }
  return measure_from_json(load_json_file(path));
}

std::vector<Vec> load_points(const std::string& path) {
  std::vector<Vec> out;
  if (fs::path(path).extension() == ".csv") {
    for (const auto& row : read_csv_rows(path)) {
      Vec p(static_cast<int>(row.size()));
      for (std::size_t c = 0; c < row.size(); ++c) p[static_cast<int>(c)] = row[c];
      out.push_back(std::move(p));
    }
    return out;
  }
  Json j = load_json_file(path);
  for (const auto& p : j) out.push_back(vec_from_json(p));
  return out;
}

Json plan_to_json(const TransportPlan& plan) {
  Json j;
  Json entries = Json::array();
  for (const auto& e : plan.entries) entries.push_back(Json::array({e.i, e.j, e.mass}));
  j["entries"] = std::move(entries);
  j["value"] = plan.value;
  j["phi"] = plan.phi;
  j["psi"] = plan.psi;
  return j;
}

Json variation_to_json(const Variation& xi) {
  Json j;
  j["anchor"] = measure_to_json(xi.anchor);
  Json arrows = Json::array();
  for (const auto& a : xi.arrows) {
    Json ja;
    ja["k"] = a.k;
    ja["v"] = vec_to_json(a.v);
    ja["mass"] = a.mass;
    arrows.push_back(std::move(ja));
  }
  j["arrows"] = std::move(arrows);
  return j;
}

Variation variation_from_json(const Json& j, const std::string& base_dir) {
  if (!j.contains("anchor") || !j.contains("arrows"))
    throw ValidationError("parse_error", "variation needs fields anchor, arrows");
  DiscreteMeasure anchor = j.at("anchor").is_string()
                               ? load_measure(resolve(base_dir, j.at("anchor").get<std::string>()))
                               : measure_from_json(j.at("anchor"));
  std::vector<Arrow> arrows;
  for (const auto& ja : j.at("arrows")) {
    Arrow a;
    a.k = ja.at("k").get<int>();
    a.v = vec_from_json(ja.at("v"));
    a.mass = ja.at("mass").get<double>();
    arrows.push_back(std::move(a));
  }
  return make_variation(std::move(anchor), std::move(arrows));
}

Variation load_variation(const std::string& path) {
  return variation_from_json(load_json_file(path), dir_of(path));
}

Json coupling_to_json(const GluedCoupling& alpha) {
  Json entries = Json::array();
  for (const auto& e : alpha.entries) entries.push_back(Json::array({e.k, e.a, e.b, e.mass}));
  Json j;
  j["entries"] = std::move(entries);
  return j;
}

Json potential_to_json(const Potential& p) {
  Json j;
  j["type"] = p.tag;
  if (p.tag == "quadratic_form") {
    Json rows = Json::array();
    for (int r = 0; r < p.A.rows(); ++r) {
      Json row = Json::array();
      for (int c = 0; c < p.A.cols(); ++c) row.push_back(p.A(r, c));
      rows.push_back(std::move(row));
    }
    j["A"] = std::move(rows);
    j["b"] = vec_to_json(p.b);
    j["c"] = p.c;
  } else if (p.tag == "linear") {
    j["a"] = vec_to_json(p.b);
  } else if (p.tag == "polynomial_1d") {
    j["coeffs"] = p.coeffs;
  } else if (p.tag == "custom") {
    throw ValidationError("parse_error", "custom potentials are not serializable");
  }
  return j;
}

Potential potential_from_json(const Json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "quadratic_form") {
    const Json& rows = j.at("A");
    int n = static_cast<int>(rows.size());
    Eigen::MatrixXd A(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) A(r, c) = rows[r][c].get<double>();
    return quadratic_form_potential(A, vec_from_json(j.at("b")),
                                    j.value("c", 0.0));
  }
  if (type == "linear") return linear_potential(vec_from_json(j.at("a")));
  if (type == "polynomial_1d")
    return polynomial_1d_potential(j.at("coeffs").get<std::vector<double>>());
  return potential_from_name(type);
}

Potential potential_from_arg(const std::string& arg) {
  if (arg.rfind("catalog:", 0) == 0) return potential_from_name(arg.substr(8));
  return potential_from_json(load_json_file(arg));
}

Functional functional_from_json(const Json& j, const std::string& base_dir) {
  std::string type = j.at("type").get<std::string>();
  auto measure_field = [&](const char* key) {
    const Json& f = j.at(key);
    return f.is_string() ? load_measure(resolve(base_dir, f.get<std::string>()))
                         : measure_from_json(f);
  };
  if (type == "expected_value") return expected_value_functional(potential_from_json(j.at("V")));
  if (type == "variance") return variance_functional(potential_from_json(j.at("V")));
  if (type == "mean_variance")
    return mean_variance_functional(vec_from_json(j.at("theta")), j.at("rho").get<double>(),
                                    j.value("sign", -1));
  if (type == "w2sq") return w2sq_functional(measure_field("ref"), j.value("scale", 0.5));
  if (type == "ot")
    return ot_discrepancy_functional(measure_field("ref"),
                                     cost_from_name(j.value("cost", std::string("sqeuclidean"))));
  if (type == "interaction")
    return interaction_functional(potential_from_json(j.at("W")), j.value("scale", 0.5));
  if (type == "gmm_nll") {
    const Json& f = j.at("data");
    std::vector<Vec> data;
    if (f.is_string()) {
      data = load_points(resolve(base_dir, f.get<std::string>()));
    } else {
      for (const auto& p : f) data.push_back(vec_from_json(p));
    }
    return gmm_nll_functional(std::move(data));
  }
  if (type == "linear_combination") {
    std::vector<std::pair<double, Functional>> terms;
    for (const auto& t : j.at("terms"))
      terms.emplace_back(t.at(0).get<double>(), functional_from_json(t.at(1), base_dir));
    return linear_combination(std::move(terms));
  }
  throw ValidationError("parse_error", "unknown functional type '" + type + "'");
}

Functional load_functional(const std::string& path) {
  return functional_from_json(load_json_file(path), dir_of(path));
}

Constraint constraint_from_json(const Json& j, const std::string& base_dir) {
  std::string type = j.at("type").get<std::string>();
  if (type == "full") return full_space_constraint();
  if (type == "w2ball") {
    const Json& f = j.at("ref");
    DiscreteMeasure ref = f.is_string() ? load_measure(resolve(base_dir, f.get<std::string>()))
                                        : measure_from_json(f);
    return wasserstein_ball_constraint(std::move(ref), j.at("eps").get<double>());
  }
  if (type == "moment2") return second_moment_ball_constraint(j.at("eps").get<double>());
  if (type == "sublevel")
    return sublevel_constraint(functional_from_json(j.at("J"), base_dir), j.at("c").get<double>());
  throw ValidationError("parse_error", "unknown constraint type '" + type + "'");
}

Constraint load_constraint(const std::string& path) {
  return constraint_from_json(load_json_file(path), dir_of(path));
}

Json report_to_json(const StationarityReport& rep) {
  Json j;
  j["residual"] = rep.residual;
  j["lambda"] = rep.lambda;
  switch (rep.activity.activity) {
    case Activity::Interior: j["activity"] = "interior"; break;
    case Activity::Boundary: j["activity"] = "boundary"; break;
    case Activity::Infeasible: j["activity"] = "infeasible"; break;
  }
  j["slack"] = std::isfinite(rep.activity.slack) ? Json(rep.activity.slack) : Json("inf");
  j["plan_id"] = rep.plan_id;
  j["normal_id"] = rep.normal_id;
  j["coupling"] = coupling_to_json(rep.coupling);
  j["verdict"] = rep.verdict == Verdict::StationaryWithin ? "stationary_within" : "not_stationary";
  j["tolerance"] = rep.tolerance;
  j["candidates_searched"] = rep.candidates_searched;
  j["note"] = rep.note;
  return j;
}

}  // namespace wassercalc
