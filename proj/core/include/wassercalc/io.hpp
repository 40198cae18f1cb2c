#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "wassercalc/constraints.hpp"
#include "wassercalc/functionals.hpp"
#include "wassercalc/measure.hpp"
#include "wassercalc/optimality.hpp"
#include "wassercalc/potential.hpp"
#include "wassercalc/tangent.hpp"
#include "wassercalc/transport.hpp"

namespace wassercalc {

using Json = nlohmann::json;

// Measure schema: {"dim": d, "points": [[f,...],...], "weights": [f,...]}.
// CSV alternative: one row per atom, last column the weight.
Json measure_to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const Json& j);
DiscreteMeasure load_measure(const std::string& path);

// Raw point clouds (no weight column): CSV rows or a JSON array of arrays.
std::vector<Vec> load_points(const std::string& path);

// Plan schema: {"entries": [[i,j,mass],...], "value": f, "phi": [...], "psi": [...]}.
Json plan_to_json(const TransportPlan& plan);

// Variation schema: {"anchor": <measure or path>, "arrows": [{"k":i,"v":[...],"mass":f},...]}.
Json variation_to_json(const Variation& xi);
Variation variation_from_json(const Json& j, const std::string& base_dir);
Variation load_variation(const std::string& path);

Json coupling_to_json(const GluedCoupling& alpha);

Json potential_to_json(const Potential& p);
Potential potential_from_json(const Json& j);
// "catalog:<name>" or a path to a potential JSON file.
Potential potential_from_arg(const std::string& arg);

// Functional schema with a "type" discriminator; measure- and data-valued
// fields accept inline values or file paths resolved against base_dir.
Functional functional_from_json(const Json& j, const std::string& base_dir);
Functional load_functional(const std::string& path);

// Constraint schema: {"type":"full"|"w2ball"|"moment2"|"sublevel", ...}.
Constraint constraint_from_json(const Json& j, const std::string& base_dir);
Constraint load_constraint(const std::string& path);

Json report_to_json(const StationarityReport& rep);

Json load_json_file(const std::string& path);

}  // namespace wassercalc
