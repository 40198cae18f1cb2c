#include "wassercalc/functionals.hpp"

#include <cmath>
#include <variant>

#include "wassercalc/errors.hpp"

namespace wassercalc {

namespace {

struct ExpectedValueSpec {
  Potential V;
};
struct VarianceSpec {
  Potential V;
};
struct MeanVarianceSpec {
  Vec theta;
  double rho;
  int sign;
};
struct W2SquaredSpec {
  DiscreteMeasure ref;
  double scale;
};
struct OTDiscrepancySpec {
  DiscreteMeasure ref;
  CostFunction cost;
};
struct InteractionSpec {
  Potential W;
  double scale;
};
struct GmmNllSpec {
  std::vector<Vec> data;
};
struct LinearCombinationSpec {
  std::vector<std::pair<double, Functional>> terms;
};
struct CompositionSpec {
  SmoothMap g;
  std::vector<Functional> inner;
};

using SpecVariant =
    std::variant<ExpectedValueSpec, VarianceSpec, MeanVarianceSpec, W2SquaredSpec,
                 OTDiscrepancySpec, InteractionSpec, GmmNllSpec, LinearCombinationSpec,
                 CompositionSpec>;

constexpr double kTwoPi = 6.283185307179586476925286766559;



}  // namespace

double unit_gaussian_kernel(const Vec& z) {
  const double d = static_cast<double>(z.size());
  return std::pow(kTwoPi, -0.5 * d) * std::exp(-0.5 * z.squaredNorm());
}

struct Functional::Impl {
  SpecVariant spec;
};

namespace {

Functional wrap(SpecVariant spec) {
  auto impl = std::make_shared<Functional::Impl>();
  impl->spec = std::move(spec);
  return Functional(std::move(impl));
}

bool is_map_induced(const Variation& xi) {
  for (const auto& g : arrows_by_atom(xi))
    if (g.size() != 1) return false;
  return true;
}

Variation map_variation(const DiscreteMeasure& mu, const std::function<Vec(int)>& arrow_at) {
  std::vector<Arrow> arrows;
  arrows.reserve(mu.size());
  for (int k = 0; k < mu.size(); ++k) arrows.push_back(Arrow{k, arrow_at(k), mu.weights[k]});
  return make_variation(mu, std::move(arrows));
}

// Plan-carried variation with arrows scale*(x_i - y_j).
Variation displacement_variation(const DiscreteMeasure& mu, const TransportPlan& plan,
                                 double scale_xy) {
  std::vector<Arrow> arrows;
  arrows.reserve(plan.entries.size());
  for (const auto& e : plan.entries)
    arrows.push_back(
        Arrow{e.i, Vec(scale_xy * (mu.points[e.i] - plan.target.points[e.j])), e.mass});
  return make_variation(mu, std::move(arrows));
}

std::vector<double> inner_values(const CompositionSpec& s, const DiscreteMeasure& mu) {
  std::vector<double> vals;
  vals.reserve(s.inner.size());
  for (const auto& j : s.inner) vals.push_back(evaluate(j, mu));
  return vals;
}

// Fold of coefficient-scaled subgradients through maximally aligned gluings.
SubgradientElement combine_scaled(const DiscreteMeasure& mu,
                                  const std::vector<std::pair<double, SubgradientElement>>& parts,
                                  const std::string& provenance) {
  SubgradientElement out;
  out.provenance = provenance;
  bool first = true;
  Variation acc = local_zero(mu);
  for (const auto& [coef, part] : parts) {
    Variation scaled = scale(coef, part.xi);
    if (first) {
      acc = std::move(scaled);
      first = false;
    } else {
      acc = coupled_sum_maximal(acc, scaled);
    }
  }
  out.xi = std::move(acc);
  out.map_induced = is_map_induced(out.xi);
  return out;
}

}  // namespace

SmoothMap sum_map(int arity) {
  SmoothMap g;
  g.tag = "sum";
  g.arity = arity;
  g.eval = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  };
  g.grad = [arity](const std::vector<double>&) { return std::vector<double>(arity, 1.0); };
  return g;
}

SmoothMap product_map(int arity) {
  SmoothMap g;
  g.tag = "product";
  g.arity = arity;
  g.eval = [](const std::vector<double>& v) {
    double p = 1.0;
    for (double x : v) p *= x;
    return p;
  };
  g.grad = [](const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double p = 1.0;
      for (std::size_t j = 0; j < v.size(); ++j)
        if (j != i) p *= v[j];
      out[i] = p;
    }
    return out;
  };
  return g;
}

Functional expected_value_functional(Potential V) { return wrap(ExpectedValueSpec{std::move(V)}); }
Functional variance_functional(Potential V) { return wrap(VarianceSpec{std::move(V)}); }

Functional mean_variance_functional(Vec theta, double rho, int sign) {
  if (rho < 0) throw ValidationError("invalid_functional", "rho must be nonnegative");
  if (sign != 1 && sign != -1)
    throw ValidationError("invalid_functional", "sign must be +1 or -1");
  return wrap(MeanVarianceSpec{std::move(theta), rho, sign});
}

Functional w2sq_functional(DiscreteMeasure ref, double scale) {
  return wrap(W2SquaredSpec{canonicalize(ref), scale});
}

Functional ot_discrepancy_functional(DiscreteMeasure ref, CostFunction cost) {
  if (!cost.has_grad())
    throw ValidationError("invalid_functional", "OT discrepancy needs a cost with grad_x");
  return wrap(OTDiscrepancySpec{canonicalize(ref), std::move(cost)});
}

Functional interaction_functional(Potential W, double scale) {
  return wrap(InteractionSpec{std::move(W), scale});
}

Functional gmm_nll_functional(std::vector<Vec> data) {
  if (data.empty()) throw ValidationError("invalid_functional", "gmm_nll needs data");
  return wrap(GmmNllSpec{std::move(data)});
}

Functional linear_combination(std::vector<std::pair<double, Functional>> terms) {
  for (const auto& [coef, term] : terms) {
    (void)term;
    if (coef < 0)
      throw ValidationError("invalid_functional", "linear combination needs coefficients >= 0");
  }
  return wrap(LinearCombinationSpec{std::move(terms)});
}

Functional composition_functional(SmoothMap g, std::vector<Functional> inner) {
  if (g.arity != static_cast<int>(inner.size()))
    throw ValidationError("invalid_functional", "composition arity mismatch");
  return wrap(CompositionSpec{std::move(g), std::move(inner)});
}

double evaluate(const Functional& J, const DiscreteMeasure& mu) {
  const auto& spec = J.impl().spec;
  if (const auto* s = std::get_if<ExpectedValueSpec>(&spec)) return expected_value(mu, s->V.eval);
  if (const auto* s = std::get_if<VarianceSpec>(&spec)) return variance(mu, s->V.eval);
  if (const auto* s = std::get_if<MeanVarianceSpec>(&spec)) {
    const Vec& th = s->theta;
    auto lin = [&th](const Vec& x) { return th.dot(x); };
    return s->sign * (expected_value(mu, lin) + 0.5 * s->rho * variance(mu, lin));
  }
  if (const auto* s = std::get_if<W2SquaredSpec>(&spec)) {
    double d = w2(mu, s->ref).first;
    return s->scale * d * d;
  }
  if (const auto* s = std::get_if<OTDiscrepancySpec>(&spec))
    return solve_ot(mu, s->ref, s->cost).value;
  if (const auto* s = std::get_if<InteractionSpec>(&spec)) {
    double acc = 0.0;
    for (int k = 0; k < mu.size(); ++k)
      for (int l = 0; l < mu.size(); ++l)
        acc += mu.weights[k] * mu.weights[l] * s->W.eval(mu.points[k] - mu.points[l]);
    return s->scale * acc;
  }
  if (const auto* s = std::get_if<GmmNllSpec>(&spec)) {
    double nll = 0.0;
    for (std::size_t i = 0; i < s->data.size(); ++i) {
      double mix = 0.0;
      for (int k = 0; k < mu.size(); ++k)
        mix += mu.weights[k] * unit_gaussian_kernel(mu.points[k] - s->data[i]);
      if (!(mix > 0.0))
        throw SolverError("log_of_zero",
                          "gmm mixture density underflows at data index " + std::to_string(i));
      nll -= std::log(mix);
    }
    return nll;
  }
  if (const auto* s = std::get_if<LinearCombinationSpec>(&spec)) {
    double acc = 0.0;
    for (const auto& [coef, term] : s->terms) acc += coef * evaluate(term, mu);
    return acc;
  }
  const auto& s = std::get<CompositionSpec>(spec);
  return s.g.eval(inner_values(s, mu));
}

SubgradientElement subgradient_element(const Functional& J, const DiscreteMeasure& mu) {
  const auto& spec = J.impl().spec;
  SubgradientElement out;
  if (const auto* s = std::get_if<ExpectedValueSpec>(&spec)) {
    out.xi = map_variation(mu, [&](int k) { return s->V.grad(mu.points[k]); });
    out.provenance = "map-induced gradient of an expected value";
    out.map_induced = true;
    return out;
  }
  if (const auto* s = std::get_if<VarianceSpec>(&spec)) {
    double ev = expected_value(mu, s->V.eval);
    out.xi = map_variation(mu, [&](int k) {
      return Vec(2.0 * (s->V.eval(mu.points[k]) - ev) * s->V.grad(mu.points[k]));
    });
    out.provenance = "map-induced gradient of a variance";
    out.map_induced = true;
    return out;
  }
  if (const auto* s = std::get_if<MeanVarianceSpec>(&spec)) {
    const Vec& th = s->theta;
    double ev = expected_value(mu, [&th](const Vec& x) { return th.dot(x); });
    double sg = s->sign, rho = s->rho;
    out.xi = map_variation(mu, [&](int k) {
      return Vec(sg * (1.0 + rho * (th.dot(mu.points[k]) - ev)) * th);
    });
    out.provenance = "map-induced gradient of the mean-variance functional";
    out.map_induced = true;
    return out;
  }
  if (const auto* s = std::get_if<W2SquaredSpec>(&spec)) {
    TransportPlan plan = solve_ot(mu, s->ref, sqeuclidean_cost());
    out.xi = displacement_variation(mu, plan, 2.0 * s->scale);
    out.provenance = "optimal-plan vertex 0";
    out.map_induced = is_map_induced(out.xi);
    return out;
  }
  if (const auto* s = std::get_if<OTDiscrepancySpec>(&spec)) {
    TransportPlan plan;
    try {
      plan = solve_ot(mu, s->ref, s->cost);
    } catch (const SolverError& e) {
      throw SolverError("plan_required", std::string("transport solve failed: ") + e.what());
    }
    std::vector<Arrow> arrows;
    for (const auto& e : plan.entries)
      arrows.push_back(Arrow{e.i, s->cost.grad_x(mu.points[e.i], s->ref.points[e.j]), e.mass});
    out.xi = make_variation(mu, std::move(arrows));
    out.provenance = "cost gradient over plan vertex 0";
    out.map_induced = is_map_induced(out.xi);
    return out;
  }
  if (const auto* s = std::get_if<InteractionSpec>(&spec)) {
    out.xi = map_variation(mu, [&](int k) {
      Vec g = Vec::Zero(mu.dim);
      for (int l = 0; l < mu.size(); ++l)
        g += mu.weights[l] * s->W.grad(mu.points[k] - mu.points[l]);
      return Vec(2.0 * s->scale * g);
    });
    out.provenance = "map-induced gradient of the interaction energy";
    out.map_induced = true;
    return out;
  }
  if (const auto* s = std::get_if<GmmNllSpec>(&spec)) {
    std::vector<double> denom(s->data.size(), 0.0);
    for (std::size_t i = 0; i < s->data.size(); ++i) {
      for (int k = 0; k < mu.size(); ++k)
        denom[i] += mu.weights[k] * unit_gaussian_kernel(mu.points[k] - s->data[i]);
      if (!(denom[i] > 0.0))
        throw SolverError("log_of_zero",
                          "gmm mixture density underflows at data index " + std::to_string(i));
    }
    out.xi = map_variation(mu, [&](int k) {
      Vec g = Vec::Zero(mu.dim);
      for (std::size_t i = 0; i < s->data.size(); ++i) {
        Vec z = mu.points[k] - s->data[i];
        g += z * (unit_gaussian_kernel(z) / denom[i]);
      }
      return g;
    });
    out.provenance = "map-induced gradient of the mixture negative log-likelihood";
    out.map_induced = true;
    return out;
  }
  if (const auto* s = std::get_if<LinearCombinationSpec>(&spec)) {
    std::vector<std::pair<double, SubgradientElement>> parts;
    for (const auto& [coef, term] : s->terms)
      parts.emplace_back(coef, subgradient_element(term, mu));
    return combine_scaled(mu, parts, "coefficient-weighted coupled sum, maximal gluing");
  }
  const auto& s = std::get<CompositionSpec>(spec);
  std::vector<double> partials = s.g.grad(inner_values(s, mu));
  std::vector<std::pair<double, SubgradientElement>> parts;
  bool all_map = true;
  for (std::size_t i = 0; i < s.inner.size(); ++i) {
    parts.emplace_back(partials[i], subgradient_element(s.inner[i], mu));
    all_map = all_map && parts.back().second.map_induced;
  }
  if (!all_map) {
    for (double p : partials)
      if (p < 0)
        throw ValidationError(
            "composition_requires_map_induced",
            "composition with plan-valued inner subgradients needs nonnegative partials");
  }
  return combine_scaled(mu, parts, "chain rule through dg, maximal gluing");
}

std::vector<SubgradientElement> subgradient_candidates(const Functional& J,
                                                       const DiscreteMeasure& mu,
                                                       std::size_t max_candidates) {
  const auto& spec = J.impl().spec;
  if (const auto* s = std::get_if<W2SquaredSpec>(&spec)) {
    std::vector<TransportPlan> plans =
        optimal_plan_vertices(mu, s->ref, sqeuclidean_cost(), max_candidates);
    std::vector<SubgradientElement> out;
    for (std::size_t p = 0; p < plans.size(); ++p) {
      SubgradientElement el;
      el.xi = displacement_variation(mu, plans[p], 2.0 * s->scale);
      el.provenance = "optimal-plan vertex " + std::to_string(p);
      el.map_induced = is_map_induced(el.xi);
      out.push_back(std::move(el));
    }
    return out;
  }
  if (const auto* s = std::get_if<OTDiscrepancySpec>(&spec)) {
    std::vector<TransportPlan> plans = optimal_plan_vertices(mu, s->ref, s->cost, max_candidates);
    std::vector<SubgradientElement> out;
    for (std::size_t p = 0; p < plans.size(); ++p) {
      std::vector<Arrow> arrows;
      for (const auto& e : plans[p].entries)
        arrows.push_back(Arrow{e.i, s->cost.grad_x(mu.points[e.i], s->ref.points[e.j]), e.mass});
      SubgradientElement el;
      el.xi = make_variation(mu, std::move(arrows));
      el.provenance = "cost gradient over plan vertex " + std::to_string(p);
      el.map_induced = is_map_induced(el.xi);
      out.push_back(std::move(el));
    }
    return out;
  }
  if (const auto* s = std::get_if<LinearCombinationSpec>(&spec)) {
    std::vector<std::vector<SubgradientElement>> per_term;
    for (const auto& [coef, term] : s->terms) {
      (void)coef;
      per_term.push_back(subgradient_candidates(term, mu, max_candidates));
    }
    std::vector<SubgradientElement> out;
    std::vector<std::size_t> pick(per_term.size(), 0);
    while (out.size() < max_candidates) {
      std::vector<std::pair<double, SubgradientElement>> parts;
      std::string prov = "combo";
      for (std::size_t t = 0; t < per_term.size(); ++t) {
        parts.emplace_back(s->terms[t].first, per_term[t][pick[t]]);
        prov += " " + std::to_string(pick[t]);
      }
      out.push_back(combine_scaled(mu, parts, prov));
      std::size_t t = 0;
      for (; t < pick.size(); ++t) {
        if (++pick[t] < per_term[t].size()) break;
        pick[t] = 0;
      }
      if (t == pick.size()) break;
    }
    return out;
  }
  if (const auto* s = std::get_if<CompositionSpec>(&spec)) {
    std::vector<double> partials = s->g.grad(inner_values(*s, mu));
    std::vector<std::vector<SubgradientElement>> per_term;
    bool all_map = true;
    for (const auto& inner : s->inner) {
      per_term.push_back(subgradient_candidates(inner, mu, max_candidates));
      for (const auto& el : per_term.back()) all_map = all_map && el.map_induced;
    }
    if (!all_map) {
      for (double p : partials)
        if (p < 0)
          throw ValidationError(
              "composition_requires_map_induced",
              "composition with plan-valued inner subgradients needs nonnegative partials");
    }
    std::vector<SubgradientElement> out;
    std::vector<std::size_t> pick(per_term.size(), 0);
    while (out.size() < max_candidates) {
      std::vector<std::pair<double, SubgradientElement>> parts;
      std::string prov = "chain-rule combo";
      for (std::size_t t = 0; t < per_term.size(); ++t) {
        parts.emplace_back(partials[t], per_term[t][pick[t]]);
        prov += " " + std::to_string(pick[t]);
      }
      out.push_back(combine_scaled(mu, parts, prov));
      std::size_t t = 0;
      for (; t < pick.size(); ++t) {
        if (++pick[t] < per_term[t].size()) break;
        pick[t] = 0;
      }
      if (t == pick.size()) break;
    }
    return out;
  }
  return {subgradient_element(J, mu)};
}

double fd_directional(const Functional& J, const DiscreteMeasure& mu, const Variation& xi,
                      double eps) {
  if (!(eps > 0)) throw ValidationError("invalid_argument", "fd_directional needs eps > 0");
  if (!canonically_equal(xi.anchor, mu))
    throw ValidationError("anchor_mismatch", "variation is not anchored at mu");
  return (evaluate(J, apply(xi, eps)) - evaluate(J, mu)) / eps;
}

}  // namespace wassercalc
