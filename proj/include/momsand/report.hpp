#pragma once

#include <cmath>
#include <string>
#include <variant>

#include <json.hpp>

#include "momsand/assumptions.hpp"
#include "momsand/constants.hpp"
#include "momsand/montecarlo.hpp"
#include "momsand/perpetuity.hpp"
#include "momsand/riesz.hpp"

namespace momsand {

using json = nlohmann::ordered_json;

/// Nonfinite numbers become null.
inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json to_json(const MomentEstimate& m) {
  return {{"q", num(m.q)}, {"value", num(m.value)}, {"abs_error", num(m.abs_error)},
          {"method", std::string(to_string(m.method))}};
}

inline json to_json(const Expectation& e) {
  return {{"value", num(e.value)}, {"abs_error", num(e.abs_error)}, {"method", std::string(to_string(e.method))}};
}

inline json to_json(const SmallPCertificate& c) {
  return {{"regime", "SmallP"},
          {"p", num(c.p)},
          {"lambda", num(c.lambda)},
          {"delta", num(c.delta)},
          {"A", num(c.a_param)},
          {"lambda_exact", num(c.lambda_exact)},
          {"delta_exact", num(c.delta_exact)},
          {"moment_p", num(c.moment_p)},
          {"moment_half", num(c.moment_half)},
          {"window", num(c.window)},
          {"margins", {{"lambda_slack", num(c.margins.lambda_slack)}, {"delta_slack", num(c.margins.delta_slack)}}}};
}

inline json num_array(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(num(x));
  return a;
}

inline json to_json(const LargePCertificate& c) {
  return {{"regime", "LargeP"},
          {"p", num(c.p)},
          {"mu", num(c.mu)},
          {"A", num(c.a_param)},
          {"q", num(c.q)},
          {"lambda", num(c.lambda)},
          {"lambda_chain", num_array(c.lambda_chain)},
          {"mu_exact", num(c.mu_exact)},
          {"lambda_exact", num(c.lambda_exact)},
          {"chain_exact", num_array(c.chain_exact)},
          {"moment_p", num(c.moment_p)},
          {"mean_abs", num(c.mean_abs)},
          {"mean_abs_dev", num(c.mean_abs_dev)},
          {"tail", num(c.tail)},
          {"margins",
           {{"mu_slack", num(c.margins.mu_slack)},
            {"tail_slack", num(c.margins.tail_slack)},
            {"lambda_slack", num(c.margins.lambda_slack)},
            {"chain_slack", num_array(c.margins.chain_slack)}}}};
}

inline json to_json(const TraceEntry& t) {
  json inputs = json::object();
  for (const auto& [k, v] : t.inputs) inputs[k] = num(v);
  json j = {{"formula", t.formula}, {"inputs", inputs}, {"value", num(t.value)}};
  if (!t.note.empty()) j["note"] = t.note;
  return j;
}

inline json to_json(const ConstantBundle& b) {
  json trace = json::array();
  for (const auto& t : b.trace) trace.push_back(to_json(t));
  json j = {{"p", num(b.p)},
            {"regime", std::string(to_string(b.regime))},
            {"lower_c", num(b.lower_c)},
            {"log_lower_c", num(b.log_lower_c)},
            {"lower_c_underflow", b.lower_c_underflow},
            {"upper_C", num(b.upper_C)},
            {"recursive_C", num(b.recursive_C)},
            {"product_C", num(b.product_C)},
            {"k", b.k},
            {"eps0", num(b.eps0)},
            {"eps1", num(b.eps1)},
            {"A", num(b.a_param)}};
  if (b.regime == Regime::LargeP) {
    j["q"] = num(b.q);
    j["C0"] = num(b.c0);
    j["log_C0"] = num(b.log_c0);
  }
  j["trace"] = trace;
  return j;
}

inline json to_json(const Certification& c) {
  return {{"normalized_dist", to_string(c.normalized)},
          {"scale", num(c.scale)},
          {"certificate", std::visit([](const auto& cert) { return to_json(cert); }, c.certificate)},
          {"bundle", to_json(c.bundle)}};
}

inline json to_json(const EstimateWithCI& e) {
  return {{"mean", num(e.mean)}, {"std_error", num(e.std_error)}, {"replications", e.replications},
          {"seed", e.seed}, {"exact", e.exact}};
}

inline json to_json(const CoefficientSet& c) {
  return {{"dim", c.dim}, {"norm", std::string(to_string(c.norm))}, {"vectors", c.vectors}};
}

/// The bundle is reported once by the caller, so it is left out here.
inline json to_json(const SandwichReport& r) {
  return {{"lhs", to_json(r.lhs)},       {"rhs_sum", num(r.rhs_sum)},
          {"lower", num(r.lower)},       {"upper", num(r.upper)},
          {"ratio", num(r.ratio)},       {"verdict", std::string(to_string(r.verdict))}};
}

inline json to_json(const KhintchineReport& r) {
  return {{"n", r.n},
          {"p", num(r.p)},
          {"estimate", to_json(r.estimate)},
          {"exact", r.exact ? num(*r.exact) : json(nullptr)},
          {"rhs_sum", num(r.rhs_sum)},
          {"ratio", num(r.ratio)}};
}

inline json to_json(const TailCheck& t) {
  return {{"t", num(t.t)}, {"probability", num(t.probability)}, {"bound", num(t.bound)}, {"holds", t.holds}};
}

inline json to_json(const BracketRow& r) {
  return {{"n", r.n},
          {"per_n", to_json(r.per_n)},
          {"lower", num(r.lower)},
          {"upper", num(r.upper)},
          {"lower_certified", r.lower_certified},
          {"verdict", std::string(to_string(r.verdict))}};
}

inline json to_json(const GoldieBracket& g) {
  json rows = json::array();
  for (const auto& r : g.rows) rows.push_back(to_json(r));
  return {{"p", num(g.p)}, {"b_moment", to_json(g.b_moment)}, {"rows", rows}};
}

inline json to_json(const FixedPointDemo& d) {
  json rows = json::array();
  for (const auto& r : d.rows)
    rows.push_back({{"n", r.n}, {"per_n_closed_form", num(r.closed_form)}, {"per_n_enumerated", num(r.enumerated)}});
  return {{"x", num(d.x)}, {"b", num(d.b)}, {"p", num(d.p)}, {"fixed_point", num(d.fixed_point)}, {"rows", rows}};
}

inline json to_json(const NondegeneracyReport& r) {
  return {{"candidate", num_array(r.candidate)},
          {"margin", num(r.margin)},
          {"samples", r.samples},
          {"status", std::string(to_string(r.status))}};
}

inline json to_json(const LacunaryReport& r) {
  return {{"seq", r.seq},
          {"ratios", num_array(r.ratios)},
          {"min_ratio", num(r.min_ratio)},
          {"tail_sum", num(r.tail_sum)},
          {"lacunary", r.lacunary}};
}

inline json to_json(const TorusIntegral& t) {
  return {{"value", num(t.value)}, {"abs_error", num(t.abs_error)}, {"points", t.points}};
}

inline json to_json(const CorollaryReport& r) {
  return {{"coefficients", num_array(r.coefficients)},
          {"p", num(r.p)},
          {"torus", to_json(r.torus)},
          {"probabilistic", to_json(r.probabilistic)},
          {"torus_terms", num_array(r.torus_terms)},
          {"probabilistic_terms", num_array(r.probabilistic_terms)},
          {"ratio", num(r.ratio)}};
}

}  // namespace momsand
