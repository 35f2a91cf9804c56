#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "momsand/config.hpp"
#include "momsand/constants.hpp"
#include "momsand/montecarlo.hpp"
#include "momsand/perpetuity.hpp"
#include "momsand/report.hpp"
#include "momsand/riesz.hpp"

namespace momsand {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitVerifyFailed = 1, kExitUsage = 2, kExitHypothesis = 3 };

struct CommandResult {
  json result;
  int exit_code = kExitOk;
};

inline double require_p(const ExperimentConfig& cfg) {
  require(cfg.p.has_value(), ErrorCode::InvalidArgument, "--p is required");
  require(std::isfinite(*cfg.p) && *cfg.p > 0.0, ErrorCode::InvalidArgument, "p must be positive");
  return *cfg.p;
}

inline DistributionSpec require_dist(const ExperimentConfig& cfg) {
  require(!cfg.dist.empty(), ErrorCode::InvalidArgument, "--dist is required");
  return parse_distribution(cfg.dist);
}

inline std::vector<double> a_grid(const ExperimentConfig& cfg, double p) {
  if (!cfg.grid_a.empty()) return cfg.grid_a;
  return p <= 1.0 ? default_small_p_a_grid() : default_large_p_a_grid();
}

inline std::vector<double> q_grid(const ExperimentConfig& cfg, double p) {
  return cfg.grid_q.empty() ? default_q_grid(p) : cfg.grid_q;
}

inline Certification certify_from_config(const ExperimentConfig& cfg, const DistributionSpec& x, double p) {
  return certify(x, p, a_grid(cfg, p), q_grid(cfg, p));
}

/// Writes "label,rep,value" rows (or "rep,value" when label is empty).
class SampleCsv {
 public:
  explicit SampleCsv(const std::string& path, const std::string& label) : label_(label) {
    if (path.empty()) return;
    file_.open(path);
    require(file_.good(), ErrorCode::InvalidArgument, "cannot open CSV output '" + path + "'");
    file_.precision(17);
    file_ << (label_.empty() ? "" : label_ + ",") << "rep,value\n";
  }
  [[nodiscard]] bool enabled() const { return file_.is_open(); }
  void write(std::size_t key, const std::vector<double>& values) {
    if (!enabled()) return;
    for (std::size_t r = 0; r < values.size(); ++r) {
      if (!label_.empty()) file_ << key << ',';
      file_ << r << ',' << values[r] << '\n';
    }
  }

 private:
  std::string label_;
  std::ofstream file_;
};

// ---------------------------------------------------------------------------

inline CommandResult cmd_moments(const ExperimentConfig& cfg) {
  const auto x = require_dist(cfg);
  require(!cfg.q.empty(), ErrorCode::InvalidArgument, "--q is required");
  json rows = json::array();
  for (double q : cfg.q) rows.push_back(to_json(abs_moment(x, q)));
  return {{{"dist", to_string(x)}, {"moments", rows}}, kExitOk};
}

inline CommandResult cmd_certify(const ExperimentConfig& cfg) {
  const auto x = require_dist(cfg);
  const double p = require_p(cfg);
  const auto cert = certify_from_config(cfg, x, p);
  json out = to_json(cert);
  out["dist"] = to_string(x);
  return {out, kExitOk};
}

namespace detail {

/// For a law with degenerate |X| the ratio lhs / rhs_sum for v = (0, 1, ..., 1)
/// moves without bound as n grows, so no pair of constants exists.
inline json degenerate_growth(const DistributionSpec& x, double p, std::size_t n, std::uint64_t reps,
                              RandomSource src) {
  const auto norm_x = normalize_unit_p_moment(x, p).spec;
  json rows = json::array();
  for (std::size_t m : {n, 2 * n, 4 * n, 8 * n}) {
    if (m == 0) continue;
    std::vector<double> ones(m + 1, 1.0);
    ones[0] = 0.0;
    const auto c = scalar_coefficients(ones);
    const auto at = atoms(norm_x);
    const bool exact = at && outcome_count(at->size(), m) <= kMaxEnumeration;
    const auto lhs = exact ? brute_force_lhs(norm_x, c, p) : estimate_lhs(norm_x, c, p, reps, src);
    const double rhs = rhs_sum(norm_x, c, p);
    rows.push_back({{"n", m}, {"lhs", to_json(lhs)}, {"rhs_sum", num(rhs)}, {"ratio", num(lhs.mean / rhs)}});
  }
  return rows;
}

}  // namespace detail

inline CommandResult cmd_verify(const ExperimentConfig& cfg) {
  const auto x = require_dist(cfg);
  const double p = require_p(cfg);
  const auto sets = coefficient_sets(cfg);
  const RandomSource src{cfg.seed, 0};
  json out = {{"dist", to_string(x)}, {"p", num(p)}};
  std::optional<Certification> cert;
  try {
    cert = certify_from_config(cfg, x, p);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateModulus) throw;
    out["verdict"] = "FAIL";
    out["reason"] = std::string(e.what());
    out["ratio_growth"] = detail::degenerate_growth(x, p, std::max<std::size_t>(cfg.n.front(), 1), cfg.reps, src);
    return {out, kExitVerifyFailed};
  }
  out["certification"] = to_json(*cert);
  SampleCsv csv(cfg.csv, "set");
  json reports = json::array();
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = -std::numeric_limits<double>::infinity();
  std::size_t pass = 0, fail = 0, inconclusive = 0;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const auto& c = sets[k];
    const auto at = atoms(cert->normalized);
    SandwichReport rep;
    if (at && outcome_count(at->size(), c.n()) <= kMaxEnumeration) {
      rep = run_sandwich(cert->normalized, p, c, cert->bundle, cfg.reps, src);
    } else {
      std::vector<double> samples;
      const auto lhs = estimate_lhs(cert->normalized, c, p, cfg.reps, src, csv.enabled() ? &samples : nullptr);
      csv.write(k, samples);
      rep = make_sandwich_report(lhs, rhs_sum(cert->normalized, c, p), cert->bundle);
    }
    if (std::isfinite(rep.ratio)) {
      min_ratio = std::min(min_ratio, rep.ratio);
      max_ratio = std::max(max_ratio, rep.ratio);
    }
    switch (rep.verdict) {
      case Verdict::Pass: ++pass; break;
      case Verdict::Fail: ++fail; break;
      case Verdict::Inconclusive: ++inconclusive; break;
    }
    json j = to_json(rep);
    j["coefficients"] = to_json(c);
    reports.push_back(j);
  }
  const bool all_pass = pass == sets.size();
  out["reports"] = reports;
  out["summary"] = {{"sets", sets.size()},     {"pass", pass},
                    {"fail", fail},            {"inconclusive", inconclusive},
                    {"min_ratio", num(min_ratio)}, {"max_ratio", num(max_ratio)},
                    {"lower_c", num(cert->bundle.lower_c)}, {"upper_C", num(cert->bundle.upper_C)}};
  out["verdict"] = all_pass ? "PASS" : (fail > 0 ? "FAIL" : "INCONCLUSIVE");
  return {out, all_pass ? kExitOk : kExitVerifyFailed};
}

inline CommandResult cmd_riesz(const ExperimentConfig& cfg) {
  require(!cfg.seq.empty(), ErrorCode::InvalidArgument, "--seq is required");
  const double p = cfg.p.value_or(2.0);
  const RandomSource src{cfg.seed, 0};
  const auto lac = check_lacunary(cfg.seq);
  json out = {{"seq", to_json(lac)}, {"p", num(p)}};
  std::vector<double> a;
  if (cfg.term) {
    a = single_term(*cfg.term);
  } else if (!cfg.coeffs.empty()) {
    a = parse_number_list(cfg.coeffs, "coefficient");
  }
  if (!a.empty()) {
    out["coefficients"] = num_array(a);
    out["torus"] = to_json(riesz_lp_norm(cfg.seq, a, p));
    if (lac.lacunary) out["corollary"] = to_json(corollary_check(cfg.seq, a, p, cfg.reps, src));
    return {out, kExitOk};
  }
  const auto draws = corollary_draws(cfg.seq, p, cfg.draws, cfg.reps, src);
  json rows = json::array();
  for (const auto& d : draws.draws) rows.push_back(to_json(d));
  out["draws"] = rows;
  out["min_ratio"] = num(draws.min_ratio);
  out["max_ratio"] = num(draws.max_ratio);
  return {out, kExitOk};
}

inline CommandResult cmd_perpetuity(const ExperimentConfig& cfg) {
  const double p = cfg.p.value_or(2.0);
  if (cfg.fixed_point_demo) {
    std::vector<std::size_t> ns = cfg.n;
    if (ns.size() <= 1) ns = {1, 2, 4, 8, 16, 32, 64, 128};
    const auto demo = fixed_point_demo(p, ns);
    json out = {{"fixed_point_demo", to_json(demo)}};
    json exits = json::array();
    for (double level : {1e-1, 1e-2, 1e-3})
      exits.push_back({{"level", level}, {"below_from_n", demo.exit_index(level)}});
    out["lower_bracket_exit"] = exits;
    return {out, kExitOk};
  }
  const auto x = require_dist(cfg);
  const auto cert = certify_from_config(cfg, x, p);
  const auto pair = pair_from_config(cfg, cert.normalized);
  const RandomSource src{cfg.seed, 0};
  const auto br = goldie_bracket(pair, p, cfg.n, cert.bundle, cfg.reps, src);
  SampleCsv csv(cfg.csv, "n");
  if (csv.enabled()) {
    for (const auto& row : br.rows) {
      if (row.per_n.exact) continue;
      std::vector<double> samples;
      perpetuity_lhs(pair, row.n, p, cfg.reps, src, &samples);
      csv.write(row.n, samples);
    }
  }
  json out = {{"dist", to_string(x)},
              {"x_scale", num(cert.scale)},
              {"coupling", std::string(to_string(pair.coupling))},
              {"certification", to_json(cert)},
              {"nondegeneracy", to_json(check_pair_nondegeneracy(pair, 100000, src))},
              {"bracket", to_json(br)}};
  bool ok = true;
  for (const auto& row : br.rows) ok = ok && row.verdict == Verdict::Pass;
  out["verdict"] = ok ? "PASS" : "FAIL";
  return {out, ok ? kExitOk : kExitVerifyFailed};
}

inline CommandResult cmd_counterexample(const ExperimentConfig& cfg) {
  const double p = cfg.p.value_or(4.0);
  const std::size_t n = cfg.n.front();
  const auto r = khintchine_counterexample(n, p, cfg.reps, {cfg.seed, 0});
  SampleCsv csv(cfg.csv, "");
  if (csv.enabled()) {
    std::vector<double> ones(n + 1, 1.0);
    ones[0] = 0.0;
    std::vector<double> samples;
    estimate_lhs(RademacherSign{}, scalar_coefficients(ones), p, cfg.reps, {cfg.seed, 0}, &samples);
    csv.write(0, samples);
  }
  json out = to_json(r);
  if (r.exact) {
    const double z = (r.estimate.mean - *r.exact) / r.estimate.std_error;
    out["z_score"] = num(z);
  }
  return {out, kExitOk};
}

/// Runs cfg.command. Library errors propagate to the caller.
inline CommandResult run_command(const ExperimentConfig& cfg) {
  if (cfg.command == "moments") return cmd_moments(cfg);
  if (cfg.command == "certify") return cmd_certify(cfg);
  if (cfg.command == "verify") return cmd_verify(cfg);
  if (cfg.command == "riesz") return cmd_riesz(cfg);
  if (cfg.command == "perpetuity") return cmd_perpetuity(cfg);
  if (cfg.command == "counterexample") return cmd_counterexample(cfg);
  throw Error(ErrorCode::InvalidArgument, "unknown command '" + cfg.command + "'");
}

/// Full report: tool, resolved config, command result, exit code. The
/// wall-time field is added by the caller.
inline json make_report(const ExperimentConfig& cfg, const CommandResult& r) {
  return {{"tool", {{"name", "momsand"}, {"version", kToolVersion}}},
          {"command", cfg.command},
          {"config", to_json(cfg)},
          {"result", r.result},
          {"exit_code", r.exit_code}};
}

inline int exit_code_for(const Error& e) { return e.is_hypothesis_failure() ? kExitHypothesis : kExitUsage; }

}  // namespace momsand
