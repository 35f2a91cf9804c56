#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "momsand/assumptions.hpp"
#include "momsand/distribution.hpp"
#include "momsand/montecarlo.hpp"
#include "momsand/report.hpp"

namespace momsand {

/// Resolved parameters of one CLI run. Unset optionals fall back to the
/// command's defaults.
struct ExperimentConfig {
  std::string command;
  std::string dist;
  std::optional<double> p;
  std::vector<std::size_t> n{10};
  std::size_t dim = 1;
  std::string norm = "l2";
  std::string coeffs;  // "v;v;..." with comma-separated components, or "random:count,scale,seed"
  std::uint64_t reps = 100000;
  std::uint64_t seed = 1;
  std::vector<double> grid_a;
  std::vector<double> grid_q;
  std::vector<double> q;
  std::vector<std::uint64_t> seq;
  std::optional<std::size_t> term;
  std::size_t draws = 20;
  std::string b_dist;  // ';'-separated component laws
  std::string coupling = "independent";
  std::string map;     // "i,s;i,s[:power]"
  bool fixed_point_demo = false;
  std::string out;
  std::string csv;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

inline json to_json(const ExperimentConfig& c) {
  return {{"command", c.command}, {"dist", c.dist},         {"p", opt_json(c.p)},
          {"n", c.n},             {"dim", c.dim},           {"norm", c.norm},
          {"coeffs", c.coeffs},   {"reps", c.reps},         {"seed", c.seed},
          {"grid_a", c.grid_a},   {"grid_q", c.grid_q},     {"q", c.q},
          {"seq", c.seq},         {"term", opt_json(c.term)}, {"draws", c.draws},
          {"b_dist", c.b_dist},   {"coupling", c.coupling}, {"map", c.map},
          {"fixed_point_demo", c.fixed_point_demo},         {"out", c.out},
          {"csv", c.csv}};
}

namespace detail {
template <class T>
void read_field(const json& j, const char* key, T& field) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    j.at(key).get_to(field);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config field '") + key + "': " + e.what());
  }
}

template <class T>
void read_field(const json& j, const char* key, std::optional<T>& field) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read_field(j, key, v);
  field = v;
}
}  // namespace detail

/// Fields missing from j keep the values already in base. Unknown keys are rejected.
inline ExperimentConfig config_from_json(const json& j, ExperimentConfig base = {}) {
  require(j.is_object(), ErrorCode::ParseError, "config must be a JSON object");
  const json known = to_json(ExperimentConfig{});
  for (const auto& [key, _] : j.items())
    require(known.contains(key), ErrorCode::ParseError, "unknown config key '" + key + "'");
  using detail::read_field;
  read_field(j, "command", base.command);
  read_field(j, "dist", base.dist);
  read_field(j, "p", base.p);
  if (j.contains("n") && j.at("n").is_number_unsigned()) {
    base.n = {j.at("n").get<std::size_t>()};
  } else {
    read_field(j, "n", base.n);
  }
  read_field(j, "dim", base.dim);
  read_field(j, "norm", base.norm);
  read_field(j, "coeffs", base.coeffs);
  read_field(j, "reps", base.reps);
  read_field(j, "seed", base.seed);
  read_field(j, "grid_a", base.grid_a);
  read_field(j, "grid_q", base.grid_q);
  read_field(j, "q", base.q);
  read_field(j, "seq", base.seq);
  read_field(j, "term", base.term);
  read_field(j, "draws", base.draws);
  read_field(j, "b_dist", base.b_dist);
  read_field(j, "coupling", base.coupling);
  read_field(j, "map", base.map);
  read_field(j, "fixed_point_demo", base.fixed_point_demo);
  read_field(j, "out", base.out);
  read_field(j, "csv", base.csv);
  return base;
}

inline std::string canonical_string(const ExperimentConfig& c) { return to_json(c).dump(); }

inline ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Field parsers

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<double> parse_number_list(std::string_view s, std::string_view what) {
  std::vector<double> out;
  for (auto part : split(s, ',')) out.push_back(detail::parse_double(part, what));
  return out;
}

inline std::uint64_t parse_count(std::string_view s, std::string_view what) {
  const double v = detail::parse_double(s, what);
  require(v >= 0 && v == std::floor(v) && v < 1.8e19, ErrorCode::ParseError,
          "expected a nonnegative integer for " + std::string(what));
  return static_cast<std::uint64_t>(v);
}

/// Coefficient sets from the config. "1,-1,1" gives scalars, "1,0;0,1" gives
/// vectors, and "random:count,scale,seed" gives count sets of n + 1 vectors in R^dim, set k
/// drawn with seed + k.
inline std::vector<CoefficientSet> coefficient_sets(const ExperimentConfig& cfg) {
  const NormKind kind = parse_norm(cfg.norm);
  const std::string src = cfg.coeffs.empty() ? "random:20,1," + std::to_string(cfg.seed) : cfg.coeffs;
  std::vector<CoefficientSet> sets;
  if (std::string_view(src).starts_with("random:")) {
    const auto parts = split(std::string_view(src).substr(7), ',');
    require(parts.size() == 3, ErrorCode::ParseError, "coefficient source is random:count,scale,seed");
    const auto count = parse_count(parts[0], "count");
    const double scale = detail::parse_double(parts[1], "scale");
    const auto seed = parse_count(parts[2], "seed");
    require(!cfg.n.empty(), ErrorCode::InvalidArgument, "n is required for random coefficients");
    for (std::uint64_t k = 0; k < count; ++k)
      sets.push_back(random_coefficients(cfg.n.front() + 1, cfg.dim, scale, seed + k, kind));
    return sets;
  }
  CoefficientSet c;
  c.norm = kind;
  if (src.find(';') == std::string::npos) {
    for (double x : parse_number_list(src, "coefficient")) c.vectors.push_back({x});
  } else {
    for (auto vec : split(src, ';')) c.vectors.push_back(parse_number_list(vec, "coefficient"));
  }
  c.dim = c.vectors.front().size();
  validate(c);
  sets.push_back(std::move(c));
  return sets;
}

inline PairSpec pair_from_config(const ExperimentConfig& cfg, const DistributionSpec& x) {
  PairSpec pair;
  pair.x_spec = x;
  pair.norm = parse_norm(cfg.norm);
  pair.coupling = parse_coupling(cfg.coupling);
  if (pair.coupling == Coupling::Independent) {
    require(!cfg.b_dist.empty(), ErrorCode::InvalidArgument, "--b-dist is required for independent coupling");
    for (auto part : split(cfg.b_dist, ';')) pair.b_components.push_back(parse_distribution(part));
  } else {
    require(!cfg.map.empty(), ErrorCode::InvalidArgument, "--map is required for comonotone coupling");
    std::string_view m = cfg.map;
    if (const auto colon = m.find(':'); colon != std::string_view::npos) {
      pair.map.power = detail::parse_double(m.substr(colon + 1), "map power");
      m = m.substr(0, colon);
    }
    for (auto comp : split(m, ';')) {
      const auto v = parse_number_list(comp, "map");
      require(v.size() == 2, ErrorCode::ParseError, "map components are intercept,slope");
      pair.map.intercept.push_back(v[0]);
      pair.map.slope.push_back(v[1]);
    }
  }
  validate(pair);
  return pair;
}

}  // namespace momsand
