#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "momsand/error.hpp"
#include "momsand/random.hpp"

namespace momsand {

struct DistributionSpec;

struct TwoPoint {
  double a = 0.0;
  double b = 0.0;
  double prob_a = 0.5;
};

struct Atom {
  double value = 0.0;
  double prob = 0.0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

struct FinitelySupported {
  std::vector<Atom> atoms;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

struct LogNormal {
  double mu = 0.0;
  double sigma = 1.0;
};

struct Exponential {
  double rate = 1.0;
};

/// Law of 1 + cos(U), U uniform on [0, 2*pi].
struct RieszFactor {};

/// +1 or -1 with probability 1/2 each.
struct RademacherSign {};

/// Law of scale * X with X ~ base.
struct ScaledCopy {
  std::shared_ptr<const DistributionSpec> base;
  double scale = 1.0;
};

/// Parametric law of a real random variable X.
struct DistributionSpec {
  using Family = std::variant<TwoPoint, FinitelySupported, Uniform, LogNormal, Exponential,
                              RieszFactor, RademacherSign, ScaledCopy>;
  Family family;

  DistributionSpec() : family(RademacherSign{}) {}
  template <class T>
    requires std::is_constructible_v<Family, T>
  DistributionSpec(T f) : family(std::move(f)) {}  // NOLINT(google-explicit-constructor)

  template <class T>
  [[nodiscard]] bool is() const noexcept {
    return std::holds_alternative<T>(family);
  }
  template <class T>
  [[nodiscard]] const T& as() const {
    return std::get<T>(family);
  }
};

bool operator==(const DistributionSpec& x, const DistributionSpec& y);

inline bool operator==(const TwoPoint& x, const TwoPoint& y) {
  return x.a == y.a && x.b == y.b && x.prob_a == y.prob_a;
}
inline bool operator==(const FinitelySupported& x, const FinitelySupported& y) {
  return x.atoms == y.atoms;
}
inline bool operator==(const Uniform& x, const Uniform& y) { return x.lo == y.lo && x.hi == y.hi; }
inline bool operator==(const LogNormal& x, const LogNormal& y) {
  return x.mu == y.mu && x.sigma == y.sigma;
}
inline bool operator==(const Exponential& x, const Exponential& y) { return x.rate == y.rate; }
inline bool operator==(const RieszFactor&, const RieszFactor&) { return true; }
inline bool operator==(const RademacherSign&, const RademacherSign&) { return true; }
inline bool operator==(const ScaledCopy& x, const ScaledCopy& y) {
  return x.scale == y.scale && x.base && y.base && *x.base == *y.base;
}
inline bool operator==(const DistributionSpec& x, const DistributionSpec& y) {
  return x.family == y.family;
}

/// Scaled copy of spec. Scaling a ScaledCopy multiplies the scales.
inline DistributionSpec scaled(const DistributionSpec& spec, double scale) {
  require(std::isfinite(scale) && scale > 0.0, ErrorCode::InvalidSpec,
          "scale must be positive and finite");
  if (const auto* s = std::get_if<ScaledCopy>(&spec.family))
    return ScaledCopy{s->base, s->scale * scale};
  return ScaledCopy{std::make_shared<const DistributionSpec>(spec), scale};
}

inline void validate(const DistributionSpec& spec) {
  auto finite = [](double x) { return std::isfinite(x); };
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TwoPoint>) {
          require(finite(f.a) && finite(f.b), ErrorCode::InvalidSpec, "twopoint values not finite");
          require(f.prob_a >= 0.0 && f.prob_a <= 1.0, ErrorCode::InvalidSpec,
                  "twopoint probability outside [0,1]");
        } else if constexpr (std::is_same_v<T, FinitelySupported>) {
          require(!f.atoms.empty(), ErrorCode::InvalidSpec, "finite support needs atoms");
          double total = 0.0;
          for (const auto& a : f.atoms) {
            require(finite(a.value), ErrorCode::InvalidSpec, "atom value not finite");
            require(a.prob >= 0.0, ErrorCode::InvalidSpec, "negative probability");
            total += a.prob;
          }
          require(std::abs(total - 1.0) <= 1e-12, ErrorCode::InvalidSpec,
                  "probabilities must sum to 1");
        } else if constexpr (std::is_same_v<T, Uniform>) {
          require(finite(f.lo) && finite(f.hi) && f.lo < f.hi, ErrorCode::InvalidSpec,
                  "uniform requires lo < hi");
        } else if constexpr (std::is_same_v<T, LogNormal>) {
          require(finite(f.mu) && finite(f.sigma) && f.sigma > 0.0, ErrorCode::InvalidSpec,
                  "lognormal requires sigma > 0");
        } else if constexpr (std::is_same_v<T, Exponential>) {
          require(finite(f.rate) && f.rate > 0.0, ErrorCode::InvalidSpec,
                  "exponential requires rate > 0");
        } else if constexpr (std::is_same_v<T, ScaledCopy>) {
          require(f.base != nullptr, ErrorCode::InvalidSpec, "scaled copy without base");
          require(finite(f.scale) && f.scale > 0.0, ErrorCode::InvalidSpec,
                  "scale must be positive");
          validate(*f.base);
        }
      },
      spec.family);
}

/// Atoms with positive probability, or nullopt for continuous laws.
inline std::optional<std::vector<Atom>> atoms(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& f) -> std::optional<std::vector<Atom>> {
        using T = std::decay_t<decltype(f)>;
        std::vector<Atom> out;
        if constexpr (std::is_same_v<T, TwoPoint>) {
          if (f.prob_a > 0.0) out.push_back({f.a, f.prob_a});
          if (f.prob_a < 1.0) out.push_back({f.b, 1.0 - f.prob_a});
          return out;
        } else if constexpr (std::is_same_v<T, FinitelySupported>) {
          for (const auto& a : f.atoms)
            if (a.prob > 0.0) out.push_back(a);
          return out;
        } else if constexpr (std::is_same_v<T, RademacherSign>) {
          return std::vector<Atom>{{-1.0, 0.5}, {1.0, 0.5}};
        } else if constexpr (std::is_same_v<T, ScaledCopy>) {
          auto base = atoms(*f.base);
          if (!base) return std::nullopt;
          for (auto& a : *base) a.value *= f.scale;
          return base;
        } else {
          return std::nullopt;
        }
      },
      spec.family);
}

inline bool is_finite_support(const DistributionSpec& spec) { return atoms(spec).has_value(); }

/// True when X >= 0 almost surely.
inline bool is_nonnegative(const DistributionSpec& spec) {
  if (auto at = atoms(spec)) {
    for (const auto& a : *at)
      if (a.value < 0.0) return false;
    return true;
  }
  if (spec.is<Uniform>()) return spec.as<Uniform>().lo >= 0.0;
  if (spec.is<ScaledCopy>()) return is_nonnegative(*spec.as<ScaledCopy>().base);
  return true;  // lognormal, exponential, riesz factor
}

/// Structural test: |X| is almost surely constant. Continuous families never are.
inline bool has_degenerate_modulus(const DistributionSpec& spec) {
  auto at = atoms(spec);
  if (!at) return false;
  const double first = std::abs(at->front().value);
  for (const auto& a : *at)
    if (std::abs(a.value) != first) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Sampling

/// Flattened sampler; ScaledCopy chains collapse into one multiplier.
class Sampler {
 public:
  explicit Sampler(const DistributionSpec& spec) {
    validate(spec);
    const DistributionSpec* cur = &spec;
    while (const auto* s = std::get_if<ScaledCopy>(&cur->family)) {
      scale_ *= s->scale;
      cur = s->base.get();
    }
    family_ = cur->family;
    if (auto at = atoms(*cur)) {
      double c = 0.0;
      for (const auto& a : *at) {
        c += a.prob;
        values_.push_back(a.value);
        cumulative_.push_back(c);
      }
    }
  }

  double operator()(Rng& rng) const { return scale_ * draw(rng); }

  [[nodiscard]] double scale() const noexcept { return scale_; }

 private:
  double draw(Rng& rng) const {
    if (std::holds_alternative<RademacherSign>(family_)) return rng.coin() ? 1.0 : -1.0;
    if (!values_.empty()) {
      const double u = rng.uniform() * cumulative_.back();
      for (std::size_t i = 0; i + 1 < values_.size(); ++i)
        if (u < cumulative_[i]) return values_[i];
      return values_.back();
    }
    return std::visit(
        [&](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return f.lo + (f.hi - f.lo) * rng.uniform();
          } else if constexpr (std::is_same_v<T, LogNormal>) {
            return std::exp(f.mu + f.sigma * rng.normal());
          } else if constexpr (std::is_same_v<T, Exponential>) {
            return -std::log(rng.uniform_open()) / f.rate;
          } else if constexpr (std::is_same_v<T, RieszFactor>) {
            return 1.0 + std::cos(2.0 * std::numbers::pi * rng.uniform());
          } else {
            return 0.0;  // finite families handled above
          }
        },
        family_);
  }

  DistributionSpec::Family family_;
  double scale_ = 1.0;
  std::vector<double> values_;
  std::vector<double> cumulative_;
};

/// Product path R_0 = 1, R_i = R_{i-1} X_i.
inline std::vector<double> sample_products(const DistributionSpec& spec, std::size_t n,
                                           RandomSource src) {
  Sampler sampler(spec);
  Rng rng(src);
  std::vector<double> path(n + 1);
  path[0] = 1.0;
  for (std::size_t i = 1; i <= n; ++i) path[i] = path[i - 1] * sampler(rng);
  return path;
}

// ---------------------------------------------------------------------------
// Text form "family:key=value,..."

namespace detail {

inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.starts_with("sqrt(") && s.ends_with(")")) {
    return std::sqrt(parse_double(s.substr(5, s.size() - 6), what));
  }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseError, "bad number for " + std::string(what) + ": '" +
                                           std::string(s) + "'");
  return v;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

/// Canonical text form; parse_distribution(to_string(s)) == s.
inline std::string to_string(const DistributionSpec& spec) {
  using detail::format_double;
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TwoPoint>) {
          return "twopoint:a=" + format_double(f.a) + ",b=" + format_double(f.b) +
                 ",pa=" + format_double(f.prob_a);
        } else if constexpr (std::is_same_v<T, FinitelySupported>) {
          std::string s = "finite:atoms=";
          for (std::size_t i = 0; i < f.atoms.size(); ++i) {
            if (i) s += '|';
            s += format_double(f.atoms[i].value) + '@' + format_double(f.atoms[i].prob);
          }
          return s;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return "uniform:lo=" + format_double(f.lo) + ",hi=" + format_double(f.hi);
        } else if constexpr (std::is_same_v<T, LogNormal>) {
          return "lognormal:mu=" + format_double(f.mu) + ",sigma=" + format_double(f.sigma);
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return "exponential:rate=" + format_double(f.rate);
        } else if constexpr (std::is_same_v<T, RieszFactor>) {
          return "riesz";
        } else if constexpr (std::is_same_v<T, RademacherSign>) {
          return "rademacher";
        } else {
          return "scaled:s=" + format_double(f.scale) + ",base=" + to_string(*f.base);
        }
      },
      spec.family);
}

/// Parses "family:key=value,..." e.g. "twopoint:a=0.5,b=1.5,pa=0.5",
/// "lognormal:mu=0,sigma=0.5", "finite:atoms=0.5@0.25|2@0.75", "riesz",
/// "scaled:s=2,base=uniform:lo=0,hi=1" (base must come last).
inline DistributionSpec parse_distribution(std::string_view text) {
  using detail::parse_double;
  const auto colon = text.find(':');
  const std::string family = detail::lower(text.substr(0, colon));
  std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

  std::map<std::string, std::string, std::less<>> kv;
  std::string base_text;
  while (!rest.empty()) {
    const auto eq = rest.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::ParseError, "expected key=value in '" + std::string(text) + "'");
    const std::string key = detail::lower(rest.substr(0, eq));
    rest.remove_prefix(eq + 1);
    if (key == "base") {
      base_text = std::string(rest);
      break;
    }
    const auto comma = rest.find(',');
    kv[key] = std::string(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  auto get = [&](std::string_view key) {
    auto it = kv.find(key);
    if (it == kv.end())
      throw Error(ErrorCode::ParseError,
                  "missing key '" + std::string(key) + "' for family " + family);
    return parse_double(it->second, key);
  };
  auto expect_keys = [&](std::initializer_list<std::string_view> keys) {
    for (const auto& [k, v] : kv) {
      bool known = false;
      for (auto key : keys) known = known || k == key;
      if (!known) throw Error(ErrorCode::ParseError, "unknown key '" + k + "' for " + family);
    }
  };

  DistributionSpec spec;
  if (family == "twopoint") {
    expect_keys({"a", "b", "pa"});
    spec = TwoPoint{get("a"), get("b"), kv.contains("pa") ? get("pa") : 0.5};
  } else if (family == "finite") {
    expect_keys({"atoms"});
    FinitelySupported fs;
    auto it = kv.find("atoms");
    if (it == kv.end()) throw Error(ErrorCode::ParseError, "finite needs atoms=v@p|...");
    std::string_view list = it->second;
    while (!list.empty()) {
      const auto bar = list.find('|');
      std::string_view item = list.substr(0, bar);
      const auto at = item.find('@');
      if (at == std::string_view::npos)
        throw Error(ErrorCode::ParseError, "atom must be value@prob");
      fs.atoms.push_back({parse_double(item.substr(0, at), "atom value"),
                          parse_double(item.substr(at + 1), "atom prob")});
      list = bar == std::string_view::npos ? std::string_view{} : list.substr(bar + 1);
    }
    spec = std::move(fs);
  } else if (family == "uniform") {
    expect_keys({"lo", "hi"});
    spec = Uniform{get("lo"), get("hi")};
  } else if (family == "lognormal") {
    expect_keys({"mu", "sigma"});
    spec = LogNormal{get("mu"), get("sigma")};
  } else if (family == "exponential") {
    expect_keys({"rate"});
    spec = Exponential{get("rate")};
  } else if (family == "riesz" || family == "rieszfactor") {
    expect_keys({});
    spec = RieszFactor{};
  } else if (family == "rademacher" || family == "sign") {
    expect_keys({});
    spec = RademacherSign{};
  } else if (family == "scaled") {
    expect_keys({"s"});
    if (base_text.empty()) throw Error(ErrorCode::ParseError, "scaled needs base=...");
    spec = ScaledCopy{std::make_shared<const DistributionSpec>(parse_distribution(base_text)),
                      get("s")};
  } else {
    throw Error(ErrorCode::ParseError, "unknown distribution family '" + family + "'");
  }
  try {
    validate(spec);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return spec;
}

}  // namespace momsand
