// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "momsand/commands.hpp"

#ifndef MOMSAND_CLI
#error "MOMSAND_CLI must name the momsand executable"
#endif

namespace {

using namespace momsand;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

// ---------------------------------------------------------------------------
// Shared family for the sandwich and tail criteria

struct TwoPointCase {
  TwoPoint raw;
  std::vector<CoefficientSet> sets;
};

std::vector<TwoPointCase> two_point_family(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> lo(0.05, 0.95), hi(1.05, 4.0), pa(0.1, 0.9);
  std::uniform_int_distribution<int> nn(1, 12), dd(1, 3), nk(0, 2);
  const NormKind kinds[] = {NormKind::L1, NormKind::L2, NormKind::Sup};
  std::vector<TwoPointCase> out;
  for (int i = 0; i < 20; ++i) {
    TwoPointCase c;
    c.raw = TwoPoint{lo(gen), hi(gen), pa(gen)};
    for (int k = 0; k < 10; ++k) {
      const auto n = static_cast<std::size_t>(nn(gen));
      const auto d = static_cast<std::size_t>(dd(gen));
      c.sets.push_back(random_coefficients(n + 1, d, 1.0, gen(), kinds[nk(gen)]));
    }
    out.push_back(std::move(c));
  }
  return out;
}

bool mixed_signs(const CoefficientSet& c) {
  bool neg = false, pos = false;
  for (const auto& v : c.vectors)
    for (double x : v) {
      neg = neg || x < 0.0;
      pos = pos || x > 0.0;
    }
  return neg && pos;
}

struct TailTally {
  std::size_t checked = 0;
  std::size_t violations = 0;
};

/// Sandwich check on the two-point family; constants come from the certify command.
Outcome sandwich_family(const std::vector<double>& ps, double time_limit, TailTally& tails) {
  const auto start = Clock::now();
  const auto family = two_point_family(20240601);
  std::size_t cases = 0, failures = 0, mixed = 0;
  std::string first_failure;
  double min_ratio = INFINITY, max_ratio = 0.0;
  for (double p : ps) {
    for (const auto& fc : family) {
      ExperimentConfig cfg;
      cfg.command = "certify";
      cfg.dist = to_string(DistributionSpec{fc.raw});
      cfg.p = p;
      json cert;
      try {
        cert = run_command(cfg).result;
      } catch (const Error& e) {
        ++failures;
        if (first_failure.empty()) first_failure = cfg.dist + " p=" + fmt(p) + ": " + e.what();
        continue;
      }
      const auto x = parse_distribution(cert["normalized_dist"].get<std::string>());
      const auto& bundle = cert["bundle"];
      const double lower_c = bundle["lower_c"].get<double>();
      const double upper = std::min(bundle["recursive_C"].get<double>(), bundle["product_C"].get<double>());
      const auto& certificate = cert["certificate"];
      for (const auto& c : fc.sets) {
        ++cases;
        if (mixed_signs(c)) ++mixed;
        const double lhs = brute_force_lhs(x, c, p).mean;
        const double rhs = rhs_sum(x, c, p);
        const double tol = kRelativeTolerance * rhs;
        min_ratio = std::min(min_ratio, lhs / rhs);
        max_ratio = std::max(max_ratio, lhs / rhs);
        if (!(lhs >= lower_c * rhs - tol && lhs <= upper * rhs + tol)) {
          ++failures;
          if (first_failure.empty())
            first_failure = cfg.dist + " p=" + fmt(p) + ": lhs/rhs=" + fmt(lhs / rhs) + " outside [" +
                            fmt(lower_c) + ", " + fmt(upper) + "]";
        }
        for (double t : {1.0, 2.0, 4.0, 8.0}) {
          const auto tc = p <= 1.0
                              ? small_p_tail_check(x, c, p, certificate["lambda"].get<double>(), t)
                              : large_p_tail_check(x, c, p, certificate["q"].get<double>(),
                                                   certificate["lambda"].get<double>(), t);
          ++tails.checked;
          if (!tc.holds) ++tails.violations;
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  Outcome o;
  o.pass = failures == 0 && elapsed < time_limit && mixed * 2 > cases;
  o.detail = std::to_string(cases) + " cases (" + std::to_string(mixed) + " with mixed signs), " +
             std::to_string(failures) + " failures, lhs/rhs in [" + fmt(min_ratio) + ", " + fmt(max_ratio) +
             "], " + fmt(elapsed) + " s (limit " + fmt(time_limit) + " s)";
  if (!first_failure.empty()) o.detail += "; first failure: " + first_failure;
  return o;
}

// ---------------------------------------------------------------------------

Outcome p_one_equality() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> val(0.0, 3.0), w(0.1, 1.0), coef(0.0, 2.0);
  std::uniform_int_distribution<int> atoms_n(2, 3), nn(1, 10);
  std::size_t cases = 0, failures = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    FinitelySupported fs;
    double total = 0.0;
    for (int a = atoms_n(gen); a > 0; --a) {
      fs.atoms.push_back({i % 4 == 0 && a == 1 ? 0.0 : val(gen), w(gen)});
      total += fs.atoms.back().prob;
    }
    double acc = 0.0;
    for (std::size_t a = 0; a + 1 < fs.atoms.size(); ++a) acc += fs.atoms[a].prob /= total;
    fs.atoms.back().prob = 1.0 - acc;
    const DistributionSpec x = fs;
    std::vector<double> v(static_cast<std::size_t>(nn(gen)) + 1);
    for (auto& e : v) e = coef(gen);
    const auto c = scalar_coefficients(v);
    const double lhs = brute_force_lhs(x, c, 1.0).mean;
    const double rhs = rhs_sum(x, c, 1.0);
    const double rel = rhs > 0.0 ? std::abs(lhs - rhs) / rhs : std::abs(lhs);
    worst = std::max(worst, rel);
    ++cases;
    if (!(std::abs(lhs - rhs) <= 1e-12 * rhs)) ++failures;
  }
  return {failures == 0, std::to_string(cases) + " cases, " + std::to_string(failures) +
                             " failures, worst relative gap " + fmt(worst)};
}

Outcome khintchine() {
  const auto start = Clock::now();
  const auto r = khintchine_counterexample(100, 4.0, 1000000, {1, 0});
  const double z = (r.estimate.mean - 29800.0) / r.estimate.std_error;
  const bool exact_ok = r.exact && *r.exact == 29800.0;
  return {exact_ok && std::abs(z) <= 3.0 && r.ratio > 250.0,
          "estimate " + fmt(r.estimate.mean) + " +- " + fmt(r.estimate.std_error) + " (z = " + fmt(z) +
              "), ratio " + fmt(r.ratio) + ", " + fmt(seconds_since(start)) + " s"};
}

Outcome riesz_exactness() {
  const auto start = Clock::now();
  const std::vector<std::uint64_t> seq{4, 16, 64, 256, 1024};
  const std::uint64_t n = std::uint64_t{1} << 17;
  double worst_mean = 0.0, worst_square = 0.0, worst_doubling = 0.0;
  for (std::size_t i = 0; i <= seq.size(); ++i) {
    const auto a = single_term(i);
    const double mean = riesz_lp_norm(seq, a, 1.0, n).value;
    const double square = riesz_lp_norm(seq, a, 2.0, n).value;
    const double mean2 = riesz_lp_norm(seq, a, 1.0, 2 * n).value;
    const double square2 = riesz_lp_norm(seq, a, 2.0, 2 * n).value;
    worst_mean = std::max(worst_mean, std::abs(mean - 1.0));
    worst_square = std::max(worst_square, std::abs(square - std::pow(1.5, static_cast<double>(i))));
    worst_doubling = std::max({worst_doubling, std::abs(mean2 - mean) / mean, std::abs(square2 - square) / square});
  }
  const double elapsed = seconds_since(start);
  return {worst_mean <= 1e-8 && worst_square <= 1e-6 && worst_doubling < 1e-9 && elapsed < 30.0,
          "max |mean - 1| " + fmt(worst_mean) + ", max |square - 1.5^i| " + fmt(worst_square) +
              ", max doubling change " + fmt(worst_doubling) + ", " + fmt(elapsed) + " s"};
}

Outcome corollary() {
  const std::vector<std::uint64_t> seq{4, 16, 64};
  double worst = 0.0;
  for (std::size_t i = 0; i <= seq.size(); ++i) {
    const auto r = corollary_check(seq, single_term(i), 2.0, 1000, {1, 0});
    worst = std::max(worst, std::abs(r.ratio - 1.0));
  }
  const auto draws = corollary_draws(seq, 3.0, 20, 100000, {7, 0});
  const double band = draws.max_ratio / draws.min_ratio;
  return {worst <= 1e-6 && draws.draws.size() == 20 && band <= 10.0,
          "p=2 single-term max |ratio - 1| " + fmt(worst) + "; p=3 ratios in [" + fmt(draws.min_ratio) + ", " +
              fmt(draws.max_ratio) + "], band " + fmt(band)};
}

// ---------------------------------------------------------------------------

Outcome constant_formulas() {
  std::mt19937_64 gen(31337);
  std::size_t small_ok = 0, large_ok = 0;
  std::string first_failure;
  auto witness = [](std::uint64_t k, const std::function<double(double)>& f, double log_rhs) {
    if (!(f(static_cast<double>(k)) <= log_rhs + 1e-12)) return false;
    return k == 1 || f(static_cast<double>(k - 1)) > log_rhs - 1e-12;
  };
  std::uniform_real_distribution<double> lam(0.02, 0.98), del(0.01, 1.0), aa(1.01, 50.0);
  for (int i = 0; i < 1000; ++i) {
    SmallPCertificate cert;
    cert.p = 0.5;
    cert.lambda = cert.lambda_exact = lam(gen);
    cert.delta = cert.delta_exact = del(gen);
    cert.a_param = aa(gen);
    const auto b = lower_constant_small_p(cert);
    const double log_rhs = std::log(std::pow(cert.delta, 3) * std::pow(1 - cert.lambda, 2) / (4096.0 * cert.a_param));
    const auto f = [&](double k) { return std::log(k) + (2 * k - 2) * std::log(cert.lambda); };
    const bool c_ok = std::abs(b.lower_c - std::pow(cert.delta, 3) / (16.0 * static_cast<double>(b.k))) <=
                      1e-12 * b.lower_c;
    if (witness(b.k, f, log_rhs) && c_ok) {
      ++small_ok;
    } else if (first_failure.empty()) {
      first_failure = "small p tuple " + std::to_string(i);
    }
  }
  std::uniform_real_distribution<double> pp(1.05, 4.0), mu(0.01, 1.0), la(0.02, 0.95), ab(0.1, 20.0), u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    LargePCertificate cert;
    cert.p = pp(gen);
    const double q_lo = std::max(cert.p - 1.0, 1.0);
    cert.q = q_lo + (cert.p - q_lo) * (0.01 + 0.98 * u(gen));
    cert.mu = cert.mu_exact = mu(gen);
    cert.lambda = cert.lambda_exact = la(gen);
    cert.a_param = ab(gen);
    cert.lambda_chain.resize(chain_length(cert.p));
    for (auto& l : cert.lambda_chain) l = la(gen);
    cert.chain_exact = cert.lambda_chain;
    const auto b = lower_constant_large_p(cert);
    const double p = cert.p, l = cert.lambda, q = cert.q;
    const double log_c0 = (1 - p) * std::log(1 - l) + p * std::log(2 * cert.a_param / (3 * l)) +
                          (p / q) * std::log(2 * p / ((q + 1 - p) * std::log(2.0))) +
                          2 * p * p / std::min(p - 1, 1.0) * std::log(48.0);
    const double log_scale = 3 * p * std::log(cert.mu) - std::log(8.0) - 10 * p * std::log(2.0) - p * std::log(3.0);
    const double log_rhs = std::log(1 - l) + log_scale - log_c0;
    const auto f = [&](double k) { return std::log(k) + p * k * std::log(l); };
    const bool c_ok = std::abs(b.log_lower_c - (log_scale - std::log(static_cast<double>(b.k)))) <= 1e-9;
    if (witness(b.k, f, log_rhs) && c_ok) {
      ++large_ok;
    } else if (first_failure.empty()) {
      first_failure = "large p tuple " + std::to_string(i);
    }
  }
  SmallPCertificate half;
  half.p = 0.5;
  half.lambda = half.lambda_exact = 0.5;
  half.delta = half.delta_exact = 0.5;
  half.a_param = 2.0;
  const auto hb = lower_constant_small_p(half);
  const bool twelve = hb.k == 12 && std::abs(hb.lower_c - 1.0 / 1536.0) <= 1e-15;
  const std::vector<double> chain{0.5};
  const auto up = upper_constant_large_p(1.5, chain);
  const bool uppers = std::abs(up.recursive_C - 9.657) < 1e-3 && std::abs(up.product_C - 12.52) < 1e-2 &&
                      up.recursive_C <= up.product_C;
  Outcome o;
  o.pass = small_ok == 1000 && large_ok == 1000 && twelve && uppers;
  o.detail = "witness " + std::to_string(small_ok) + "/1000 small p, " + std::to_string(large_ok) +
             "/1000 large p; k=" + std::to_string(hb.k) + " c=1/" + fmt(1.0 / hb.lower_c) + "; recursive_C " +
             fmt(up.recursive_C) + " <= product_C " + fmt(up.product_C);
  if (!first_failure.empty()) o.detail += "; first failure: " + first_failure;
  return o;
}

Outcome goldie() {
  const double p = 2.0;
  const auto cert = certify(TwoPoint{0.4, 1.7, 0.6}, p);
  PairSpec pair;
  pair.x_spec = cert.normalized;
  pair.b_components = {TwoPoint{-1.0, 1.5, 0.4}};
  const auto exact = goldie_bracket(pair, p, {1, 2, 3, 4, 5, 6}, cert.bundle, 100000, {3, 0});
  const auto mc = goldie_bracket(pair, p, {10, 25, 50}, cert.bundle, 100000, {3, 0});
  std::size_t pass = 0, exact_rows = 0, rows = 0;
  for (const auto* br : {&exact, &mc})
    for (const auto& r : br->rows) {
      ++rows;
      if (r.verdict == Verdict::Pass && r.lower_certified) ++pass;
    }
  for (const auto& r : exact.rows) exact_rows += r.per_n.exact ? 1 : 0;
  bool mc_rows = true;
  for (const auto& r : mc.rows) mc_rows = mc_rows && !r.per_n.exact && r.per_n.replications == 100000;

  std::vector<std::size_t> ns;
  for (std::size_t n = 1; n <= 4096; n *= 2) ns.push_back(n);
  const auto demo = fixed_point_demo(p, ns);
  bool decreasing = true;
  for (std::size_t i = 2; i + 1 < demo.rows.size(); ++i)
    decreasing = decreasing && demo.rows[i + 1].closed_form < demo.rows[i].closed_form;
  bool agree = true;
  for (const auto& r : demo.rows) agree = agree && std::abs(r.closed_form - r.enumerated) <= 1e-12 * r.closed_form;
  const double last = demo.rows.back().closed_form;
  const double lower = exact.rows.front().lower;
  const std::size_t exit_n = demo.exit_index(lower);
  const bool exits = last < 1e-2 && exit_n > 0 &&
                     std::pow(2.0 * (1.0 - std::pow(0.5, exit_n)), p) / static_cast<double>(exit_n) < lower;
  return {pass == rows && exact_rows == 6 && mc_rows && decreasing && agree && exits,
          std::to_string(pass) + "/" + std::to_string(rows) + " rows inside [" + fmt(exact.rows.front().lower) +
              ", " + fmt(exact.rows.front().upper) + "]; fixed-point demo (1/n)E|S_n|^2 = " + fmt(last) +
              " at n=4096, below the lower bracket from n=" + std::to_string(exit_n)};
}

// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string strip_wall_time(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line))
    if (line.find("\"wall_time_seconds\"") == std::string::npos) out += line + '\n';
  return out;
}

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "momsand_acceptance";
  std::filesystem::create_directories(dir);
  const auto config = dir / "verify.json";
  {
    std::ofstream out(config);
    out << R"({"command":"verify","dist":"uniform:lo=0.2,hi=1.8","p":1.5,"n":8,"dim":2,"reps":20000,"seed":5,)"
        << R"("coeffs":"random:3,1,9"})";
  }
  const std::vector<std::string> runs{
      "verify --config " + config.string(),
      "verify --dist twopoint:a=0.5,b=1.5,pa=0.5 --p 0.5 --n 6 --coeffs random:4,1,2",
      "certify --dist uniform:lo=0.1,hi=2 --p 2.5",
      "moments --dist riesz --q 0.5,1,2,3",
      "riesz --seq 4,16,64 --p 3 --draws 3 --reps 20000",
      "perpetuity --dist twopoint:a=0.5,b=1.5,pa=0.5 --b-dist twopoint:a=-1,b=2,pa=0.5 --p 2 --n 3,20 "
      "--reps 20000",
      "perpetuity --fixed-point-demo --p 2",
      "counterexample --n 50 --p 4 --reps 50000",
  };
  std::size_t identical = 0, ok_exit = 0;
  std::string first_failure;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::string outputs[2];
    int codes[2] = {0, 0};
    const char* threads[2] = {"1", "4"};
    for (int t = 0; t < 2; ++t) {
      const auto file = dir / ("run" + std::to_string(i) + "_" + threads[t] + ".json");
      const std::string cmd = std::string("MOMSAND_THREADS=") + threads[t] + " " + MOMSAND_CLI + " " + runs[i] +
                              " > " + file.string() + " 2>/dev/null";
      codes[t] = std::system(cmd.c_str());
      outputs[t] = strip_wall_time(read_file(file));
    }
    if (codes[0] == 0 && codes[1] == 0) ++ok_exit;
    if (outputs[0] == outputs[1] && !outputs[0].empty()) {
      ++identical;
    } else if (first_failure.empty()) {
      first_failure = runs[i];
    }
  }
  std::filesystem::remove_all(dir);
  Outcome o;
  o.pass = identical == runs.size() && ok_exit == runs.size();
  o.detail = std::to_string(identical) + "/" + std::to_string(runs.size()) +
             " CLI runs byte-identical under 1 and 4 threads, " + std::to_string(ok_exit) + " exited 0";
  if (!first_failure.empty()) o.detail += "; first mismatch: " + first_failure;
  return o;
}

}  // namespace

int main() {
  TailTally tails;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"sandwich small p (exact enumeration)", [&] { return sandwich_family({0.3, 0.5, 1.0}, 60.0, tails); }},
      {"sandwich large p (exact enumeration)", [&] { return sandwich_family({1.5, 2.0, 2.5}, 120.0, tails); }},
      {"p=1 equality for nonnegative laws and coefficients", p_one_equality},
      {"sign products grow like n^{p/2}", khintchine},
      {"Riesz product integrals", riesz_exactness},
      {"torus against independent model", corollary},
      {"constant formulas and k witness", constant_formulas},
      {"perpetuity bracket and fixed-point demo", goldie},
      {"tail bounds on certified two-point laws",
       [&] {
         return Outcome{tails.checked > 0 && tails.violations == 0,
                        std::to_string(tails.checked) + " checks, " + std::to_string(tails.violations) +
                            " violations"};
       }},
      {"CLI determinism across thread counts", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
