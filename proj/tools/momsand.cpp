// momsand: moment sandwich experiments from the command line.
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "momsand/commands.hpp"

namespace {

using namespace momsand;

struct Flags {
  std::string dist, p, n, dim, norm, coeffs, reps, seed, grid_a, grid_q, out, config, q, seq, term, draws,
      b_dist, coupling, map, csv;
  bool fixed_point_demo = false;
  std::map<std::string, CLI::Option*> opts;
};

void add_flags(CLI::App* sub, Flags& f) {
  auto add = [&](const std::string& name, std::string& target, const std::string& help) {
    f.opts[name] = sub->add_option(name, target, help);
  };
  add("--dist", f.dist, "law of X, e.g. twopoint:a=0.5,b=1.5,pa=0.5");
  add("--p", f.p, "moment order");
  add("--n", f.n, "number of factors (comma list for perpetuity)");
  add("--dim", f.dim, "dimension of random coefficient vectors");
  add("--norm", f.norm, "l1, l2 or sup");
  add("--coeffs", f.coeffs, "\"1,-1,1\", \"1,0;0,1\" or random:count,scale,seed");
  add("--reps", f.reps, "Monte Carlo replications");
  add("--seed", f.seed, "random seed");
  add("--grid-a", f.grid_a, "comma list of A values");
  add("--grid-q", f.grid_q, "comma list of q values");
  add("--out", f.out, "write the JSON report here as well");
  add("--config", f.config, "JSON config; flags override it");
  add("--q", f.q, "comma list of moment orders");
  add("--seq", f.seq, "comma list of frequencies");
  add("--term", f.term, "single Riesz product index");
  add("--draws", f.draws, "random coefficient draws");
  add("--b-dist", f.b_dist, "law of B components, ';'-separated");
  add("--coupling", f.coupling, "independent or comonotone");
  add("--map", f.map, "comonotone map i,s;i,s[:power]");
  add("--csv", f.csv, "write per-replication samples here");
  f.opts["--fixed-point-demo"] = sub->add_flag("--fixed-point-demo", f.fixed_point_demo, "degenerate pair demo");
}

std::vector<std::size_t> size_list(const std::string& s, std::string_view what) {
  std::vector<std::size_t> out;
  for (double v : parse_number_list(s, what)) {
    require(v >= 0 && v == std::floor(v), ErrorCode::ParseError, "expected integers for " + std::string(what));
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

ExperimentConfig resolve(const std::string& command, const Flags& f) {
  ExperimentConfig cfg;
  if (f.opts.at("--config")->count() > 0) {
    std::ifstream in(f.config);
    require(in.good(), ErrorCode::InvalidArgument, "cannot read config '" + f.config + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = parse_config(ss.str());
  }
  cfg.command = command;
  auto given = [&](const char* name) { return f.opts.at(name)->count() > 0; };
  if (given("--dist")) cfg.dist = f.dist;
  if (given("--p")) cfg.p = detail::parse_double(f.p, "p");
  if (given("--n")) cfg.n = size_list(f.n, "n");
  if (given("--dim")) cfg.dim = parse_count(f.dim, "dim");
  if (given("--norm")) cfg.norm = f.norm;
  if (given("--coeffs")) cfg.coeffs = f.coeffs;
  if (given("--reps")) cfg.reps = parse_count(f.reps, "reps");
  if (given("--seed")) cfg.seed = parse_count(f.seed, "seed");
  if (given("--grid-a")) cfg.grid_a = parse_number_list(f.grid_a, "grid-a");
  if (given("--grid-q")) cfg.grid_q = parse_number_list(f.grid_q, "grid-q");
  if (given("--out")) cfg.out = f.out;
  if (given("--q")) cfg.q = parse_number_list(f.q, "q");
  if (given("--seq")) {
    cfg.seq.clear();
    for (auto v : size_list(f.seq, "seq")) cfg.seq.push_back(v);
  }
  if (given("--term")) cfg.term = parse_count(f.term, "term");
  if (given("--draws")) cfg.draws = parse_count(f.draws, "draws");
  if (given("--b-dist")) cfg.b_dist = f.b_dist;
  if (given("--coupling")) cfg.coupling = f.coupling;
  if (given("--map")) cfg.map = f.map;
  if (given("--csv")) cfg.csv = f.csv;
  if (given("--fixed-point-demo")) cfg.fixed_point_demo = f.fixed_point_demo;
  require(!cfg.n.empty(), ErrorCode::InvalidArgument, "--n must not be empty");
  require(cfg.dim >= 1, ErrorCode::InvalidArgument, "--dim must be >= 1");
  parse_norm(cfg.norm);
  return cfg;
}

void emit(const json& report, const std::string& out_path) {
  const std::string text = report.dump(2);
  std::cout << text << '\n';
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out.good()) throw Error(ErrorCode::InvalidArgument, "cannot write '" + out_path + "'");
    out << text << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-sided moment bounds for sums of vectors weighted by random products"};
  app.require_subcommand(1);
  std::map<std::string, Flags> per_command;
  for (const char* name : {"moments", "certify", "verify", "riesz", "perpetuity", "counterexample"}) {
    const std::map<std::string, std::string> help{
        {"moments", "absolute moments E|X|^q"},
        {"certify", "fit hypotheses and compute the constants"},
        {"verify", "check the two-sided bound on coefficient sets"},
        {"riesz", "L_p norms of Riesz product combinations on the torus"},
        {"perpetuity", "bracket (1/n) E||S_n||^p for a random difference equation"},
        {"counterexample", "sign products, where no lower/upper constants exist"}};
    add_flags(app.add_subcommand(name, help.at(name)), per_command[name]);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  const auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  try {
    cfg = resolve(command, per_command.at(command));
    const auto result = run_command(cfg);
    json report = make_report(cfg, result);
    report["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit(report, cfg.out);
    return result.exit_code;
  } catch (const Error& e) {
    const int code = exit_code_for(e);
    json report = {{"tool", {{"name", "momsand"}, {"version", kToolVersion}}},
                   {"command", command},
                   {"config", to_json(cfg)},
                   {"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}},
                   {"exit_code", code}};
    std::cerr << "momsand: " << e.what() << '\n';
    try {
      emit(report, cfg.out);
    } catch (const Error&) {
    }
    return code;
  } catch (const std::exception& e) {
    std::cerr << "momsand: " << e.what() << '\n';
    return kExitUsage;
  }
}
