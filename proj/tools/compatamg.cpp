// compatamg: verify-pairs | figure1 | tables | converge
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "compatamg/commands.hpp"

namespace {

using namespace compatamg;

struct Flags {
  std::string config;
  std::string problem;
  Index n = 0;
  Index nx = 0;
  Index ny = 0;
  double epsilon = 0;
  std::uint64_t seed = 0;
  std::string split;
  double cfrac = 0;
  std::vector<std::string> norms;
  std::vector<std::string> pairs;
  double tol = 0;
  std::string output;
  std::string format;
  std::string pre;
  std::string post;
  int iters = 0;
  bool expect_orthogonal = false;
};

void add_common(CLI::App& sub, Flags& f) {
  sub.add_option("--config", f.config, "JSON experiment config (flags override it)");
  sub.add_option("--problem", f.problem, "advection1d|advection2d|advdiff1d|laplacian1d|random");
  sub.add_option("--n", f.n, "problem size (1D and random)");
  sub.add_option("--nx", f.nx, "grid width (advection2d)");
  sub.add_option("--ny", f.ny, "grid height (advection2d)");
  sub.add_option("--epsilon", f.epsilon, "diffusion coefficient (advdiff1d)");
  sub.add_option("--seed", f.seed, "problem seed");
  sub.add_option("--split", f.split, "alternate|firsthalf|random");
  sub.add_option("--cfrac", f.cfrac, "C-point fraction for random splitting");
  sub.add_option("--norm", f.norms, "norm tag or custom:<file> (repeatable)");
  sub.add_option("--pair", f.pairs, "pair recipe (repeatable)");
  sub.add_option("--tol", f.tol, "tolerance for ||Pi||_M = 1 (default 1e-8)");
  sub.add_option("--output", f.output, "report path (default stdout)");
  sub.add_option("--format", f.format, "json|csv");
  sub.add_option("--pre", f.pre, "pre-relaxation: none|jacobi[:w[:s]]|fjacobi[:w[:s]]|fexact[:s]");
  sub.add_option("--post", f.post, "post-relaxation");
  sub.add_option("--iters", f.iters, "two-grid iterations (converge)");
  sub.add_flag("--expect-orthogonal", f.expect_orthogonal, "require ||Pi||_M = 1 in every norm");
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot read '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

ExperimentConfig build_config(const CLI::App& sub, const Flags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) cfg = config_from_json(read_file(f.config));
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  if (given("--problem")) {
    const auto kind = parse_problem_kind(f.problem);
    if (!kind) throw ConfigError("problem", "unknown problem '" + f.problem + "'");
    cfg.problem.kind = *kind;
  }
  if (given("--n")) cfg.problem.n = f.n;
  if (given("--nx")) cfg.problem.nx = f.nx;
  if (given("--ny")) cfg.problem.ny = f.ny;
  if (given("--epsilon")) cfg.problem.epsilon = f.epsilon;
  if (given("--seed")) cfg.problem.seed = f.seed;
  if (given("--split")) {
    const auto policy = parse_split_policy(f.split);
    if (!policy) throw ConfigError("split", "unknown policy '" + f.split + "'");
    cfg.split.policy = *policy;
  }
  if (given("--cfrac")) cfg.split.cfrac = f.cfrac;
  if (given("--seed")) cfg.split.seed = f.seed;
  if (given("--norm")) {
    cfg.norms.clear();
    for (const auto& n : f.norms) cfg.norms.push_back(parse_named_norm(n, "norm"));
  }
  if (given("--pair")) {
    cfg.pairs.clear();
    for (const auto& p : f.pairs) cfg.pairs.push_back(parse_pair_recipe(p, "pair"));
  }
  if (given("--tol")) cfg.tol = f.tol;
  if (given("--output")) cfg.output = f.output;
  if (given("--format")) {
    if (f.format == "json") {
      cfg.format = ReportFormat::Json;
    } else if (f.format == "csv") {
      cfg.format = ReportFormat::Csv;
    } else {
      throw ConfigError("format", "expected json or csv");
    }
  }
  for (const auto& [flag, text, slot] :
       {std::tuple{"--pre", &f.pre, &cfg.pre}, std::tuple{"--post", &f.post, &cfg.post}}) {
    if (!given(flag)) continue;
    const auto r = parse_relax(*text);
    if (!r) throw ConfigError(flag + 2, "bad relaxation '" + *text + "'");
    *slot = *r;
  }
  if (given("--iters")) cfg.iters = f.iters;
  if (given("--expect-orthogonal")) cfg.expect_orthogonal = true;
  validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compatible transfer operators and M-orthogonal coarse-grid corrections"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    CommandResult (*run)(const ExperimentConfig&);
  };
  const Command commands[] = {
      {"verify-pairs", "check that configured pairs give ||Pi||_M = 1", cmd_verify_pairs},
      {"figure1", "evaluate the ten I-, A- and A*A-orthogonal ideal pairs", cmd_figure1},
      {"tables", "verify every computable cell of the ideal-pair catalog", cmd_tables},
      {"converge", "two-grid residual histories and convergence factors", cmd_converge},
  };
  Flags flags;
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(*sub, flags);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConstructionFailed;
  }

  for (std::size_t k = 0; k < subs.size(); ++k) {
    if (!subs[k]->parsed()) continue;
    try {
      const ExperimentConfig cfg = build_config(*subs[k], flags);
      const CommandResult result = commands[k].run(cfg);
      write_report(cfg, result);
      return result.exit_code;
    } catch (const ConfigError& e) {
      std::cerr << "compatamg: config error: " << e.what() << '\n';
      return kExitConstructionFailed;
    } catch (const Error& e) {
      std::cerr << "compatamg: " << e.what() << '\n';
      return kExitConstructionFailed;
    }
  }
  return kExitConstructionFailed;
}
