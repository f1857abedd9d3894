#include "compatamg/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "compatamg/matrix_io.hpp"
#include "compatamg/parallel.hpp"
#include "compatamg/projection.hpp"

namespace compatamg {

using ojson = nlohmann::ordered_json;

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(sep);
    out.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

std::uint64_t parse_seed(std::string_view s, std::string_view field) {
  try {
    std::size_t used = 0;
    const std::string str(s);
    const auto v = std::stoull(str, &used);
    if (used != str.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string(field), "bad seed '" + std::string(s) + "'");
  }
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

Matrix random_block(Index rows, Index cols, std::mt19937_64& rng) {
  Matrix x(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) x(i, j) = 2.0 * unit_double(rng()) - 1.0;
  return x;
}

ojson checks_json(const OrthogonalityChecks& c) {
  return ojson{{"m_pi_symmetric", c.m_pi_symmetric},
               {"adjoint_fixed_point", c.adjoint_fixed_point},
               {"range_match", c.range_match},
               {"bilinear_vanishes", c.bilinear_vanishes},
               {"all", c.all()},
               {"consistent", c.consistent()}};
}

std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

ojson config_json(const ExperimentConfig& cfg) {
  ojson j;
  j["problem"] = ojson::parse(problem_to_json(cfg.problem));
  j["split"] = {{"policy", to_string(cfg.split.policy)}};
  if (cfg.split.policy == SplitPolicy::Random) {
    j["split"]["seed"] = cfg.split.seed;
    j["split"]["cfrac"] = cfg.split.cfrac;
  }
  ojson norms = ojson::array();
  for (const auto& n : cfg.norms) norms.push_back(n.name);
  j["norms"] = norms;
  ojson pairs = ojson::array();
  for (const auto& p : cfg.pairs) pairs.push_back(p.text);
  j["pairs"] = pairs;
  j["tol"] = cfg.tol;
  return j;
}

ojson report_header(std::string_view command, const ExperimentConfig& cfg) {
  ojson j;
  j["command"] = command;
  j["timestamp"] = timestamp_utc();
  j["config"] = config_json(cfg);
  return j;
}

struct Problem {
  Matrix a;
  CFPartition part;
};

Problem make_problem(const ExperimentConfig& cfg) {
  Matrix a = generate(cfg.problem);
  CFPartition part = default_splitting(a.rows(), cfg.split);
  return {std::move(a), std::move(part)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Parsing

NamedNorm parse_named_norm(std::string_view text, std::string_view field) {
  if (text.starts_with("custom:")) {
    const std::string path(text.substr(7));
    if (path.empty()) throw ConfigError(std::string(field), "custom norm needs a matrix file");
    return NamedNorm{std::string(text), NormSpec::custom_matrix(load_matrix(path))};
  }
  const auto tag = parse_norm_tag(text);
  if (!tag || *tag == NormTag::Custom) {
    throw ConfigError(std::string(field), "unknown norm '" + std::string(text) + "'");
  }
  return NamedNorm{std::string(to_string(*tag)), NormSpec::of(*tag)};
}

std::optional<NormTag> PairRecipe::native_norm() const {
  switch (kind) {
    case RecipeKind::RedList: {
      constexpr NormTag tags[] = {NormTag::Identity, NormTag::Asym, NormTag::AstarA,
                                  NormTag::AstarAsymInvA};
      return tags[item - 1];
    }
    case RecipeKind::Cell: return norm;
    case RecipeKind::WFromZ:
    case RecipeKind::ZFromW: return norm;
    default: return std::nullopt;
  }
}

PairRecipe parse_pair_recipe(std::string_view text, std::string_view field) {
  const std::string fld(field);
  auto fail = [&](const std::string& why) -> PairRecipe {
    throw ConfigError(fld, why + " in recipe '" + std::string(text) + "'");
  };
  PairRecipe r;
  r.text = std::string(text);
  const auto parts = split(text, ':');
  const auto head = parts[0];
  auto q_of = [&](std::string_view s) {
    const auto q = parse_q_tag(s);
    if (!q || *q == QTag::Custom) fail("unknown Q '" + std::string(s) + "'");
    return *q;
  };
  auto compat_norm = [&](std::string_view s) {
    if (s == "identity") return NormTag::Identity;
    if (s == "astara") return NormTag::AstarA;
    fail("closed forms exist only for identity and astara");
    return NormTag::Identity;
  };

  if (head == "red") {
    if (parts.size() != 2) return fail("expected red:<1-4>");
    r.kind = RecipeKind::RedList;
    if (parts[1].size() != 1 || parts[1][0] < '1' || parts[1][0] > '4') return fail("item must be 1-4");
    r.item = parts[1][0] - '0';
  } else if (head == "cell") {
    if (parts.size() != 4) return fail("expected cell:<table>:<norm>:<q>");
    r.kind = RecipeKind::Cell;
    if (parts[1] != "1" && parts[1] != "2") return fail("table must be 1 or 2");
    r.table = parts[1][0] - '0';
    const auto tag = parse_norm_tag(parts[2]);
    if (!tag || *tag == NormTag::Custom || *tag == NormTag::SqrtAstarA) return fail("norm not in catalog");
    r.norm = *tag;
    r.q = q_of(parts[3]);
    bool found = false;
    for (const auto& c : catalog_cells()) {
      found |= c.table == r.table && c.norm == r.norm && c.q == r.q;
    }
    if (!found) return fail("no such catalog cell");
  } else if (head == "ideal") {
    if (parts.size() != 2) return fail("expected ideal:<q_R>,<q_P>");
    const auto qs = split(parts[1], ',');
    if (qs.size() != 2) return fail("expected ideal:<q_R>,<q_P>");
    r.kind = RecipeKind::Ideal;
    r.r_q = q_of(qs[0]);
    r.p_q = q_of(qs[1]);
  } else if (head == "random") {
    if (parts.size() != 2) return fail("expected random:<seed>");
    r.kind = RecipeKind::Random;
    r.seed = parse_seed(parts[1], field);
  } else if (head == "files") {
    if (parts.size() != 2) return fail("expected files:<Z>,<W>");
    const auto paths = split(parts[1], ',');
    if (paths.size() != 2 || paths[0].empty() || paths[1].empty()) return fail("expected files:<Z>,<W>");
    r.kind = RecipeKind::Files;
    r.z_path = std::string(paths[0]);
    r.w_path = std::string(paths[1]);
  } else if (head == "wfromz" || head == "zfromw") {
    if (parts.size() != 3) return fail("expected " + std::string(head) + ":<norm>:<seed>");
    r.kind = head == "wfromz" ? RecipeKind::WFromZ : RecipeKind::ZFromW;
    r.norm = compat_norm(parts[1]);
    r.seed = parse_seed(parts[2], field);
  } else if (head == "basis") {
    if (parts.size() != 2 || (parts[1] != "ainvstar" && parts[1] != "ainv")) {
      return fail("expected basis:<ainvstar|ainv>");
    }
    r.kind = RecipeKind::ChangeOfBasis;
    r.basis = parts[1] == "ainv" ? BasisTarget::Ainv : BasisTarget::AinvStar;
  } else {
    return fail("unknown recipe kind");
  }
  return r;
}

TransferPair build_pair(const PairRecipe& recipe, const Matrix& a, const CFPartition& part) {
  const PartitionedMatrix ap(a, part);
  auto explicit_ideal = [&](QTag rq, QTag pq) {
    const Matrix r = ideal_r(PartitionedMatrix(realize_q(QChoice::of(rq), a), part));
    const Matrix p = ideal_p(PartitionedMatrix(realize_q(QChoice::of(pq), a), part));
    return TransferPair{r, p, part, std::nullopt};
  };
  const CompatNorm cn = recipe.norm == NormTag::AstarA ? CompatNorm::AstarA : CompatNorm::Identity;
  switch (recipe.kind) {
    case RecipeKind::RedList:
      switch (recipe.item) {
        case 1: return explicit_ideal(QTag::Aop, QTag::Identity);
        case 2: return explicit_ideal(QTag::Aop, QTag::Asym);
        case 3: return explicit_ideal(QTag::Identity, QTag::Aop);
        default: return explicit_ideal(QTag::Asym, QTag::Aop);
      }
    case RecipeKind::Cell:
      return ideal_pair(a, part, NormSpec::of(recipe.norm),
                        recipe.table == 1 ? Anchor::PfromQ : Anchor::RfromQ,
                        QChoice::of(recipe.q));
    case RecipeKind::Ideal:
      return explicit_ideal(recipe.r_q, recipe.p_q);
    case RecipeKind::Random: {
      std::mt19937_64 rng(recipe.seed);
      const Matrix z = random_block(part.num_f(), part.num_c(), rng);
      const Matrix w = random_block(part.num_f(), part.num_c(), rng);
      return TransferPair::from_blocks(z, w, part);
    }
    case RecipeKind::Files: {
      const Matrix z = load_matrix(recipe.z_path);
      const Matrix w = load_matrix(recipe.w_path);
      if (z.rows() != part.num_f() || z.cols() != part.num_c() || w.rows() != part.num_f() ||
          w.cols() != part.num_c()) {
        throw ConfigError("pair", "Z and W files must be n_f x n_c (" + std::to_string(part.num_f()) +
                                      " x " + std::to_string(part.num_c()) + ")");
      }
      return TransferPair::from_blocks(z, w, part);
    }
    case RecipeKind::WFromZ: {
      std::mt19937_64 rng(recipe.seed);
      const Matrix z = random_block(part.num_f(), part.num_c(), rng);
      return TransferPair::from_blocks(z, compatible_w_from_z(ap, z, cn), part);
    }
    case RecipeKind::ZFromW: {
      std::mt19937_64 rng(recipe.seed);
      const Matrix w = random_block(part.num_f(), part.num_c(), rng);
      return TransferPair::from_blocks(compatible_z_from_w(ap, w, cn), w, part);
    }
    case RecipeKind::ChangeOfBasis:
      return change_of_basis_pair(a, part, recipe.basis);
  }
  throw Error("unreachable recipe kind");
}

ExperimentConfig config_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  ExperimentConfig cfg;
  if (j.contains("problem")) {
    if (!j["problem"].is_object()) throw ConfigError("problem", "expected an object");
    cfg.problem = problem_from_json(j["problem"].dump());
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    if (!s.is_object()) throw ConfigError("split", "expected an object");
    if (s.contains("policy")) {
      if (!s["policy"].is_string()) throw ConfigError("split.policy", "not a string");
      const auto p = parse_split_policy(s["policy"].get<std::string>());
      if (!p) throw ConfigError("split.policy", "unknown policy");
      cfg.split.policy = *p;
    }
    if (s.contains("seed")) {
      if (!s["seed"].is_number_integer()) throw ConfigError("split.seed", "not an integer");
      cfg.split.seed = s["seed"].get<std::uint64_t>();
    }
    if (s.contains("cfrac")) {
      if (!s["cfrac"].is_number()) throw ConfigError("split.cfrac", "not a number");
      cfg.split.cfrac = s["cfrac"].get<double>();
    }
  }
  auto string_list = [&](const char* key) {
    std::vector<std::string> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array()) throw ConfigError(key, "expected an array of strings");
    for (std::size_t i = 0; i < j[key].size(); ++i) {
      const auto& v = j[key][i];
      if (!v.is_string()) throw ConfigError(std::string(key) + "[" + std::to_string(i) + "]", "not a string");
      out.push_back(v.get<std::string>());
    }
    return out;
  };
  const auto norms = string_list("norms");
  for (std::size_t i = 0; i < norms.size(); ++i) {
    cfg.norms.push_back(parse_named_norm(norms[i], "norms[" + std::to_string(i) + "]"));
  }
  const auto pairs = string_list("pairs");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    cfg.pairs.push_back(parse_pair_recipe(pairs[i], "pairs[" + std::to_string(i) + "]"));
  }
  for (const char* key : {"pre", "post"}) {
    if (!j.contains(key)) continue;
    if (!j[key].is_string()) throw ConfigError(key, "not a string");
    const auto r = parse_relax(j[key].get<std::string>());
    if (!r) throw ConfigError(key, "bad relaxation '" + j[key].get<std::string>() + "'");
    (std::string_view(key) == "pre" ? cfg.pre : cfg.post) = *r;
  }
  if (j.contains("iters")) {
    if (!j["iters"].is_number_integer()) throw ConfigError("iters", "not an integer");
    cfg.iters = j["iters"].get<int>();
  }
  if (j.contains("tol")) {
    if (!j["tol"].is_number()) throw ConfigError("tol", "not a number");
    cfg.tol = j["tol"].get<double>();
  }
  if (j.contains("expect_orthogonal")) {
    if (!j["expect_orthogonal"].is_boolean()) throw ConfigError("expect_orthogonal", "not a boolean");
    cfg.expect_orthogonal = j["expect_orthogonal"].get<bool>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) throw ConfigError("seed", "not an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("output", "not a string");
    cfg.output = j["output"].get<std::string>();
  }
  if (j.contains("format")) {
    const auto f = j["format"].is_string() ? j["format"].get<std::string>() : "";
    if (f == "json") {
      cfg.format = ReportFormat::Json;
    } else if (f == "csv") {
      cfg.format = ReportFormat::Csv;
    } else {
      throw ConfigError("format", "expected 'json' or 'csv'");
    }
  }
  validate(cfg);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.problem.kind == ProblemKind::Advection2D) {
    if (cfg.problem.nx < 2 || cfg.problem.ny < 2) throw ConfigError("problem.nx", "grid sizes must be >= 2");
  } else if (cfg.problem.n < 2) {
    throw ConfigError("problem.n", "size must be >= 2");
  }
  if (cfg.problem.epsilon < 0) throw ConfigError("problem.epsilon", "must be >= 0");
  if (!(cfg.split.cfrac >= 0 && cfg.split.cfrac <= 1)) throw ConfigError("split.cfrac", "must lie in [0, 1]");
  if (!(cfg.tol > 0)) throw ConfigError("tol", "must be positive");
  if (cfg.iters < 0) throw ConfigError("iters", "must be >= 0");
  validate(cfg.pre);
  validate(cfg.post);
  for (const auto& p : cfg.pairs) {
    if (p.kind != RecipeKind::Files) continue;
    for (const auto* path : {&p.z_path, &p.w_path}) {
      if (!std::filesystem::exists(*path)) throw ConfigError("pair", "file not found: " + *path);
    }
  }
}

// ---------------------------------------------------------------------------
// verify-pairs

namespace {

struct NormEvaluation {
  std::string norm;
  bool expected = false;
  bool skipped = false;
  std::string reason;
  std::optional<PairEvaluation> eval;
  bool pass = true;
};

struct PairOutcome {
  std::string recipe;
  bool constructed = false;
  std::string error;
  std::vector<NormEvaluation> evaluations;
};

}  // namespace

CommandResult cmd_verify_pairs(const ExperimentConfig& cfg) {
  const Problem prob = make_problem(cfg);
  std::vector<PairRecipe> recipes = cfg.pairs;
  if (recipes.empty()) {
    for (int i = 1; i <= 4; ++i) recipes.push_back(parse_pair_recipe("red:" + std::to_string(i)));
  }

  std::vector<PairOutcome> outcomes(recipes.size());
  parallel_for(recipes.size(), [&](std::size_t k) {
    const PairRecipe& rec = recipes[k];
    PairOutcome& out = outcomes[k];
    out.recipe = rec.text;
    std::optional<TransferPair> pair;
    try {
      pair = build_pair(rec, prob.a, prob.part);
      validate(*pair);
      out.constructed = true;
    } catch (const Error& e) {
      out.error = e.what();
      return;
    }

    std::vector<NamedNorm> norms;
    if (const auto native = rec.native_norm()) norms.push_back(NamedNorm{std::string(to_string(*native)), NormSpec::of(*native)});
    for (const auto& n : cfg.norms) {
      bool dup = false;
      for (const auto& m : norms) dup |= m.name == n.name;
      if (!dup) norms.push_back(n);
    }
    if (norms.empty()) norms.push_back(NamedNorm{"identity", NormSpec::of(NormTag::Identity)});

    for (const auto& nn : norms) {
      NormEvaluation ne;
      ne.norm = nn.name;
      const bool native = rec.native_norm() && nn.name == to_string(*rec.native_norm());
      ne.expected = native || cfg.expect_orthogonal;
      try {
        const Matrix m = realize_norm(nn.spec, prob.a);
        ne.eval = evaluate_pair(prob.a, m, *pair, cfg.tol);
        ne.pass = !ne.expected || std::abs(ne.eval->report.m_norm - 1.0) <= cfg.tol;
      } catch (const SingularMatrixError& e) {
        // Singular coarse operator or norm: the pair cannot be assessed.
        out.constructed = false;
        out.error = e.what();
        ne.skipped = true;
        ne.reason = e.what();
        ne.pass = false;
      } catch (const Error& e) {
        ne.skipped = true;
        ne.reason = e.what();
        if (native) {
          out.constructed = false;
          out.error = e.what();
          ne.pass = false;
        }
      }
      out.evaluations.push_back(std::move(ne));
    }
  });

  int exit_code = kExitOk;
  for (const auto& o : outcomes) {
    if (!o.constructed) {
      exit_code = kExitConstructionFailed;
      break;
    }
    for (const auto& e : o.evaluations) {
      if (!e.pass) exit_code = kExitVerificationFailed;
    }
  }

  CommandResult res;
  res.exit_code = exit_code;
  if (cfg.format == ReportFormat::Csv) {
    std::ostringstream os;
    os << "pair,norm,expected_orthogonal,skipped,pi_norm,nonorth_sup,min_angle,compat_eq,"
          "m_pi_symmetric,adjoint_fixed_point,range_match,bilinear_vanishes,pass\n";
    for (const auto& o : outcomes) {
      if (!o.constructed && o.evaluations.empty()) {
        os << csv_field(o.recipe) << ",,,1,,,,,,,,,0\n";
        continue;
      }
      for (const auto& e : o.evaluations) {
        os << csv_field(o.recipe) << ',' << csv_field(e.norm) << ',' << e.expected << ',' << e.skipped << ',';
        if (e.eval) {
          const auto& ev = *e.eval;
          os << csv_number(ev.report.m_norm) << ',' << csv_number(ev.report.nonorth_sup) << ','
             << csv_number(ev.report.min_angle) << ',' << ev.compat_eq << ','
             << ev.checks.m_pi_symmetric << ',' << ev.checks.adjoint_fixed_point << ','
             << ev.checks.range_match << ',' << ev.checks.bilinear_vanishes << ',';
        } else {
          os << ",,,,,,,,";
        }
        os << e.pass << '\n';
      }
    }
    res.report = os.str();
    return res;
  }

  ojson j = report_header("verify-pairs", cfg);
  ojson results = ojson::array();
  for (const auto& o : outcomes) {
    ojson r;
    r["pair"] = o.recipe;
    r["constructed"] = o.constructed;
    if (!o.error.empty()) r["error"] = o.error;
    ojson evs = ojson::array();
    for (const auto& e : o.evaluations) {
      ojson x;
      x["norm"] = e.norm;
      x["expected_orthogonal"] = e.expected;
      x["skipped"] = e.skipped;
      if (e.skipped) x["reason"] = e.reason;
      if (e.eval) {
        const auto& ev = *e.eval;
        x["pi_norm"] = ev.report.m_norm;
        x["complement_norm"] = ev.complement_m_norm;
        x["nonorth_sup"] = ev.report.nonorth_sup;
        x["min_angle"] = ev.report.min_angle;
        x["symmetry_residual"] = ev.report.symmetry_residual;
        x["idempotence_residual"] = ev.idempotence_residual;
        x["compat_eq"] = ev.compat_eq;
        x["orthogonality_checks"] = checks_json(ev.checks);
      }
      x["pass"] = e.pass;
      evs.push_back(std::move(x));
    }
    r["evaluations"] = std::move(evs);
    results.push_back(std::move(r));
  }
  j["results"] = std::move(results);
  j["exit_code"] = exit_code;
  res.report = j.dump(2) + "\n";
  return res;
}

// ---------------------------------------------------------------------------
// figure1

namespace {

struct Edge {
  QTag r;
  QTag p;
  const char* style;
  NormTag norm;
};

constexpr Edge kFigureEdges[] = {
    {QTag::Identity, QTag::AinvStar, "solid", NormTag::Identity},
    {QTag::Aop, QTag::Identity, "solid", NormTag::Identity},
    {QTag::AAstar, QTag::Aop, "solid", NormTag::Identity},
    {QTag::AinvStar, QTag::AinvStar, "dotted", NormTag::A},
    {QTag::Identity, QTag::Identity, "dotted", NormTag::A},
    {QTag::Aop, QTag::Aop, "dotted", NormTag::A},
    {QTag::AAstar, QTag::AstarA, "dotted", NormTag::A},
    {QTag::AinvStar, QTag::Identity, "dashed", NormTag::AstarA},
    {QTag::Identity, QTag::Aop, "dashed", NormTag::AstarA},
    {QTag::Aop, QTag::AstarA, "dashed", NormTag::AstarA},
};

struct EdgeOutcome {
  bool skipped = false;
  std::string reason;
  std::optional<PairEvaluation> eval;
  bool pass = false;
};

}  // namespace

CommandResult cmd_figure1(const ExperimentConfig& cfg) {
  const Problem prob = make_problem(cfg);
  constexpr std::size_t kEdges = std::size(kFigureEdges);
  std::vector<EdgeOutcome> outcomes(kEdges);
  parallel_for(kEdges, [&](std::size_t k) {
    const Edge& e = kFigureEdges[k];
    EdgeOutcome& out = outcomes[k];
    try {
      const Matrix m = realize_norm(NormSpec::of(e.norm), prob.a);
      const Matrix r = ideal_r(PartitionedMatrix(realize_q(QChoice::of(e.r), prob.a), prob.part));
      const Matrix p = ideal_p(PartitionedMatrix(realize_q(QChoice::of(e.p), prob.a), prob.part));
      out.eval = evaluate_pair(prob.a, m, TransferPair{r, p, prob.part, std::nullopt}, cfg.tol);
      out.pass = std::abs(out.eval->report.m_norm - 1.0) <= cfg.tol && out.eval->compat_eq;
    } catch (const Error& err) {
      out.skipped = true;
      out.reason = err.what();
    }
  });

  int exit_code = kExitOk;
  for (const auto& o : outcomes) {
    if (!o.skipped && !o.pass) exit_code = kExitVerificationFailed;
  }

  CommandResult res;
  res.exit_code = exit_code;
  auto edge_name = [](const Edge& e) {
    return "R(" + std::string(q_expression(e.r)) + ")-P(" + std::string(q_expression(e.p)) + ")";
  };
  if (cfg.format == ReportFormat::Csv) {
    std::ostringstream os;
    os << "edge,style,norm,skipped,pi_norm,nonorth_sup,compat_eq,pass\n";
    for (std::size_t k = 0; k < kEdges; ++k) {
      const auto& e = kFigureEdges[k];
      const auto& o = outcomes[k];
      os << edge_name(e) << ',' << e.style << ',' << to_string(e.norm) << ',' << o.skipped << ',';
      if (o.eval) {
        os << csv_number(o.eval->report.m_norm) << ',' << csv_number(o.eval->report.nonorth_sup)
           << ',' << o.eval->compat_eq << ',';
      } else {
        os << ",,,";
      }
      os << o.pass << '\n';
    }
    res.report = os.str();
    return res;
  }

  ojson j = report_header("figure1", cfg);
  ojson edges = ojson::array();
  for (std::size_t k = 0; k < kEdges; ++k) {
    const auto& e = kFigureEdges[k];
    const auto& o = outcomes[k];
    ojson x;
    x["edge"] = edge_name(e);
    x["r_q"] = to_string(e.r);
    x["p_q"] = to_string(e.p);
    x["style"] = e.style;
    x["norm"] = to_string(e.norm);
    x["skipped"] = o.skipped;
    if (o.skipped) x["reason"] = o.reason;
    if (o.eval) {
      x["pi_norm"] = o.eval->report.m_norm;
      x["nonorth_sup"] = o.eval->report.nonorth_sup;
      x["compat_eq"] = o.eval->compat_eq;
      x["orthogonality_checks"] = checks_json(o.eval->checks);
    }
    x["pass"] = o.pass;
    edges.push_back(std::move(x));
  }
  j["edges"] = std::move(edges);
  j["exit_code"] = exit_code;
  res.report = j.dump(2) + "\n";
  return res;
}

// ---------------------------------------------------------------------------
// tables

CommandResult cmd_tables(const ExperimentConfig& cfg) {
  const Problem prob = make_problem(cfg);
  const auto entries = catalog_pairs(prob.a, prob.part);

  struct CellOutcome {
    std::optional<PairEvaluation> eval;
    std::string error;
    bool pass = false;
  };
  std::vector<CellOutcome> outcomes(entries.size());
  parallel_for(entries.size(), [&](std::size_t k) {
    const auto& e = entries[k];
    if (e.skipped) return;
    try {
      outcomes[k].eval = evaluate_pair(prob.a, *e.m, *e.pair, cfg.tol);
      const auto& ev = *outcomes[k].eval;
      outcomes[k].pass = ev.compat_eq && std::abs(ev.report.m_norm - 1.0) <= cfg.tol;
    } catch (const Error& err) {
      outcomes[k].error = err.what();
    }
  });

  int passed = 0, failed = 0, skipped = 0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k].skipped) {
      ++skipped;
    } else if (outcomes[k].pass) {
      ++passed;
    } else {
      ++failed;
    }
  }
  CommandResult res;
  res.exit_code = failed > 0 ? kExitVerificationFailed : kExitOk;

  if (cfg.format == ReportFormat::Csv) {
    std::ostringstream os;
    os << "table,norm,q,anchor,companion_expr,kind,skipped,pi_norm,compat_eq,pass\n";
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& e = entries[k];
      const auto& o = outcomes[k];
      os << e.cell.table << ',' << to_string(e.cell.norm) << ',' << to_string(e.cell.q) << ','
         << to_string(e.cell.anchor) << ',' << e.cell.companion_expr << ',' << to_string(e.cell.kind)
         << ',' << e.skipped << ',';
      if (o.eval) {
        os << csv_number(o.eval->report.m_norm) << ',' << o.eval->compat_eq << ',';
      } else {
        os << ",,";
      }
      os << o.pass << '\n';
    }
    res.report = os.str();
    return res;
  }

  ojson j = report_header("tables", cfg);
  ojson cells = ojson::array();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    const auto& o = outcomes[k];
    ojson x;
    x["table"] = e.cell.table;
    x["norm"] = to_string(e.cell.norm);
    x["q"] = to_string(e.cell.q);
    x["anchor"] = to_string(e.cell.anchor);
    x["companion_expr"] = e.cell.companion_expr;
    x["kind"] = to_string(e.cell.kind);
    x["skipped"] = e.skipped;
    if (e.skipped) x["reason"] = e.reason;
    if (!o.error.empty()) x["error"] = o.error;
    if (o.eval) {
      x["pi_norm"] = o.eval->report.m_norm;
      x["nonorth_sup"] = o.eval->report.nonorth_sup;
      x["compat_eq"] = o.eval->compat_eq;
    }
    x["pass"] = o.pass;
    cells.push_back(std::move(x));
  }
  j["cells"] = std::move(cells);
  j["summary"] = {{"cells", entries.size()}, {"passed", passed}, {"failed", failed}, {"skipped", skipped}};
  j["exit_code"] = res.exit_code;
  res.report = j.dump(2) + "\n";
  return res;
}

// ---------------------------------------------------------------------------
// converge

CommandResult cmd_converge(const ExperimentConfig& cfg) {
  const Problem prob = make_problem(cfg);
  std::vector<PairRecipe> recipes = cfg.pairs;
  if (recipes.empty()) recipes.push_back(parse_pair_recipe("red:1"));

  struct Outcome {
    bool constructed = false;
    std::string error;
    double rho = 0;
    double rate = 0;
    std::vector<double> residuals;
    std::vector<std::pair<std::string, double>> e_norms;
  };
  std::vector<Outcome> outcomes(recipes.size());
  const Index n = prob.a.rows();
  Vector x0(n);
  {
    std::mt19937_64 rng(cfg.seed);
    for (Index i = 0; i < n; ++i) x0(i) = 2.0 * unit_double(rng()) - 1.0;
  }
  const Vector b = Vector::Zero(n);

  parallel_for(recipes.size(), [&](std::size_t k) {
    Outcome& out = outcomes[k];
    try {
      const TwoGridSpec spec{build_pair(recipes[k], prob.a, prob.part), cfg.pre, cfg.post};
      const Matrix e = two_grid_propagator(prob.a, spec);
      out.rho = conv_factor(e);
      out.residuals = iterate(prob.a, spec, b, x0, cfg.iters).residuals;
      out.rate = asymptotic_rate(out.residuals);
      for (const auto& nn : cfg.norms) {
        try {
          out.e_norms.emplace_back(nn.name, operator_m_norm(e, realize_norm(nn.spec, prob.a)));
        } catch (const Error&) {
          out.e_norms.emplace_back(nn.name, std::nan(""));
        }
      }
      out.constructed = true;
    } catch (const Error& err) {
      out.error = err.what();
    }
  });

  // E = I - Pi alone has rho = 1 up to rounding.
  auto divergent = [&](double rho) { return rho > 1.0 + cfg.tol; };
  CommandResult res;
  for (const auto& o : outcomes) {
    if (!o.constructed) res.exit_code = kExitConstructionFailed;
  }

  if (cfg.format == ReportFormat::Csv) {
    std::ostringstream os;
    os << "pair,iter,residual,conv_factor,observed_rate,divergent\n";
    for (std::size_t k = 0; k < recipes.size(); ++k) {
      const auto& o = outcomes[k];
      for (std::size_t it = 0; it < o.residuals.size(); ++it) {
        os << csv_field(recipes[k].text) << ',' << it << ',' << csv_number(o.residuals[it]) << ','
           << csv_number(o.rho) << ',' << csv_number(o.rate) << ',' << divergent(o.rho) << '\n';
      }
    }
    res.report = os.str();
    return res;
  }

  ojson j = report_header("converge", cfg);
  j["config"]["pre"] = to_string(cfg.pre);
  j["config"]["post"] = to_string(cfg.post);
  j["config"]["iters"] = cfg.iters;
  ojson results = ojson::array();
  for (std::size_t k = 0; k < recipes.size(); ++k) {
    const auto& o = outcomes[k];
    ojson x;
    x["pair"] = recipes[k].text;
    x["constructed"] = o.constructed;
    if (!o.constructed) {
      x["error"] = o.error;
    } else {
      x["conv_factor"] = o.rho;
      x["observed_rate"] = o.rate;
      x["divergent"] = divergent(o.rho);
      ojson norms = ojson::object();
      for (const auto& [name, v] : o.e_norms) norms[name] = v;
      x["propagator_norms"] = std::move(norms);
      x["residuals"] = ojson::parse(history_to_json(o.residuals));
    }
    results.push_back(std::move(x));
  }
  j["results"] = std::move(results);
  j["exit_code"] = res.exit_code;
  res.report = j.dump(2) + "\n";
  return res;
}

void write_report(const ExperimentConfig& cfg, const CommandResult& result) {
  if (cfg.output.empty()) {
    std::cout << result.report;
    return;
  }
  std::ofstream os(cfg.output);
  if (!os) throw ConfigError("output", "cannot open '" + cfg.output + "' for writing");
  os << result.report;
}

}  // namespace compatamg
