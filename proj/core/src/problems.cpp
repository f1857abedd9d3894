#include "compatamg/problems.hpp"

#include <algorithm>
#include <random>

#include <json.hpp>

namespace compatamg {

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Advection1D: return "advection1d";
    case ProblemKind::Advection2D: return "advection2d";
    case ProblemKind::AdvectionDiffusion1D: return "advdiff1d";
    case ProblemKind::Laplacian1D: return "laplacian1d";
    case ProblemKind::RandomStableNonsym: return "random";
  }
  return "?";
}

std::optional<ProblemKind> parse_problem_kind(std::string_view s) {
  for (auto k : {ProblemKind::Advection1D, ProblemKind::Advection2D,
                 ProblemKind::AdvectionDiffusion1D, ProblemKind::Laplacian1D,
                 ProblemKind::RandomStableNonsym}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

std::string_view to_string(SplitPolicy policy) {
  switch (policy) {
    case SplitPolicy::Alternate: return "alternate";
    case SplitPolicy::FirstHalfF: return "firsthalf";
    case SplitPolicy::Random: return "random";
  }
  return "?";
}

std::optional<SplitPolicy> parse_split_policy(std::string_view s) {
  for (auto p : {SplitPolicy::Alternate, SplitPolicy::FirstHalfF, SplitPolicy::Random}) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

ProblemSpec problem_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("problem", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("problem", "expected a JSON object");
  ProblemSpec spec;
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError("problem.kind", "missing or not a string");
  }
  const auto kind = parse_problem_kind(j["kind"].get<std::string>());
  if (!kind) throw ConfigError("problem.kind", "unknown kind '" + j["kind"].get<std::string>() + "'");
  spec.kind = *kind;
  auto read_int = [&](const char* key, Index& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) throw ConfigError(std::string("problem.") + key, "not an integer");
    dst = j[key].get<Index>();
  };
  read_int("n", spec.n);
  read_int("nx", spec.nx);
  read_int("ny", spec.ny);
  if (j.contains("epsilon")) {
    if (!j["epsilon"].is_number()) throw ConfigError("problem.epsilon", "not a number");
    spec.epsilon = j["epsilon"].get<double>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw ConfigError("problem.seed", "not an integer");
    }
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  return spec;
}

std::string problem_to_json(const ProblemSpec& spec) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(spec.kind);
  if (spec.kind == ProblemKind::Advection2D) {
    j["nx"] = spec.nx;
    j["ny"] = spec.ny;
  } else {
    j["n"] = spec.n;
  }
  if (spec.kind == ProblemKind::AdvectionDiffusion1D) j["epsilon"] = spec.epsilon;
  if (spec.kind == ProblemKind::RandomStableNonsym) j["seed"] = spec.seed;
  return j.dump();
}

namespace {

Matrix upwind_1d(Index n) {
  Matrix a = Matrix::Identity(n, n);
  for (Index i = 1; i < n; ++i) a(i, i - 1) = -1.0;
  return a;
}

Matrix laplacian_1d(Index n) {
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    a(i, i) = 2.0;
    if (i > 0) a(i, i - 1) = -1.0;
    if (i + 1 < n) a(i, i + 1) = -1.0;
  }
  return a;
}

Matrix random_stable_nonsym(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto draw = [&] { return 2.0 * unit_double(rng()) - 1.0; };
  Matrix g(n, n), h(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = draw();
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) h(i, j) = draw();
  const Matrix s = g * g.transpose() / static_cast<double>(n) + 0.1 * Matrix::Identity(n, n);
  const Matrix k = 0.5 * (h - h.transpose());
  const double sigma = spectral_norm(s) / spectral_norm(k);
  return s + sigma * k;
}

}  // namespace

Matrix generate(const ProblemSpec& spec) {
  if (spec.kind == ProblemKind::Advection2D) {
    if (spec.nx < 2 || spec.ny < 2) throw ConfigError("problem.nx", "grid sizes must be >= 2");
  } else if (spec.n < 2) {
    throw ConfigError("problem.n", "size must be >= 2");
  }
  if (spec.epsilon < 0) throw ConfigError("problem.epsilon", "must be >= 0");

  switch (spec.kind) {
    case ProblemKind::Advection1D:
      return upwind_1d(spec.n);
    case ProblemKind::AdvectionDiffusion1D: {
      const double h = 1.0 / static_cast<double>(spec.n + 1);
      return upwind_1d(spec.n) + (spec.epsilon / (h * h)) * laplacian_1d(spec.n);
    }
    case ProblemKind::Advection2D: {
      const Index nx = spec.nx, ny = spec.ny;
      Matrix a = Matrix::Zero(nx * ny, nx * ny);
      for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
          const Index row = j * nx + i;
          a(row, row) = 2.0;
          if (i > 0) a(row, row - 1) = -1.0;
          if (j > 0) a(row, row - nx) = -1.0;
        }
      }
      return a;
    }
    case ProblemKind::Laplacian1D:
      return laplacian_1d(spec.n);
    case ProblemKind::RandomStableNonsym:
      return random_stable_nonsym(spec.n, spec.seed);
  }
  return {};
}

CFPartition default_splitting(Index n, const SplitSpec& spec) {
  if (n < 2) throw ConfigError("split", "n must be >= 2");
  std::vector<Index> f, c;
  switch (spec.policy) {
    case SplitPolicy::Alternate:
      for (Index i = 0; i < n; ++i) (i % 2 == 0 ? f : c).push_back(i);
      break;
    case SplitPolicy::FirstHalfF: {
      const Index nf = (n + 1) / 2;
      for (Index i = 0; i < n; ++i) (i < nf ? f : c).push_back(i);
      break;
    }
    case SplitPolicy::Random: {
      if (!(spec.cfrac >= 0.0 && spec.cfrac <= 1.0)) {
        throw ConfigError("cfrac", "must lie in [0, 1]");
      }
      std::mt19937_64 rng(spec.seed);
      std::vector<bool> is_c(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) is_c[static_cast<std::size_t>(i)] = unit_double(rng()) < spec.cfrac;
      // Force a nonempty side deterministically from the same stream.
      const auto count_c = std::count(is_c.begin(), is_c.end(), true);
      const auto pick = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
      if (count_c == 0) is_c[pick] = true;
      if (count_c == n) is_c[pick] = false;
      for (Index i = 0; i < n; ++i) (is_c[static_cast<std::size_t>(i)] ? c : f).push_back(i);
      break;
    }
  }
  return CFPartition(n, std::move(f), std::move(c));
}

}  // namespace compatamg
