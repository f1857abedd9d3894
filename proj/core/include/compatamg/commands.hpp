#pragma once

// Batch experiments behind the `compatamg` command line tool. Each command
// returns its exit code together with the rendered report, so the same code
// path serves the CLI and the tests.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compatamg/linalg.hpp"
#include "compatamg/problems.hpp"
#include "compatamg/solver.hpp"
#include "compatamg/transfer.hpp"

namespace compatamg {

struct NamedNorm {
  std::string name;  ///< tag name, or "custom:<path>"
  NormSpec spec;
};

/// Parses "identity", "a", "asym", "astara", "sqrtastara", "astarasyminva" or
/// "custom:<matrix file>". Throws ConfigError naming `field`.
NamedNorm parse_named_norm(std::string_view text, std::string_view field = "norm");

enum class RecipeKind { RedList, Cell, Ideal, Random, Files, WFromZ, ZFromW, ChangeOfBasis };

/// How to build one transfer pair.
///
///   red:<1-4>                       M-orthogonal single-operator pairs
///   cell:<1|2>:<norm>:<q>           one cell of the ideal-pair catalog
///   ideal:<q for R>,<q for P>       R = R_ideal(q_R), P = P_ideal(q_P)
///   random:<seed>                   random Z, W with entries in [-1, 1]
///   files:<Z file>,<W file>         explicit F-blocks (n_f x n_c)
///   wfromz:<identity|astara>:<seed> random Z, W from the closed form
///   zfromw:<identity|astara>:<seed> random W, Z from the closed form
///   basis:<ainvstar|ainv>           ideal pair of A^-* / A^-1 with A_cc blocks
struct PairRecipe {
  RecipeKind kind = RecipeKind::RedList;
  std::string text;
  int item = 1;
  int table = 1;
  NormTag norm = NormTag::Identity;
  QTag q = QTag::Identity;
  QTag r_q = QTag::Identity;
  QTag p_q = QTag::Identity;
  std::uint64_t seed = 0;
  std::string z_path;
  std::string w_path;
  BasisTarget basis = BasisTarget::AinvStar;

  /// Norm in which the recipe is M-orthogonal by construction, if any.
  std::optional<NormTag> native_norm() const;
};

PairRecipe parse_pair_recipe(std::string_view text, std::string_view field = "pair");

/// Builds the pair for `recipe` on A.
TransferPair build_pair(const PairRecipe& recipe, const Matrix& a, const CFPartition& part);

enum class ReportFormat { Json, Csv };

struct ExperimentConfig {
  ProblemSpec problem;
  SplitSpec split;
  std::vector<NamedNorm> norms;
  std::vector<PairRecipe> pairs;
  RelaxSpec pre = RelaxSpec::none();
  RelaxSpec post = RelaxSpec::none();
  int iters = 30;
  double tol = 1e-8;
  bool expect_orthogonal = false;
  std::uint64_t seed = 1;  ///< initial guesses in `converge`
  std::string output;      ///< empty: stdout
  ReportFormat format = ReportFormat::Json;
};

/// Reads a JSON config. Keys: problem, split {policy, seed, cfrac}, norms,
/// pairs, pre, post, iters, tol, expect_orthogonal, seed, output, format.
/// Throws ConfigError naming the field.
ExperimentConfig config_from_json(const std::string& text);

/// Checks cross-field invariants (referenced files exist, sizes, ranges).
void validate(const ExperimentConfig& config);

struct CommandResult {
  int exit_code = 0;
  std::string report;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailed = 1;
inline constexpr int kExitConstructionFailed = 2;

/// Evaluates each configured pair in its native norm and every configured
/// norm. Exit 0 iff every expected-orthogonal case has |‖Pi‖_M - 1| <= tol;
/// 1 on verification failure; 2 if a pair cannot be constructed.
CommandResult cmd_verify_pairs(const ExperimentConfig& config);

/// The ten ideal pairs that are I-, A- or A*A-orthogonal. Edges whose norm
/// cannot be realized (A-norm for nonsymmetric A) are skipped with a reason.
CommandResult cmd_figure1(const ExperimentConfig& config);

/// Runs the catalog and verifies every computable cell (range test and
/// ‖Pi‖_M = 1). Exit 1 if a computable cell fails.
CommandResult cmd_tables(const ExperimentConfig& config);

/// Residual histories, convergence factors and observed rates for each
/// configured pair with the configured relaxation.
CommandResult cmd_converge(const ExperimentConfig& config);

/// Writes `result.report` to config.output (or stdout when empty).
void write_report(const ExperimentConfig& config, const CommandResult& result);

}  // namespace compatamg
