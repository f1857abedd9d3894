#pragma once

// Test operators and CF-splittings.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "compatamg/linalg.hpp"

namespace compatamg {

enum class ProblemKind { Advection1D, Advection2D, AdvectionDiffusion1D, Laplacian1D,
                         RandomStableNonsym };

std::string_view to_string(ProblemKind kind);
/// Accepts the CLI names: advection1d, advection2d, advdiff1d, laplacian1d, random.
std::optional<ProblemKind> parse_problem_kind(std::string_view s);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Advection1D;
  Index n = 16;        ///< 1D kinds and random
  Index nx = 8;        ///< Advection2D
  Index ny = 8;        ///< Advection2D
  double epsilon = 0;  ///< diffusion coefficient (AdvectionDiffusion1D)
  std::uint64_t seed = 1;

  Index size() const { return kind == ProblemKind::Advection2D ? nx * ny : n; }
};

/// Parses {"kind", "n", "nx", "ny", "epsilon", "seed"}; throws ConfigError
/// naming the offending field.
ProblemSpec problem_from_json(const std::string& text);
std::string problem_to_json(const ProblemSpec& spec);

/// Builds the operator:
///   Advection1D: unit diagonal, -1 subdiagonal (inflow at index 0).
///   AdvectionDiffusion1D: Advection1D + epsilon (-1, 2, -1) / h^2, h = 1/(n+1).
///   Advection2D: upwind in x and y on an nx x ny grid, lexicographic
///                (index = j*nx + i); diagonal 2, -1 to the west and south.
///   Laplacian1D: tridiag(-1, 2, -1).
///   RandomStableNonsym: S + sigma K with S = G G^T / n + 0.1 I (SPD,
///                lambda_min >= 0.1), K skew, sigma = ||S||_2 / ||K||_2.
/// Throws ConfigError for sizes < 2 or negative epsilon.
Matrix generate(const ProblemSpec& spec);

enum class SplitPolicy { Alternate, FirstHalfF, Random };

std::string_view to_string(SplitPolicy policy);
std::optional<SplitPolicy> parse_split_policy(std::string_view s);

struct SplitSpec {
  SplitPolicy policy = SplitPolicy::Alternate;
  std::uint64_t seed = 1;
  double cfrac = 0.5;
};

/// Alternate: even indices F, odd C. FirstHalfF: the first ceil(n/2) points
/// are F. Random: each point is C with probability cfrac; at least one F and
/// one C point are enforced.
CFPartition default_splitting(Index n, const SplitSpec& spec);
inline CFPartition default_splitting(Index n, SplitPolicy policy = SplitPolicy::Alternate) {
  return default_splitting(n, SplitSpec{policy, 1, 0.5});
}

/// Deterministic uniform double in [0, 1) from a 64-bit generator output.
double unit_double(std::uint64_t bits);

}  // namespace compatamg
