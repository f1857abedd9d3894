#pragma once

// Relaxation, two-grid error propagation and convergence measurement.
//
// The relaxation matrix is called N (x <- x + N^{-1}(b - Ax)); Q is reserved
// for the matrix whose ideal operators define a transfer pair.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compatamg/linalg.hpp"
#include "compatamg/transfer.hpp"

namespace compatamg {

enum class RelaxKind { None, WeightedJacobi, FJacobi, FExact };

inline constexpr double kDefaultOmega = 2.0 / 3.0;

struct RelaxSpec {
  RelaxKind kind = RelaxKind::None;
  double omega = kDefaultOmega;
  int sweeps = 1;

  static RelaxSpec none() { return {}; }
  static RelaxSpec jacobi(double omega = kDefaultOmega, int sweeps = 1) {
    return {RelaxKind::WeightedJacobi, omega, sweeps};
  }
  static RelaxSpec f_jacobi(double omega = kDefaultOmega, int sweeps = 1) {
    return {RelaxKind::FJacobi, omega, sweeps};
  }
  static RelaxSpec f_exact() { return {RelaxKind::FExact, 1.0, 1}; }
};

/// "none", "fexact", "jacobi[:omega[:sweeps]]", "fjacobi[:omega[:sweeps]]".
std::string to_string(const RelaxSpec& spec);
std::optional<RelaxSpec> parse_relax(std::string_view s);

/// Throws ConfigError unless omega is in (0, 2) and sweeps >= 0.
void validate(const RelaxSpec& spec);

/// (I - N^{-1}A)^sweeps with N = diag(A)/omega (WeightedJacobi), the F-point
/// restriction of that (FJacobi, identity on C-points), or an exact A_ff
/// solve on F-points (FExact, identity on C-points).
/// Throws SingularMatrixError on a zero diagonal entry or singular A_ff.
Matrix relax_propagator(const Matrix& a, const CFPartition& part, const RelaxSpec& spec);

struct TwoGridSpec {
  TransferPair pair;
  RelaxSpec pre;
  RelaxSpec post;
};

/// E = E_post (I - Pi) E_pre.
Matrix two_grid_propagator(const Matrix& a, const TwoGridSpec& spec);

/// Spectral radius.
double conv_factor(const Matrix& e);

/// max_i |((I - Pi) e)_i| over C-points i.
double air_cpoint_residual(const Matrix& a, const TransferPair& pair, const Vector& e);

struct IterationHistory {
  std::vector<double> residuals;  ///< ||b - A x_k||_2 for k = 0..iters
  Vector x;                       ///< final iterate
};

/// Runs `iters` two-grid iterations in solution space (pre-relaxation,
/// coarse-grid correction, post-relaxation).
IterationHistory iterate(const Matrix& a, const TwoGridSpec& spec, const Vector& b,
                         const Vector& x0, int iters);

inline constexpr int kRateWindowFirst = 10;
inline constexpr int kRateWindowLast = 25;

/// Geometric mean of residual ratios over iterations [first, last], clipped
/// to the history length. Returns 0 when the residual already vanished.
double asymptotic_rate(const std::vector<double>& residuals, int first = kRateWindowFirst,
                       int last = kRateWindowLast);

std::string history_to_csv(const std::vector<double>& residuals);
std::string history_to_json(const std::vector<double>& residuals);

}  // namespace compatamg
