#pragma once

// Coarse-grid correction Pi = P (R^*AP)^{-1} R^*A and the quantities that
// describe how far it is from M-orthogonal.

#include <cstdint>
#include <string>
#include <string_view>

#include "compatamg/linalg.hpp"
#include "compatamg/transfer.hpp"

namespace compatamg {

/// K = R^*AP.
struct CoarseOperator {
  Matrix k;
};

struct CoarseCorrection {
  Matrix pi;
  CoarseOperator coarse;
};

/// Throws SingularMatrixError ("R and P incompatible with A on this
/// splitting") when R^*AP is singular.
CoarseCorrection build_pi(const Matrix& a, const TransferPair& pair);

/// ||Pi||_M.
double pi_m_norm(const Matrix& pi, const Matrix& m);

/// sup ||Pi x||_M / ||x||_M over x in range(Pi)^{perp_M} = M^{-1} range(Pi)^perp.
/// Zero exactly when Pi is M-orthogonal; ||Pi||_M^2 = 1 + nonorth_measure^2.
double nonorth_measure(const Matrix& pi, const Matrix& m);

/// Smallest principal angle between range(Pi) and null(Pi) in the
/// M-inner product, in (0, pi/2]. ||Pi||_M = 1 / sin(theta).
double min_canonical_angle(const Matrix& pi, const Matrix& m);

/// Four equivalent characterizations of an M-orthogonal projection, each
/// evaluated numerically against `tol`.
struct OrthogonalityChecks {
  bool m_pi_symmetric = false;       ///< M Pi = (M Pi)^*
  bool adjoint_fixed_point = false;  ///< Pi = M^{-1} Pi^* M
  bool range_match = false;          ///< range(M Pi) = range(Pi^*)
  bool bilinear_vanishes = false;    ///< <Pi x, (I - Pi) y>_M = 0 on random probes

  double symmetry_residual = 0.0;
  double adjoint_residual = 0.0;
  Index joint_rank = 0;
  Index rank = 0;
  double bilinear_max = 0.0;

  bool all() const {
    return m_pi_symmetric && adjoint_fixed_point && range_match && bilinear_vanishes;
  }
  bool none() const {
    return !m_pi_symmetric && !adjoint_fixed_point && !range_match && !bilinear_vanishes;
  }
  bool consistent() const { return all() || none(); }
};

inline constexpr int kProbeCount = 64;
inline constexpr std::uint64_t kProbeSeed = 0x5eed2023u;

OrthogonalityChecks orthogonality_checks(const Matrix& pi, const Matrix& m, double tol);

/// rank([M P | A^* R]) == n_c at rank tolerance `rank_tol` (bases are
/// orthonormalized first, so the test does not depend on column scaling).
bool verify_compat_equation(const Matrix& a, const Matrix& m, const TransferPair& pair,
                            double rank_tol = kRankTol);

struct ProjectionReport {
  Matrix pi;
  double m_norm = 0.0;
  double nonorth_sup = 0.0;
  double min_angle = 0.0;
  bool is_m_orthogonal = false;
  double symmetry_residual = 0.0;  ///< ||M Pi - (M Pi)^*||_F / ||M Pi||_F
};

/// Computes every scalar of the report. `tol` decides is_m_orthogonal
/// (|m_norm - 1| <= tol).
ProjectionReport analyze_projection(const Matrix& pi, const Matrix& m, double tol = 1e-8);

/// Everything measured about one (pair, M) combination.
struct PairEvaluation {
  ProjectionReport report;
  OrthogonalityChecks checks;
  bool compat_eq = false;
  double idempotence_residual = 0.0;  ///< ||Pi^2 - Pi||_F / ||Pi||_F
  double complement_m_norm = 0.0;     ///< ||I - Pi||_M
};

PairEvaluation evaluate_pair(const Matrix& a, const Matrix& m, const TransferPair& pair,
                             double tol = 1e-8);

/// JSON object with the scalar fields, the norm tag and a provenance string.
std::string to_json(const ProjectionReport& report, std::string_view norm,
                    std::string_view provenance);

}  // namespace compatamg
