#pragma once

// Construction of restriction / interpolation pairs.
//
// With F-points ordered first, R = [Z; I] and P = [W; I] (n x n_c). Ideal
// operators of a matrix Q are W_ideal(Q) = -Q_ff^{-1} Q_fc and
// Z_ideal(Q)^* = -Q_cf Q_ff^{-1}. A pair (R, P) gives an M-orthogonal
// coarse-grid correction exactly when range(M P) = range(A^* R).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compatamg/linalg.hpp"

namespace compatamg {

/// Matrix whose ideal operators anchor a pair.
enum class QTag { Identity, Aop, Asym, AstarA, AAstar, AinvStar, Ainv, Custom };

std::string_view to_string(QTag tag);
std::optional<QTag> parse_q_tag(std::string_view s);
std::string_view q_expression(QTag tag);

struct QChoice {
  QTag tag = QTag::Identity;
  std::optional<Matrix> custom;

  static QChoice of(QTag t) { return QChoice{t, std::nullopt}; }
  static QChoice custom_matrix(Matrix q) { return QChoice{QTag::Custom, std::move(q)}; }
};

Matrix realize_q(const QChoice& q, const Matrix& a);

/// Non-identity C-point blocks: R = [Z Y; Y], P = [W V; V].
struct CBlocks {
  Matrix y;
  Matrix v;
};

struct TransferPair {
  Matrix r;  ///< n x n_c, original row ordering
  Matrix p;  ///< n x n_c, original row ordering
  CFPartition part;
  std::optional<CBlocks> cblocks;

  /// R = [Z; I], P = [W; I] with Z, W given as n_f x n_c F-row blocks.
  static TransferPair from_blocks(const Matrix& z, const Matrix& w, const CFPartition& part);

  Index num_coarse() const noexcept { return part.num_c(); }
  /// F-row block of R (equals Z when cblocks is empty).
  Matrix z() const { return part.f_rows(r); }
  /// F-row block of P (equals W when cblocks is empty).
  Matrix w() const { return part.f_rows(p); }
};

/// Throws DimensionError if R or P lacks full column rank n_c, or if the
/// C-rows are not the identity while cblocks is empty.
void validate(const TransferPair& pair);

/// -Q_ff^{-1} Q_fc (n_f x n_c).
Matrix ideal_w(const PartitionedMatrix& q);
/// Z with Z^* = -Q_cf Q_ff^{-1} (n_f x n_c).
Matrix ideal_z(const PartitionedMatrix& q);
/// [W_ideal(Q); I] in original ordering.
Matrix ideal_p(const PartitionedMatrix& q);
/// [Z_ideal(Q); I] in original ordering.
Matrix ideal_r(const PartitionedMatrix& q);

/// Norms with closed-form compatible operators.
enum class CompatNorm { Identity, AstarA };

/// W such that the pair ([Z; I], [W; I]) is M-orthogonal.
///   Identity: (Z^*A_fc + A_cc) W^* = Z^*A_ff + A_cf
///   AstarA:   (A_ff - Z A_cf) W   = Z A_cc - A_fc
/// Throws SingularMatrixError when the coefficient matrix is singular (no
/// compatible W exists for this Z).
Matrix compatible_w_from_z(const PartitionedMatrix& a, const Matrix& z, CompatNorm norm);

/// Z such that the pair is M-orthogonal.
///   Identity: Z^*(A_ff - A_fc W^*) = A_cc W^* - A_cf
///   AstarA:   Z (A_cf W + A_cc)    = A_ff W + A_fc
Matrix compatible_z_from_w(const PartitionedMatrix& a, const Matrix& w, CompatNorm norm);

/// Experimental: for an arbitrary SPD M, solves M [W; I] = A^* [Z; I] B_R
/// jointly for (W, B_R) as one n x n linear system. Throws Error when the
/// system has no solution with nonsingular B_R.
Matrix compatible_w_from_z_general(const PartitionedMatrix& a, const Matrix& z, const Matrix& m);

/// Which operator of the pair is fixed to the ideal operator of Q.
enum class Anchor { PfromQ, RfromQ };

std::string_view to_string(Anchor anchor);

/// PfromQ: A M^{-1} Q^*.  RfromQ: Q^* A^{-*} M.
Matrix companion_matrix(const Matrix& a, const Matrix& m, const Matrix& q, Anchor anchor);

/// PfromQ: P = P_ideal(Q), R = R_ideal(A M^{-1} Q^*).
/// RfromQ: R = R_ideal(Q), P = P_ideal(Q^* A^{-*} M).
/// Throws SingularMatrixError when Q_ff or the companion's ff-block is singular.
TransferPair ideal_pair(const Matrix& a, const CFPartition& part, const Matrix& m, Anchor anchor,
                        const Matrix& q);
TransferPair ideal_pair(const Matrix& a, const CFPartition& part, const NormSpec& norm,
                        Anchor anchor, const QChoice& q);

/// Cell classification by the number of operators involved in the pair.
enum class CellKind { Single, Double, Multi };
std::string_view to_string(CellKind kind);

struct CatalogCell {
  int table = 1;  ///< 1: P = P_ideal(Q); 2: R = R_ideal(Q)
  NormTag norm = NormTag::Identity;
  QTag q = QTag::Identity;
  Anchor anchor = Anchor::PfromQ;
  std::string_view companion_expr;
  CellKind kind = CellKind::Multi;
};

/// The 50 cells of both tables in row-major order (table, norm row, Q column).
const std::vector<CatalogCell>& catalog_cells();

struct CatalogEntry {
  CatalogCell cell;
  bool skipped = false;
  std::string reason;
  std::optional<Matrix> m;
  std::optional<Matrix> companion;
  std::optional<TransferPair> pair;
};

/// Evaluates every catalog cell on A. Cells whose prerequisites fail (norm not
/// SPD, singular ff-blocks) are returned with skipped = true and a reason.
/// Cells run on up to `threads` workers; output order is catalog_cells() order.
std::vector<CatalogEntry> catalog_pairs(const Matrix& a, const CFPartition& part,
                                        unsigned threads = 0);

/// Ideal operators whose C-point blocks carry A_cc^{-1} or A_cc^{-*}.
enum class BasisTarget { AinvStar, Ainv };

/// The ideal pair of A^{-*} (default) or A^{-1}, built with A_cc / A_cc^* as
/// C-point blocks so that no inverse is formed:
///   AinvStar: R = [A_fc; A_cc], P = [A_cf^*; A_cc^*]
///   Ainv:     R = [A_cf^*; A_cc^*], P = [A_fc; A_cc]
/// Throws SingularMatrixError if A_cc is singular.
TransferPair change_of_basis_pair(const Matrix& a, const CFPartition& part,
                                  BasisTarget target = BasisTarget::AinvStar);

}  // namespace compatamg
