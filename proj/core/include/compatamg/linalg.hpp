#pragma once

// Dense linear-algebra substrate: CF partitions and block views, Schur
// complements, guarded solves, SPD machinery, M-inner products and operator
// M-norms. Everything is dense double precision.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "compatamg/error.hpp"

namespace compatamg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Reciprocal condition estimates below this value are treated as singular.
inline constexpr double kSingularRcond = 1e-12;
/// Default relative tolerance for SPD checks.
inline constexpr double kSpdTol = 1e-10;
/// Default rank tolerance, relative to the leading singular value / pivot.
inline constexpr double kRankTol = 1e-8;

/// Ordered split of {0..n-1} into F-points and C-points.
class CFPartition {
 public:
  /// Throws DimensionError unless fpoints and cpoints are nonempty, disjoint
  /// and together cover 0..n-1.
  CFPartition(Index n, std::vector<Index> fpoints, std::vector<Index> cpoints);

  Index size() const noexcept { return n_; }
  Index num_f() const noexcept { return static_cast<Index>(fpoints_.size()); }
  Index num_c() const noexcept { return static_cast<Index>(cpoints_.size()); }
  std::span<const Index> fpoints() const noexcept { return fpoints_; }
  std::span<const Index> cpoints() const noexcept { return cpoints_; }

  bool is_cpoint(Index i) const { return is_c_[static_cast<std::size_t>(i)]; }

  /// F-points followed by C-points.
  std::vector<Index> f_first_order() const;

  /// Rows/columns reordered F-first.
  Matrix permute(const Matrix& a) const;
  /// Inverse of permute().
  Matrix unpermute(const Matrix& a_fc_ordered) const;

  /// Stacks an F-row block and a C-row block into an n-row matrix in the
  /// original ordering.
  Matrix stack_rows(const Matrix& f_block, const Matrix& c_block) const;
  Matrix f_rows(const Matrix& x) const;
  Matrix c_rows(const Matrix& x) const;

  friend bool operator==(const CFPartition&, const CFPartition&) = default;

 private:
  Index n_;
  std::vector<Index> fpoints_;
  std::vector<Index> cpoints_;
  std::vector<bool> is_c_;
};

/// A square matrix viewed through a CFPartition.
class PartitionedMatrix {
 public:
  PartitionedMatrix(Matrix base, CFPartition part);

  const Matrix& base() const noexcept { return base_; }
  const CFPartition& partition() const noexcept { return part_; }
  const Matrix& ff() const noexcept { return ff_; }
  const Matrix& fc() const noexcept { return fc_; }
  const Matrix& cf() const noexcept { return cf_; }
  const Matrix& cc() const noexcept { return cc_; }

  /// Blocks assembled in F-first order.
  Matrix f_first() const;
  /// Blocks assembled back into the original ordering.
  Matrix reassemble() const;

 private:
  Matrix base_;
  CFPartition part_;
  Matrix ff_, fc_, cf_, cc_;
};

PartitionedMatrix partition(const Matrix& a, const CFPartition& part);

/// Q_cc - Q_cf Q_ff^{-1} Q_fc.
Matrix schur_c(const PartitionedMatrix& q);
/// Q_ff - Q_fc Q_cc^{-1} Q_cf.
Matrix schur_f(const PartitionedMatrix& q);

/// LU-based reciprocal 1-norm condition estimate; 0 for exactly singular input.
double rcond_estimate(const Matrix& a);

/// Solves A X = B. Throws SingularMatrixError naming `what` when A is
/// numerically singular (rcond < kSingularRcond).
Matrix solve_checked(const Matrix& a, const Matrix& b, std::string_view what);
/// Returns B A^{-1}.
Matrix solve_right_checked(const Matrix& b, const Matrix& a, std::string_view what);
Matrix inverse_checked(const Matrix& a, std::string_view what);

/// ||M - M*||_F <= tol ||M||_F and lambda_min(sym(M)) > tol * lambda_max(sym(M)).
bool spd_check(const Matrix& m, double tol = kSpdTol);
/// Throws NotSpdError naming `what` when spd_check fails.
void require_spd(const Matrix& m, std::string_view what, double tol = kSpdTol);

/// (A + A*) / 2.
Matrix symmetric_part(const Matrix& a);
/// SPD square root via symmetric eigendecomposition.
Matrix spd_sqrt(const Matrix& m);
Matrix spd_inv_sqrt(const Matrix& m);
/// (A*A)^{1/2} = V Sigma V* from the SVD A = U Sigma V*.
Matrix sqrt_astar_a(const Matrix& a);

enum class NormTag { Identity, A, Asym, AstarA, SqrtAstarA, AstarAsymInvA, Custom };

inline constexpr NormTag kAllNormTags[] = {NormTag::Identity,   NormTag::A,
                                           NormTag::Asym,       NormTag::AstarA,
                                           NormTag::SqrtAstarA, NormTag::AstarAsymInvA};

std::string_view to_string(NormTag tag);
std::optional<NormTag> parse_norm_tag(std::string_view s);
/// Human readable matrix expression, e.g. "A*A_sym^-1A".
std::string_view norm_expression(NormTag tag);

/// Choice of the SPD matrix that defines the inner product.
struct NormSpec {
  NormTag tag = NormTag::Identity;
  std::optional<Matrix> custom;  ///< payload for NormTag::Custom

  static NormSpec of(NormTag t) { return NormSpec{t, std::nullopt}; }
  static NormSpec custom_matrix(Matrix m) { return NormSpec{NormTag::Custom, std::move(m)}; }
};

/// Builds the SPD matrix M selected by `spec` for operator A.
/// Throws NotSpdError when the tag's prerequisite fails (A not SPD for tag A,
/// A_sym not SPD for Asym / AstarAsymInvA, custom payload not SPD), and
/// SingularMatrixError when A is singular.
Matrix realize_norm(const NormSpec& spec, const Matrix& a, double tol = kSpdTol);

/// <x, y>_M = <Mx, y>.
double m_inner(const Vector& x, const Vector& y, const Matrix& m);
double m_norm(const Vector& x, const Matrix& m);

/// M^{-1} T* M, the adjoint of T in the M-inner product.
Matrix m_adjoint(const Matrix& t, const Matrix& m);

/// Largest singular value of T.
double spectral_norm(const Matrix& t);

/// sup_{x != 0} ||Tx||_M / ||x||_M, computed as ||M^{1/2} T M^{-1/2}||_2.
double operator_m_norm(const Matrix& t, const Matrix& m);

/// Number of singular values above rel_tol * sigma_max.
Index numerical_rank(const Matrix& x, double rel_tol = kRankTol);

/// Thin orthonormal basis of range(X) from a column-pivoted QR.
Matrix orthonormal_range(const Matrix& x, double rel_tol = kRankTol);

/// Orthonormal basis of range(X)^perp (n x (n - rank)).
Matrix orthogonal_complement(const Matrix& x, double rel_tol = kRankTol);

/// Rank of [orth(X) | orth(Y)]. Equal ranges of common dimension k give k.
Index joint_rank(const Matrix& x, const Matrix& y, double rel_tol = kRankTol);

}  // namespace compatamg
