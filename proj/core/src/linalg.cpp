#include "compatamg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace compatamg {

namespace {

std::vector<int> as_eigen_indices(std::span<const Index> idx) {
  return {idx.begin(), idx.end()};
}

void require_square(const Matrix& a, std::string_view what) {
  if (a.rows() != a.cols()) {
    throw DimensionError(std::string(what) + " must be square, got " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// CFPartition

CFPartition::CFPartition(Index n, std::vector<Index> fpoints, std::vector<Index> cpoints)
    : n_(n), fpoints_(std::move(fpoints)), cpoints_(std::move(cpoints)) {
  if (n_ < 2) throw DimensionError("CF partition needs n >= 2");
  if (fpoints_.empty() || cpoints_.empty()) {
    throw DimensionError("CF partition needs at least one F-point and one C-point");
  }
  if (static_cast<Index>(fpoints_.size() + cpoints_.size()) != n_) {
    throw DimensionError("CF partition sizes do not add up to n");
  }
  std::vector<int> seen(static_cast<std::size_t>(n_), 0);
  is_c_.assign(static_cast<std::size_t>(n_), false);
  auto mark = [&](Index i, bool c) {
    if (i < 0 || i >= n_) throw DimensionError("CF partition index out of range");
    auto& s = seen[static_cast<std::size_t>(i)];
    if (s++) throw DimensionError("CF partition index " + std::to_string(i) + " repeated");
    is_c_[static_cast<std::size_t>(i)] = c;
  };
  for (Index i : fpoints_) mark(i, false);
  for (Index i : cpoints_) mark(i, true);
}

std::vector<Index> CFPartition::f_first_order() const {
  std::vector<Index> order(fpoints_);
  order.insert(order.end(), cpoints_.begin(), cpoints_.end());
  return order;
}

Matrix CFPartition::permute(const Matrix& a) const {
  if (a.rows() != n_ || a.cols() != n_) throw DimensionError("permute: matrix is not n x n");
  const auto idx = as_eigen_indices(f_first_order());
  return a(idx, idx);
}

Matrix CFPartition::unpermute(const Matrix& a) const {
  if (a.rows() != n_ || a.cols() != n_) throw DimensionError("unpermute: matrix is not n x n");
  const auto idx = as_eigen_indices(f_first_order());
  Matrix out(n_, n_);
  out(idx, idx) = a;
  return out;
}

Matrix CFPartition::stack_rows(const Matrix& f_block, const Matrix& c_block) const {
  if (f_block.rows() != num_f() || c_block.rows() != num_c() || f_block.cols() != c_block.cols()) {
    throw DimensionError("stack_rows: block shapes do not match the partition");
  }
  Matrix out(n_, f_block.cols());
  out(as_eigen_indices(fpoints_), Eigen::all) = f_block;
  out(as_eigen_indices(cpoints_), Eigen::all) = c_block;
  return out;
}

Matrix CFPartition::f_rows(const Matrix& x) const {
  if (x.rows() != n_) throw DimensionError("f_rows: row count differs from n");
  return x(as_eigen_indices(fpoints_), Eigen::all);
}

Matrix CFPartition::c_rows(const Matrix& x) const {
  if (x.rows() != n_) throw DimensionError("c_rows: row count differs from n");
  return x(as_eigen_indices(cpoints_), Eigen::all);
}

// ---------------------------------------------------------------------------
// PartitionedMatrix

PartitionedMatrix::PartitionedMatrix(Matrix base, CFPartition part)
    : base_(std::move(base)), part_(std::move(part)) {
  require_square(base_, "partitioned matrix");
  if (base_.rows() != part_.size()) {
    throw DimensionError("matrix is " + std::to_string(base_.rows()) + "x" +
                         std::to_string(base_.cols()) + " but partition has n = " +
                         std::to_string(part_.size()));
  }
  const auto f = as_eigen_indices(part_.fpoints());
  const auto c = as_eigen_indices(part_.cpoints());
  ff_ = base_(f, f);
  fc_ = base_(f, c);
  cf_ = base_(c, f);
  cc_ = base_(c, c);
}

Matrix PartitionedMatrix::f_first() const {
  const Index nf = part_.num_f();
  const Index nc = part_.num_c();
  Matrix out(nf + nc, nf + nc);
  out.topLeftCorner(nf, nf) = ff_;
  out.topRightCorner(nf, nc) = fc_;
  out.bottomLeftCorner(nc, nf) = cf_;
  out.bottomRightCorner(nc, nc) = cc_;
  return out;
}

Matrix PartitionedMatrix::reassemble() const { return part_.unpermute(f_first()); }

PartitionedMatrix partition(const Matrix& a, const CFPartition& part) {
  return PartitionedMatrix(a, part);
}

Matrix schur_c(const PartitionedMatrix& q) {
  return q.cc() - q.cf() * solve_checked(q.ff(), q.fc(), "Q_ff");
}

Matrix schur_f(const PartitionedMatrix& q) {
  return q.ff() - q.fc() * solve_checked(q.cc(), q.cf(), "Q_cc");
}

// ---------------------------------------------------------------------------
// Guarded solves

double rcond_estimate(const Matrix& a) {
  require_square(a, "rcond_estimate argument");
  if (a.size() == 0) return 0.0;
  if (!a.allFinite()) return 0.0;
  Eigen::PartialPivLU<Matrix> lu(a);
  const auto& lu_mat = lu.matrixLU();
  for (Index i = 0; i < lu_mat.rows(); ++i) {
    if (lu_mat(i, i) == 0.0) return 0.0;
  }
  const double rc = lu.rcond();
  return std::isfinite(rc) ? rc : 0.0;
}

namespace {

Eigen::PartialPivLU<Matrix> checked_lu(const Matrix& a, std::string_view what) {
  require_square(a, what);
  const double rc = rcond_estimate(a);
  if (!(rc >= kSingularRcond)) {
    throw SingularMatrixError(std::string(what) + " is singular (rcond estimate " +
                              std::to_string(rc) + ")");
  }
  return Eigen::PartialPivLU<Matrix>(a);
}

}  // namespace

Matrix solve_checked(const Matrix& a, const Matrix& b, std::string_view what) {
  if (a.rows() != b.rows()) throw DimensionError("solve: right-hand side has wrong row count");
  return checked_lu(a, what).solve(b);
}

Matrix solve_right_checked(const Matrix& b, const Matrix& a, std::string_view what) {
  if (a.cols() != b.cols()) throw DimensionError("solve: left-hand side has wrong column count");
  // B A^{-1} = (A^{-T} B^T)^T
  return checked_lu(a.transpose(), what).solve(b.transpose()).transpose();
}

Matrix inverse_checked(const Matrix& a, std::string_view what) {
  return checked_lu(a, what).inverse();
}

// ---------------------------------------------------------------------------
// SPD machinery

bool spd_check(const Matrix& m, double tol) {
  if (m.rows() != m.cols() || m.size() == 0 || !m.allFinite()) return false;
  const double mnorm = m.norm();
  if (mnorm == 0.0) return false;
  if ((m - m.transpose()).norm() > tol * mnorm) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric_part(m), Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  return lmax > 0.0 && lmin > tol * lmax;
}

void require_spd(const Matrix& m, std::string_view what, double tol) {
  if (!spd_check(m, tol)) throw NotSpdError(std::string(what) + " is not SPD");
}

Matrix symmetric_part(const Matrix& a) {
  require_square(a, "symmetric_part argument");
  return 0.5 * (a + a.transpose());
}

namespace {

Matrix spd_power(const Matrix& m, double p) {
  require_square(m, "SPD matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric_part(m));
  if (eig.info() != Eigen::Success) throw NotSpdError("symmetric eigensolver failed");
  const Vector& lam = eig.eigenvalues();
  if (lam.minCoeff() <= 0.0) throw NotSpdError("matrix root requested for non-SPD matrix");
  const Vector scaled = lam.array().pow(p).matrix();
  const Matrix& v = eig.eigenvectors();
  Matrix out = v * scaled.asDiagonal() * v.transpose();
  return symmetric_part(out);
}

}  // namespace

Matrix spd_sqrt(const Matrix& m) { return spd_power(m, 0.5); }
Matrix spd_inv_sqrt(const Matrix& m) { return spd_power(m, -0.5); }

Matrix sqrt_astar_a(const Matrix& a) {
  require_square(a, "A");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const Matrix& v = svd.matrixV();
  Matrix out = v * svd.singularValues().asDiagonal() * v.transpose();
  return symmetric_part(out);
}

// ---------------------------------------------------------------------------
// Norm choices

std::string_view to_string(NormTag tag) {
  switch (tag) {
    case NormTag::Identity: return "identity";
    case NormTag::A: return "a";
    case NormTag::Asym: return "asym";
    case NormTag::AstarA: return "astara";
    case NormTag::SqrtAstarA: return "sqrtastara";
    case NormTag::AstarAsymInvA: return "astarasyminva";
    case NormTag::Custom: return "custom";
  }
  return "?";
}

std::string_view norm_expression(NormTag tag) {
  switch (tag) {
    case NormTag::Identity: return "I";
    case NormTag::A: return "A";
    case NormTag::Asym: return "A_sym";
    case NormTag::AstarA: return "A*A";
    case NormTag::SqrtAstarA: return "(A*A)^1/2";
    case NormTag::AstarAsymInvA: return "A*A_sym^-1A";
    case NormTag::Custom: return "M";
  }
  return "?";
}

std::optional<NormTag> parse_norm_tag(std::string_view s) {
  for (NormTag t : {NormTag::Identity, NormTag::A, NormTag::Asym, NormTag::AstarA,
                    NormTag::SqrtAstarA, NormTag::AstarAsymInvA, NormTag::Custom}) {
    if (s == to_string(t)) return t;
  }
  if (s == "i" || s == "I") return NormTag::Identity;
  return std::nullopt;
}

Matrix realize_norm(const NormSpec& spec, const Matrix& a, double tol) {
  require_square(a, "A");
  const Index n = a.rows();
  auto require_nonsingular = [&] {
    if (rcond_estimate(a) < kSingularRcond) throw SingularMatrixError("A is singular");
  };

  Matrix m;
  switch (spec.tag) {
    case NormTag::Identity:
      m = Matrix::Identity(n, n);
      break;
    case NormTag::A:
      require_spd(a, "A (norm tag 'a' needs SPD A)", tol);
      m = a;
      break;
    case NormTag::Asym:
      m = symmetric_part(a);
      require_spd(m, "A_sym", tol);
      break;
    case NormTag::AstarA:
      require_nonsingular();
      m = symmetric_part(a.transpose() * a);
      break;
    case NormTag::SqrtAstarA:
      require_nonsingular();
      m = sqrt_astar_a(a);
      break;
    case NormTag::AstarAsymInvA: {
      require_nonsingular();
      const Matrix s = symmetric_part(a);
      require_spd(s, "A_sym", tol);
      m = symmetric_part(a.transpose() * s.llt().solve(a));
      break;
    }
    case NormTag::Custom:
      if (!spec.custom) throw ConfigError("norm", "custom norm without a matrix payload");
      if (spec.custom->rows() != n || spec.custom->cols() != n) {
        throw DimensionError("custom norm matrix does not match A");
      }
      m = *spec.custom;
      break;
  }
  require_spd(m, std::string("M = ") + std::string(norm_expression(spec.tag)), tol);
  return m;
}

// ---------------------------------------------------------------------------
// M-inner products and norms

double m_inner(const Vector& x, const Vector& y, const Matrix& m) { return (m * x).dot(y); }

double m_norm(const Vector& x, const Matrix& m) { return std::sqrt(std::max(0.0, m_inner(x, x, m))); }

Matrix m_adjoint(const Matrix& t, const Matrix& m) {
  require_square(t, "T");
  if (t.rows() != m.rows()) throw DimensionError("m_adjoint: T and M differ in size");
  require_spd(m, "M");
  return m.llt().solve(t.transpose() * m);
}

double spectral_norm(const Matrix& t) {
  if (t.size() == 0) return 0.0;
  // Top eigenvalue of T^T T; relative accuracy is kept for the largest one.
  const Matrix g = t.rows() >= t.cols() ? Matrix(t.transpose() * t) : Matrix(t * t.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

double operator_m_norm(const Matrix& t, const Matrix& m) {
  require_square(t, "T");
  if (t.rows() != m.rows()) throw DimensionError("operator_m_norm: T and M differ in size");
  require_spd(m, "M");
  return spectral_norm(spd_sqrt(m) * t * spd_inv_sqrt(m));
}

// ---------------------------------------------------------------------------
// Subspaces

Index numerical_rank(const Matrix& x, double rel_tol) {
  if (x.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(x);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++r;
  }
  return r;
}

Matrix orthonormal_range(const Matrix& x, double rel_tol) {
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(rel_tol);
  const Index r = qr.rank();
  Matrix q = qr.householderQ() * Matrix::Identity(x.rows(), r);
  return q;
}

Matrix orthogonal_complement(const Matrix& x, double rel_tol) {
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(rel_tol);
  const Index r = qr.rank();
  const Index n = x.rows();
  Matrix q = qr.householderQ();
  return q.rightCols(n - r);
}

Index joint_rank(const Matrix& x, const Matrix& y, double rel_tol) {
  if (x.rows() != y.rows()) throw DimensionError("joint_rank: row counts differ");
  const Matrix qx = orthonormal_range(x, rel_tol);
  const Matrix qy = orthonormal_range(y, rel_tol);
  if (qx.cols() == 0 || qy.cols() == 0) return qx.cols() + qy.cols();
  // Part of range(y) outside range(x); its singular values are sines of the
  // principal angles, already on an absolute scale.
  const Matrix rest = qy - qx * (qx.transpose() * qy);
  const Vector s = Eigen::JacobiSVD<Matrix>(rest).singularValues();
  return qx.cols() + (s.array() > rel_tol).count();
}

}  // namespace compatamg
