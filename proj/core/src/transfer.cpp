#include "compatamg/transfer.hpp"

#include <algorithm>
#include <array>

#include "compatamg/parallel.hpp"

namespace compatamg {

// ---------------------------------------------------------------------------
// Q choices

std::string_view to_string(QTag tag) {
  switch (tag) {
    case QTag::Identity: return "identity";
    case QTag::Aop: return "a";
    case QTag::Asym: return "asym";
    case QTag::AstarA: return "astara";
    case QTag::AAstar: return "aastar";
    case QTag::AinvStar: return "ainvstar";
    case QTag::Ainv: return "ainv";
    case QTag::Custom: return "custom";
  }
  return "?";
}

std::string_view q_expression(QTag tag) {
  switch (tag) {
    case QTag::Identity: return "I";
    case QTag::Aop: return "A";
    case QTag::Asym: return "A_sym";
    case QTag::AstarA: return "A*A";
    case QTag::AAstar: return "AA*";
    case QTag::AinvStar: return "A^-*";
    case QTag::Ainv: return "A^-1";
    case QTag::Custom: return "Q";
  }
  return "?";
}

std::optional<QTag> parse_q_tag(std::string_view s) {
  for (QTag t : {QTag::Identity, QTag::Aop, QTag::Asym, QTag::AstarA, QTag::AAstar,
                 QTag::AinvStar, QTag::Ainv, QTag::Custom}) {
    if (s == to_string(t)) return t;
  }
  if (s == "i" || s == "I") return QTag::Identity;
  return std::nullopt;
}

Matrix realize_q(const QChoice& q, const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("A must be square");
  const Index n = a.rows();
  switch (q.tag) {
    case QTag::Identity: return Matrix::Identity(n, n);
    case QTag::Aop: return a;
    case QTag::Asym: return symmetric_part(a);
    case QTag::AstarA: return a.transpose() * a;
    case QTag::AAstar: return a * a.transpose();
    case QTag::AinvStar: return inverse_checked(a.transpose(), "A");
    case QTag::Ainv: return inverse_checked(a, "A");
    case QTag::Custom:
      if (!q.custom) throw ConfigError("q", "custom Q without a matrix payload");
      if (q.custom->rows() != n || q.custom->cols() != n) {
        throw DimensionError("custom Q does not match A");
      }
      return *q.custom;
  }
  return {};
}

// ---------------------------------------------------------------------------
// TransferPair

TransferPair TransferPair::from_blocks(const Matrix& z, const Matrix& w, const CFPartition& part) {
  const Index nc = part.num_c();
  const Matrix eye = Matrix::Identity(nc, nc);
  return TransferPair{part.stack_rows(z, eye), part.stack_rows(w, eye), part, std::nullopt};
}

void validate(const TransferPair& pair) {
  const Index n = pair.part.size();
  const Index nc = pair.part.num_c();
  for (const auto* op : {&pair.r, &pair.p}) {
    if (op->rows() != n || op->cols() != nc) {
      throw DimensionError("transfer operator must be n x n_c");
    }
    if (numerical_rank(*op) != nc) throw DimensionError("transfer operator lacks full column rank");
  }
  if (!pair.cblocks) {
    const Matrix eye = Matrix::Identity(nc, nc);
    if (pair.part.c_rows(pair.r) != eye || pair.part.c_rows(pair.p) != eye) {
      throw DimensionError("C-point rows of R and P must be the identity");
    }
  }
}

// ---------------------------------------------------------------------------
// Ideal operators

Matrix ideal_w(const PartitionedMatrix& q) { return -solve_checked(q.ff(), q.fc(), "Q_ff"); }

Matrix ideal_z(const PartitionedMatrix& q) {
  return -solve_checked(q.ff().transpose(), q.cf().transpose(), "Q_ff");
}

Matrix ideal_p(const PartitionedMatrix& q) {
  const Index nc = q.partition().num_c();
  return q.partition().stack_rows(ideal_w(q), Matrix::Identity(nc, nc));
}

Matrix ideal_r(const PartitionedMatrix& q) {
  const Index nc = q.partition().num_c();
  return q.partition().stack_rows(ideal_z(q), Matrix::Identity(nc, nc));
}

// ---------------------------------------------------------------------------
// Closed forms for M = I and M = A*A

namespace {

void require_block_shape(const PartitionedMatrix& a, const Matrix& x, const char* name) {
  if (x.rows() != a.partition().num_f() || x.cols() != a.partition().num_c()) {
    throw DimensionError(std::string(name) + " must be n_f x n_c");
  }
}

constexpr const char* kNoCompatibleW = "no compatible W exists for this Z";
constexpr const char* kNoCompatibleZ = "no compatible Z exists for this W";

}  // namespace

Matrix compatible_w_from_z(const PartitionedMatrix& a, const Matrix& z, CompatNorm norm) {
  require_block_shape(a, z, "Z");
  const Matrix zt = z.transpose();
  if (norm == CompatNorm::Identity) {
    const Matrix coef = zt * a.fc() + a.cc();
    const Matrix rhs = zt * a.ff() + a.cf();
    return solve_checked(coef, rhs, kNoCompatibleW).transpose();
  }
  const Matrix coef = a.ff() - z * a.cf();
  const Matrix rhs = z * a.cc() - a.fc();
  return solve_checked(coef, rhs, kNoCompatibleW);
}

Matrix compatible_z_from_w(const PartitionedMatrix& a, const Matrix& w, CompatNorm norm) {
  require_block_shape(a, w, "W");
  const Matrix wt = w.transpose();
  if (norm == CompatNorm::Identity) {
    const Matrix coef = a.ff() - a.fc() * wt;
    const Matrix rhs = a.cc() * wt - a.cf();
    // Z^* coef = rhs  <=>  coef^* Z = rhs^*
    return solve_checked(coef.transpose(), rhs.transpose(), kNoCompatibleZ);
  }
  const Matrix coef = a.cf() * w + a.cc();
  const Matrix rhs = a.ff() * w + a.fc();
  return solve_right_checked(rhs, coef, kNoCompatibleZ);
}

Matrix compatible_w_from_z_general(const PartitionedMatrix& a, const Matrix& z, const Matrix& m) {
  require_block_shape(a, z, "Z");
  const CFPartition& part = a.partition();
  const Index nf = part.num_f();
  const Index nc = part.num_c();
  const Index n = part.size();
  if (m.rows() != n || m.cols() != n) throw DimensionError("M does not match A");
  require_spd(m, "M");

  // F-first: [M_{:,F} | -A^*R] [W; B_R] = -M_{:,C}
  const Matrix mp = part.permute(m);
  const Matrix ap = a.f_first();
  Matrix r(n, nc);
  r << z, Matrix::Identity(nc, nc);
  const Matrix g = ap.transpose() * r;

  Matrix lhs(n, n);
  lhs << mp.leftCols(nf), -g;
  const Matrix rhs = -mp.rightCols(nc);

  Eigen::ColPivHouseholderQR<Matrix> qr(lhs);
  qr.setThreshold(kRankTol);
  const Matrix sol = qr.solve(rhs);
  const double resid = (lhs * sol - rhs).norm();
  if (!(resid <= 1e-8 * std::max(1.0, rhs.norm()))) {
    throw Error("compatible W search failed: residual " + std::to_string(resid));
  }
  const Matrix b_r = sol.bottomRows(nc);
  if (rcond_estimate(b_r) < kSingularRcond) {
    throw Error("compatible W search failed: scaling B_R is singular");
  }
  return sol.topRows(nf);
}

// ---------------------------------------------------------------------------
// Ideal pairs

std::string_view to_string(Anchor anchor) {
  return anchor == Anchor::PfromQ ? "p_ideal_q" : "r_ideal_q";
}

Matrix companion_matrix(const Matrix& a, const Matrix& m, const Matrix& q, Anchor anchor) {
  if (anchor == Anchor::PfromQ) {
    return a * solve_checked(m, q.transpose(), "M");
  }
  return q.transpose() * solve_checked(a.transpose(), m, "A");
}

TransferPair ideal_pair(const Matrix& a, const CFPartition& part, const Matrix& m, Anchor anchor,
                        const Matrix& q) {
  const Matrix companion = companion_matrix(a, m, q, anchor);
  const PartitionedMatrix qp(q, part);
  const PartitionedMatrix cp(companion, part);
  try {
    if (anchor == Anchor::PfromQ) return TransferPair{ideal_r(cp), ideal_p(qp), part, std::nullopt};
    return TransferPair{ideal_r(qp), ideal_p(cp), part, std::nullopt};
  } catch (const SingularMatrixError&) {
    throw SingularMatrixError("ideal companion undefined for this splitting");
  }
}

TransferPair ideal_pair(const Matrix& a, const CFPartition& part, const NormSpec& norm,
                        Anchor anchor, const QChoice& q) {
  return ideal_pair(a, part, realize_norm(norm, a), anchor, realize_q(q, a));
}

// ---------------------------------------------------------------------------
// Catalog

std::string_view to_string(CellKind kind) {
  switch (kind) {
    case CellKind::Single: return "single";
    case CellKind::Double: return "double";
    case CellKind::Multi: return "multi";
  }
  return "?";
}

namespace {

constexpr std::array<NormTag, 5> kRows = {NormTag::Identity, NormTag::A, NormTag::Asym,
                                          NormTag::AstarA, NormTag::AstarAsymInvA};
constexpr std::array<QTag, 5> kCols = {QTag::Identity, QTag::Aop, QTag::Asym, QTag::AstarA,
                                       QTag::AAstar};

using S = CellKind;
constexpr auto X = CellKind::Single;
constexpr auto D = CellKind::Double;
constexpr auto N = CellKind::Multi;

// A M^{-1} Q^*, simplified.
constexpr std::array<std::array<std::string_view, 5>, 5> kTable1Expr = {{
    {"A", "AA*", "AA_sym", "AA*A", "A^2A*"},
    {"I", "A", "A", "A^2", "A^2"},
    {"AA_sym^-1", "AA_sym^-1A*", "A", "AA_sym^-1A*A", "AA_sym^-1AA*"},
    {"A^-*", "I", "A^-*A_sym", "A", "A^-*AA*"},
    {"A_symA^-*", "A_sym", "A_symA^-*A_sym", "A_symA", "A_symA^-*AA*"},
}};
constexpr std::array<std::array<S, 5>, 5> kTable1Kind = {{
    {X, D, D, N, N},
    {X, X, X, D, D},
    {N, N, X, N, N},
    {N, X, N, X, N},
    {N, X, N, D, N},
}};

// Q^* A^{-*} M, simplified.
constexpr std::array<std::array<std::string_view, 5>, 5> kTable2Expr = {{
    {"A^-*", "I", "A_symA^-*", "A*AA^-*", "A"},
    {"I", "A", "A", "A^2", "A^2"},
    {"A^-*A_sym", "A_sym", "A_symA^-*A_sym", "A*AA^-*A_sym", "AA_sym"},
    {"A", "A*A", "A_symA", "A*A^2", "AA*A"},
    {"A_sym^-1A", "A*A_sym^-1A", "A", "A*AA_sym^-1A", "AA*A_sym^-1A"},
}};
constexpr std::array<std::array<S, 5>, 5> kTable2Kind = {{
    {N, X, N, N, X},
    {X, X, X, D, D},
    {N, X, N, N, D},
    {X, D, D, N, N},
    {N, N, X, N, N},
}};

std::vector<CatalogCell> build_cells() {
  std::vector<CatalogCell> cells;
  cells.reserve(50);
  for (int table : {1, 2}) {
    for (std::size_t i = 0; i < kRows.size(); ++i) {
      for (std::size_t j = 0; j < kCols.size(); ++j) {
        CatalogCell c;
        c.table = table;
        c.norm = kRows[i];
        c.q = kCols[j];
        c.anchor = table == 1 ? Anchor::PfromQ : Anchor::RfromQ;
        c.companion_expr = table == 1 ? kTable1Expr[i][j] : kTable2Expr[i][j];
        c.kind = table == 1 ? kTable1Kind[i][j] : kTable2Kind[i][j];
        cells.push_back(c);
      }
    }
  }
  return cells;
}

}  // namespace

const std::vector<CatalogCell>& catalog_cells() {
  static const std::vector<CatalogCell> cells = build_cells();
  return cells;
}

std::vector<CatalogEntry> catalog_pairs(const Matrix& a, const CFPartition& part,
                                        unsigned threads) {
  if (a.rows() != a.cols() || a.rows() != part.size()) {
    throw DimensionError("catalog: A does not match the partition");
  }
  if (rcond_estimate(a) < kSingularRcond) throw SingularMatrixError("catalog: A is singular");

  const auto& cells = catalog_cells();
  std::vector<CatalogEntry> out(cells.size());
  parallel_for(
      cells.size(),
      [&](std::size_t k) {
        CatalogEntry& e = out[k];
        e.cell = cells[k];
        try {
          Matrix m = realize_norm(NormSpec::of(e.cell.norm), a);
          const Matrix q = realize_q(QChoice::of(e.cell.q), a);
          e.companion = companion_matrix(a, m, q, e.cell.anchor);
          e.pair = ideal_pair(a, part, m, e.cell.anchor, q);
          e.m = std::move(m);
        } catch (const Error& err) {
          e.skipped = true;
          e.reason = err.what();
          e.companion.reset();
          e.pair.reset();
          e.m.reset();
        }
      },
      threads);
  return out;
}

// ---------------------------------------------------------------------------
// Change of basis

TransferPair change_of_basis_pair(const Matrix& a, const CFPartition& part, BasisTarget target) {
  const PartitionedMatrix ap(a, part);
  if (rcond_estimate(ap.cc()) < kSingularRcond) throw SingularMatrixError("A_cc is singular");
  const Matrix cols = part.stack_rows(ap.fc(), ap.cc());                          // [A_fc; A_cc]
  const Matrix rows_t = part.stack_rows(ap.cf().transpose(), ap.cc().transpose());  // [A_cf^*; A_cc^*]
  if (target == BasisTarget::AinvStar) {
    return TransferPair{cols, rows_t, part, CBlocks{ap.cc(), ap.cc().transpose()}};
  }
  return TransferPair{rows_t, cols, part, CBlocks{ap.cc().transpose(), ap.cc()}};
}

}  // namespace compatamg
