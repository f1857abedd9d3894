#include "compatamg/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

namespace compatamg {

CoarseCorrection build_pi(const Matrix& a, const TransferPair& pair) {
  const Index n = pair.part.size();
  if (a.rows() != n || a.cols() != n) throw DimensionError("build_pi: A does not match the pair");
  const Matrix rta = pair.r.transpose() * a;
  Matrix k = rta * pair.p;
  Matrix coarse_solve;
  try {
    coarse_solve = solve_checked(k, rta, "R^*AP");
  } catch (const SingularMatrixError&) {
    throw SingularMatrixError("R and P incompatible with A on this splitting (R^*AP singular)");
  }
  return CoarseCorrection{pair.p * coarse_solve, CoarseOperator{std::move(k)}};
}

double pi_m_norm(const Matrix& pi, const Matrix& m) { return operator_m_norm(pi, m); }

double nonorth_measure(const Matrix& pi, const Matrix& m) {
  require_spd(m, "M");
  const Matrix perp = orthogonal_complement(pi);
  if (perp.cols() == 0) return 0.0;
  // M-orthonormal basis of M^{-1} range(Pi)^perp.
  const Matrix basis = m.llt().solve(perp);
  const Matrix gram = symmetric_part(basis.transpose() * m * basis);
  const Matrix basis_m = basis * spd_inv_sqrt(gram);
  return spectral_norm(spd_sqrt(m) * pi * basis_m);
}

double min_canonical_angle(const Matrix& pi, const Matrix& m) {
  require_spd(m, "M");
  const Index n = pi.rows();
  const Matrix range_basis = orthonormal_range(pi);
  const Matrix null_basis = orthonormal_range(Matrix::Identity(n, n) - pi);
  if (range_basis.cols() == 0 || null_basis.cols() == 0) return std::numbers::pi / 2;

  const Matrix s = spd_sqrt(m);
  const Matrix x = orthonormal_range(s * range_basis);
  const Matrix y = orthonormal_range(s * null_basis);
  Eigen::JacobiSVD<Matrix> svd(x.transpose() * y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector xv = x * svd.matrixU().col(0);
  const Vector yv = y * svd.matrixV().col(0);
  const double c = std::abs(xv.dot(yv));
  const double sn = (yv - xv.dot(yv) * xv).norm();
  return std::atan2(sn, c);
}

OrthogonalityChecks orthogonality_checks(const Matrix& pi, const Matrix& m, double tol) {
  require_spd(m, "M");
  if (pi.rows() != m.rows() || pi.cols() != m.cols()) {
    throw DimensionError("orthogonality_checks: Pi and M differ in size");
  }
  OrthogonalityChecks out;
  const Index n = pi.rows();
  const Matrix mpi = m * pi;

  const double mpi_norm = mpi.norm();
  out.symmetry_residual = mpi_norm > 0 ? (mpi - mpi.transpose()).norm() / mpi_norm : 0.0;
  out.m_pi_symmetric = out.symmetry_residual <= tol;

  const double pi_norm = pi.norm();
  const Matrix adj = m_adjoint(pi, m);
  out.adjoint_residual = pi_norm > 0 ? (pi - adj).norm() / pi_norm : 0.0;
  out.adjoint_fixed_point = out.adjoint_residual <= tol;

  out.rank = numerical_rank(pi);
  out.joint_rank = out.rank == 0 ? 0 : joint_rank(mpi, pi.transpose(), tol);
  out.range_match = out.joint_rank == out.rank;

  std::mt19937_64 rng(kProbeSeed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Matrix eye = Matrix::Identity(n, n);
  double worst = 0.0;
  for (int k = 0; k < kProbeCount; ++k) {
    Vector x(n), y(n);
    for (Index i = 0; i < n; ++i) x(i) = unit(rng);
    for (Index i = 0; i < n; ++i) y(i) = unit(rng);
    const Vector u = pi * x;
    const Vector v = (eye - pi) * y;
    const double denom = m_norm(u, m) * m_norm(v, m);
    if (denom <= 1e-300) continue;
    worst = std::max(worst, std::abs(m_inner(u, v, m)) / denom);
  }
  out.bilinear_max = worst;
  out.bilinear_vanishes = worst <= tol;
  return out;
}

bool verify_compat_equation(const Matrix& a, const Matrix& m, const TransferPair& pair,
                            double rank_tol) {
  const Index n = pair.part.size();
  if (a.rows() != n || m.rows() != n || pair.p.rows() != n || pair.r.rows() != n) {
    throw DimensionError("verify_compat_equation: shapes disagree");
  }
  return joint_rank(m * pair.p, a.transpose() * pair.r, rank_tol) == pair.num_coarse();
}

ProjectionReport analyze_projection(const Matrix& pi, const Matrix& m, double tol) {
  ProjectionReport rep;
  rep.pi = pi;
  rep.m_norm = pi_m_norm(pi, m);
  rep.nonorth_sup = nonorth_measure(pi, m);
  rep.min_angle = min_canonical_angle(pi, m);
  rep.is_m_orthogonal = std::abs(rep.m_norm - 1.0) <= tol;
  const Matrix mpi = m * pi;
  const double nrm = mpi.norm();
  rep.symmetry_residual = nrm > 0 ? (mpi - mpi.transpose()).norm() / nrm : 0.0;
  return rep;
}

PairEvaluation evaluate_pair(const Matrix& a, const Matrix& m, const TransferPair& pair,
                             double tol) {
  PairEvaluation ev;
  const Matrix pi = build_pi(a, pair).pi;
  ev.report = analyze_projection(pi, m, tol);
  ev.checks = orthogonality_checks(pi, m, tol);
  ev.compat_eq = verify_compat_equation(a, m, pair);
  const double pn = pi.norm();
  ev.idempotence_residual = pn > 0 ? (pi * pi - pi).norm() / pn : 0.0;
  ev.complement_m_norm = operator_m_norm(Matrix::Identity(pi.rows(), pi.cols()) - pi, m);
  return ev;
}

std::string to_json(const ProjectionReport& report, std::string_view norm,
                    std::string_view provenance) {
  nlohmann::ordered_json j;
  j["norm"] = norm;
  j["provenance"] = provenance;
  j["n"] = report.pi.rows();
  j["pi_norm"] = report.m_norm;
  j["nonorth_sup"] = report.nonorth_sup;
  j["min_angle"] = report.min_angle;
  j["is_m_orthogonal"] = report.is_m_orthogonal;
  j["symmetry_residual"] = report.symmetry_residual;
  return j.dump();
}

}  // namespace compatamg
