#include <doctest.h>

#include <json.hpp>
#include <numbers>

#include "compatamg/problems.hpp"
#include "compatamg/projection.hpp"
#include "oracles.hpp"

using namespace compatamg;

namespace {

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

const Matrix kSkewPi = m2(0, 1, 0, 1);
const Matrix kOrthPi = m2(0, 0, 0, 1);
const Matrix kEye2 = Matrix::Identity(2, 2);

/// Random (A, Z, W, M) cases with a nonsingular coarse operator.
struct Case {
  Matrix a, m, pi;
  TransferPair pair;
};

Case random_case(std::mt19937_64& rng, Index n = 12) {
  std::vector<Index> f, c;
  for (Index i = 0; i < n; ++i) (i % 3 == 1 ? c : f).push_back(i);
  const CFPartition part(n, f, c);
  while (true) {
    const Matrix a = oracle::random_nonsym(n, rng);
    const Matrix z = oracle::random_matrix(part.num_f(), part.num_c(), rng);
    const Matrix w = oracle::random_matrix(part.num_f(), part.num_c(), rng);
    auto pair = TransferPair::from_blocks(z, w, part);
    const Matrix k = pair.r.transpose() * a * pair.p;
    if (rcond_estimate(k) < 1e-6) continue;
    return Case{a, oracle::random_spd(n, rng), oracle::pi(a, pair.r, pair.p), std::move(pair)};
  }
}

}  // namespace

TEST_CASE("build_pi") {
  SUBCASE("2x2 hand computation") {
    const CFPartition part(2, {0}, {1});
    const auto pair = TransferPair::from_blocks(Matrix::Ones(1, 1), Matrix::Zero(1, 1), part);
    const auto cc = build_pi(m2(1, 0, -1, 1), pair);
    CHECK(cc.pi.isApprox(kOrthPi, 1e-15));
    CHECK(cc.coarse.k(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("R = P on SPD A") {
    ProblemSpec spec;
    spec.kind = ProblemKind::Laplacian1D;
    spec.n = 10;
    const Matrix a = generate(spec);
    std::mt19937_64 rng(41);
    const CFPartition part = default_splitting(10);
    const Matrix w = oracle::random_matrix(5, 5, rng);
    const auto pair = TransferPair::from_blocks(w, w, part);
    const Matrix api = a * build_pi(a, pair).pi;
    CHECK((api - api.transpose()).norm() <= 1e-12 * api.norm());
  }
  SUBCASE("trace equals n_c and idempotence") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
      const Case c = random_case(rng);
      const Matrix pi = build_pi(c.a, c.pair).pi;
      CHECK(pi.trace() == doctest::Approx(static_cast<double>(c.pair.num_coarse())).epsilon(1e-10));
      CHECK((pi * pi - pi).norm() <= 1e-10 * pi.norm());
      CHECK(oracle::rel_diff(pi, c.pi) <= 1e-9);
    }
  }
  SUBCASE("singular coarse operator") {
    const CFPartition part(2, {0}, {1});
    // R^T A P = 0 for A = [[0,1],[1,0]], R = [0;1], P = [0;1]
    const auto pair = TransferPair::from_blocks(Matrix::Zero(1, 1), Matrix::Zero(1, 1), part);
    try {
      build_pi(m2(0, 1, 1, 0), pair);
      FAIL("expected SingularMatrixError");
    } catch (const SingularMatrixError& e) {
      CHECK(std::string(e.what()).find("R and P incompatible with A on this splitting") != std::string::npos);
    }
  }
}

TEST_CASE("pi_m_norm examples") {
  CHECK(pi_m_norm(kOrthPi, kEye2) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pi_m_norm(kSkewPi, kEye2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Case c = random_case(rng);
    const Matrix eye = Matrix::Identity(c.pi.rows(), c.pi.cols());
    const double np = pi_m_norm(c.pi, c.m);
    CHECK(np == doctest::Approx(oracle::m_norm_op(c.pi, c.m)).epsilon(1e-9));
    CHECK(std::abs(np - pi_m_norm(eye - c.pi, c.m)) <= 1e-10 * np);
    CHECK(std::abs(np - pi_m_norm(m_adjoint(c.pi, c.m), c.m)) <= 1e-10 * np);
    CHECK(np >= 1.0);
  }
}

TEST_CASE("nonorth_measure") {
  CHECK(nonorth_measure(kOrthPi, kEye2) <= 1e-10);
  CHECK(nonorth_measure(kSkewPi, kEye2) == doctest::Approx(1.0).epsilon(1e-12));
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    const Case c = random_case(rng);
    const double np = pi_m_norm(c.pi, c.m);
    const double nu = nonorth_measure(c.pi, c.m);
    CHECK(nu == doctest::Approx(oracle::nonorth(c.pi, c.m)).epsilon(1e-7));
    CHECK(std::abs(std::sqrt(np * np - 1) - nu) <= 1e-8 * np);
  }
  CHECK_THROWS_AS(nonorth_measure(kSkewPi, m2(1, 2, 2, 1)), NotSpdError);
}

TEST_CASE("min_canonical_angle") {
  CHECK(min_canonical_angle(kOrthPi, kEye2) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  CHECK(min_canonical_angle(kSkewPi, kEye2) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-12));
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 30; ++trial) {
    const Case c = random_case(rng);
    const double np = pi_m_norm(c.pi, c.m);
    const double th = min_canonical_angle(c.pi, c.m);
    CHECK(th > 0);
    CHECK(th <= std::numbers::pi / 2 + 1e-15);
    CHECK(std::cos(th) == doctest::Approx(oracle::cos_min_angle(c.pi, c.m)).epsilon(1e-7));
    CHECK(np * std::sin(th) == doctest::Approx(1.0).epsilon(1e-8));
    const double cot = 1 / std::tan(th);
    CHECK(np * np == doctest::Approx(1 + cot * cot).epsilon(1e-8));
  }
}

TEST_CASE("orthogonality_checks") {
  CHECK(orthogonality_checks(kOrthPi, kEye2, 1e-8).all());
  const auto skew = orthogonality_checks(kSkewPi, kEye2, 1e-8);
  CHECK(skew.none());

  SUBCASE("diagonal M against the skew projection") {
    // Pi = [[0,1],[0,1]] is never M-orthogonal for diagonal M: M Pi = [[0,m1],[0,m2]].
    for (double m1 : {0.5, 1.0, 3.0}) {
      Matrix m = Matrix::Zero(2, 2);
      m.diagonal() << m1, 2.0;
      const auto ch = orthogonality_checks(kSkewPi, m, 1e-8);
      CHECK(ch.consistent());
      CHECK(ch.all() == (nonorth_measure(kSkewPi, m) <= 1e-8));
    }
    // M Pi = [[0,0],[0,1]] for M = [[1,-1],[-1,2]].
    const Matrix m = m2(1, -1, -1, 2);
    const auto ch = orthogonality_checks(kSkewPi, m, 1e-8);
    CHECK(ch.all());
    CHECK(nonorth_measure(kSkewPi, m) <= 1e-8);
  }
  SUBCASE("random cases never pass") {
    std::mt19937_64 rng(46);
    for (int trial = 0; trial < 20; ++trial) {
      const Case c = random_case(rng);
      const auto ch = orthogonality_checks(c.pi, c.m, 1e-8);
      CHECK(ch.none());
    }
  }
  CHECK_THROWS_AS(orthogonality_checks(kOrthPi, m2(1, 2, 2, 1), 1e-8), NotSpdError);
}

TEST_CASE("verify_compat_equation") {
  ProblemSpec spec;
  spec.kind = ProblemKind::Advection1D;
  spec.n = 16;
  const Matrix a = generate(spec);
  const CFPartition part = default_splitting(16);
  const PartitionedMatrix pa(a, part);
  const Matrix eye = Matrix::Identity(16, 16);

  const auto red1 = TransferPair::from_blocks(ideal_z(pa), Matrix::Zero(8, 8), part);
  CHECK(verify_compat_equation(a, eye, red1));

  std::mt19937_64 rng(47);
  const Matrix dense = oracle::random_nonsym(16, rng);
  const auto zero = TransferPair::from_blocks(Matrix::Zero(8, 8), Matrix::Zero(8, 8), part);
  CHECK_FALSE(verify_compat_equation(dense, eye, zero));

  const auto air = TransferPair::from_blocks(ideal_z(PartitionedMatrix(dense, part)), Matrix::Zero(8, 8), part);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix m = part.unpermute([&] {
      Matrix blk = Matrix::Zero(16, 16);
      blk.topLeftCorner(8, 8) = oracle::random_spd(8, rng);
      blk.bottomRightCorner(8, 8) = oracle::random_spd(8, rng);
      return blk;
    }());
    CHECK(verify_compat_equation(dense, m, air));
    CHECK(pi_m_norm(build_pi(dense, air).pi, m) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("analyze_projection and evaluate_pair") {
  const auto rep = analyze_projection(kSkewPi, kEye2);
  CHECK(rep.m_norm == doctest::Approx(std::sqrt(2.0)));
  CHECK(rep.nonorth_sup == doctest::Approx(1.0));
  CHECK_FALSE(rep.is_m_orthogonal);
  CHECK(rep.symmetry_residual > 0.1);
  CHECK(analyze_projection(kOrthPi, kEye2).is_m_orthogonal);

  const auto j = nlohmann::json::parse(to_json(rep, "identity", "unit"));
  CHECK(j["norm"] == "identity");
  CHECK(j["provenance"] == "unit");
  CHECK(j["pi_norm"].get<double>() == doctest::Approx(std::sqrt(2.0)));
  for (const char* key : {"nonorth_sup", "min_angle", "is_m_orthogonal", "symmetry_residual"}) {
    CHECK(j.contains(key));
  }

  std::mt19937_64 rng(48);
  const Case c = random_case(rng);
  const auto ev = evaluate_pair(c.a, c.m, c.pair);
  CHECK(ev.idempotence_residual <= 1e-10);
  CHECK(ev.complement_m_norm == doctest::Approx(ev.report.m_norm).epsilon(1e-10));
  CHECK_FALSE(ev.compat_eq);
  CHECK(ev.checks.none());
}
