#include "compatamg/solver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "compatamg/projection.hpp"

namespace compatamg {

// ---------------------------------------------------------------------------
// RelaxSpec

std::string to_string(const RelaxSpec& spec) {
  std::ostringstream os;
  switch (spec.kind) {
    case RelaxKind::None: return "none";
    case RelaxKind::FExact: return spec.sweeps == 1 ? "fexact" : "fexact:" + std::to_string(spec.sweeps);
    case RelaxKind::WeightedJacobi: os << "jacobi"; break;
    case RelaxKind::FJacobi: os << "fjacobi"; break;
  }
  os << ':' << std::setprecision(17) << spec.omega << ':' << spec.sweeps;
  return os.str();
}

std::optional<RelaxSpec> parse_relax(std::string_view s) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto pos = s.find(':');
    parts.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  auto parse_double = [](std::string_view t) -> std::optional<double> {
    try {
      std::size_t used = 0;
      const std::string str(t);
      const double v = std::stod(str, &used);
      if (used != str.size()) return std::nullopt;
      return v;
    } catch (...) {
      return std::nullopt;
    }
  };
  auto parse_int = [](std::string_view t) -> std::optional<int> {
    int v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) return std::nullopt;
    return v;
  };

  RelaxSpec spec;
  const auto head = parts[0];
  if (head == "none" && parts.size() == 1) return RelaxSpec::none();
  if (head == "fexact") {
    spec = RelaxSpec::f_exact();
    if (parts.size() == 2) {
      const auto sw = parse_int(parts[1]);
      if (!sw) return std::nullopt;
      spec.sweeps = *sw;
    } else if (parts.size() > 2) {
      return std::nullopt;
    }
    return spec;
  }
  if (head == "jacobi") {
    spec = RelaxSpec::jacobi();
  } else if (head == "fjacobi") {
    spec = RelaxSpec::f_jacobi();
  } else {
    return std::nullopt;
  }
  if (parts.size() > 3) return std::nullopt;
  if (parts.size() >= 2) {
    const auto w = parse_double(parts[1]);
    if (!w) return std::nullopt;
    spec.omega = *w;
  }
  if (parts.size() == 3) {
    const auto sw = parse_int(parts[2]);
    if (!sw) return std::nullopt;
    spec.sweeps = *sw;
  }
  return spec;
}

void validate(const RelaxSpec& spec) {
  if (spec.sweeps < 0) throw ConfigError("relax.sweeps", "must be >= 0");
  if (spec.kind == RelaxKind::WeightedJacobi || spec.kind == RelaxKind::FJacobi) {
    if (!(spec.omega > 0.0 && spec.omega < 2.0)) throw ConfigError("relax.omega", "must lie in (0, 2)");
  }
}

// ---------------------------------------------------------------------------
// Relaxation

namespace {

/// Applies x <- x + N^{-1} (b - A x) for one relaxation kind.
class Relaxer {
 public:
  Relaxer(const Matrix& a, const CFPartition& part, const RelaxSpec& spec)
      : a_(a), part_(part), spec_(spec) {
    validate(spec_);
    const Index n = a.rows();
    switch (spec_.kind) {
      case RelaxKind::None:
        break;
      case RelaxKind::WeightedJacobi:
      case RelaxKind::FJacobi: {
        inv_diag_ = Vector::Zero(n);
        for (Index i = 0; i < n; ++i) {
          if (spec_.kind == RelaxKind::FJacobi && part_.is_cpoint(i)) continue;
          if (a(i, i) == 0.0) {
            throw SingularMatrixError("Jacobi relaxation: zero diagonal entry at " + std::to_string(i));
          }
          inv_diag_(i) = spec_.omega / a(i, i);
        }
        break;
      }
      case RelaxKind::FExact: {
        const PartitionedMatrix ap(a, part);
        if (rcond_estimate(ap.ff()) < kSingularRcond) {
          throw SingularMatrixError("F-relaxation: A_ff is singular");
        }
        ff_lu_ = Eigen::PartialPivLU<Matrix>(ap.ff());
        break;
      }
    }
  }

  /// N^{-1} r
  Matrix apply_inverse(const Matrix& r) const {
    switch (spec_.kind) {
      case RelaxKind::None:
        return Matrix::Zero(r.rows(), r.cols());
      case RelaxKind::WeightedJacobi:
      case RelaxKind::FJacobi:
        return inv_diag_.asDiagonal() * r;
      case RelaxKind::FExact: {
        const Index nc = part_.num_c();
        return part_.stack_rows(ff_lu_->solve(part_.f_rows(r)), Matrix::Zero(nc, r.cols()));
      }
    }
    return r;
  }

  void sweep(Vector& x, const Vector& b) const {
    for (int s = 0; s < spec_.sweeps && spec_.kind != RelaxKind::None; ++s) {
      x += apply_inverse(b - a_ * x);
    }
  }

  Matrix propagator() const {
    const Index n = a_.rows();
    const Matrix single = Matrix::Identity(n, n) - apply_inverse(a_);
    Matrix e = Matrix::Identity(n, n);
    for (int s = 0; s < spec_.sweeps && spec_.kind != RelaxKind::None; ++s) e = single * e;
    return e;
  }

 private:
  const Matrix& a_;
  const CFPartition& part_;
  RelaxSpec spec_;
  Vector inv_diag_;
  std::optional<Eigen::PartialPivLU<Matrix>> ff_lu_;
};

void require_matching(const Matrix& a, const CFPartition& part) {
  if (a.rows() != a.cols() || a.rows() != part.size()) {
    throw DimensionError("A does not match the CF partition");
  }
}

}  // namespace

Matrix relax_propagator(const Matrix& a, const CFPartition& part, const RelaxSpec& spec) {
  require_matching(a, part);
  return Relaxer(a, part, spec).propagator();
}

Matrix two_grid_propagator(const Matrix& a, const TwoGridSpec& spec) {
  const CFPartition& part = spec.pair.part;
  require_matching(a, part);
  const Index n = a.rows();
  const Matrix cgc = Matrix::Identity(n, n) - build_pi(a, spec.pair).pi;
  return relax_propagator(a, part, spec.post) * cgc * relax_propagator(a, part, spec.pre);
}

double conv_factor(const Matrix& e) {
  if (e.rows() != e.cols()) throw DimensionError("conv_factor: E must be square");
  if (e.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> eig(e, false);
  if (eig.info() != Eigen::Success) throw Error("conv_factor: eigenvalue iteration failed");
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double air_cpoint_residual(const Matrix& a, const TransferPair& pair, const Vector& e) {
  if (e.size() != a.rows()) throw DimensionError("air_cpoint_residual: e has wrong length");
  const Vector err = e - build_pi(a, pair).pi * e;
  double worst = 0.0;
  for (Index i : pair.part.cpoints()) worst = std::max(worst, std::abs(err(i)));
  return worst;
}

IterationHistory iterate(const Matrix& a, const TwoGridSpec& spec, const Vector& b,
                         const Vector& x0, int iters) {
  const CFPartition& part = spec.pair.part;
  require_matching(a, part);
  if (b.size() != a.rows() || x0.size() != a.rows()) throw DimensionError("iterate: b/x0 length");
  if (iters < 0) throw ConfigError("iters", "must be >= 0");

  const Relaxer pre(a, part, spec.pre);
  const Relaxer post(a, part, spec.post);
  const Matrix rta = spec.pair.r.transpose() * a;
  const Matrix k = rta * spec.pair.p;
  if (rcond_estimate(k) < kSingularRcond) {
    throw SingularMatrixError("R and P incompatible with A on this splitting (R^*AP singular)");
  }
  const Eigen::PartialPivLU<Matrix> coarse(k);

  IterationHistory hist;
  hist.x = x0;
  hist.residuals.reserve(static_cast<std::size_t>(iters) + 1);
  hist.residuals.push_back((b - a * hist.x).norm());
  for (int it = 0; it < iters; ++it) {
    pre.sweep(hist.x, b);
    const Vector r = b - a * hist.x;
    hist.x += spec.pair.p * coarse.solve(spec.pair.r.transpose() * r);
    post.sweep(hist.x, b);
    hist.residuals.push_back((b - a * hist.x).norm());
  }
  return hist;
}

double asymptotic_rate(const std::vector<double>& residuals, int first, int last) {
  if (residuals.empty()) return 0.0;
  const int top = static_cast<int>(residuals.size()) - 1;
  last = std::min(last, top);
  first = std::min(first, last);
  if (first == last) {
    if (top == 0) return 0.0;
    first = std::max(0, last - 1);
  }
  const double r0 = residuals[static_cast<std::size_t>(first)];
  const double r1 = residuals[static_cast<std::size_t>(last)];
  if (r0 <= 0.0) return 0.0;
  return std::pow(r1 / r0, 1.0 / static_cast<double>(last - first));
}

std::string history_to_csv(const std::vector<double>& residuals) {
  std::ostringstream os;
  os << std::setprecision(17) << "iter,residual\n";
  for (std::size_t k = 0; k < residuals.size(); ++k) os << k << ',' << residuals[k] << '\n';
  return os.str();
}

std::string history_to_json(const std::vector<double>& residuals) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < residuals.size(); ++k) {
    j.push_back({{"iter", k}, {"residual", residuals[k]}});
  }
  return j.dump();
}

}  // namespace compatamg
