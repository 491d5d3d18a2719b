#include "opkit/gamma_fo.hpp"

#include <algorithm>
#include <cmath>

namespace opkit {

const char* verdict_name(GammaVerdict v) {
  switch (v) {
    case GammaVerdict::GammaUnitary: return "GammaUnitary";
    case GammaVerdict::GammaIsometry: return "GammaIsometry";
    case GammaVerdict::PureGammaIsometry: return "PureGammaIsometry";
    case GammaVerdict::ContractionUnrefuted: return "ContractionUnrefuted";
    case GammaVerdict::Refuted: return "Refuted";
  }
  return "Unknown";
}

OperatorTuple OperatorTuple::make(std::vector<Mat> members, Index window) {
  if (members.empty()) fail(ErrorCode::DimensionMismatch, "tuple needs at least one member");
  for (const auto& m : members) require_finite(m, "tuple member");
  OperatorTuple t;
  t.n = static_cast<int>(members.size());
  t.commutation_residual = opkit::commutation_residual(members);
  t.members = std::move(members);
  t.window = window;
  return t;
}

OperatorTuple OperatorTuple::adjoint() const {
  std::vector<Mat> m;
  for (const auto& x : members) m.push_back(x.adjoint());
  // the adjoint of a truncated multiplier is exact on the same leading block
  return make(std::move(m), window);
}

double windowed_norm(const Mat& M, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  if (rows.empty() && cols.empty()) return op_norm(M);
  Mat sub(rows.empty() ? M.rows() : static_cast<Index>(rows.size()), cols.empty() ? M.cols() : static_cast<Index>(cols.size()));
  for (Index i = 0; i < sub.rows(); ++i)
    for (Index j = 0; j < sub.cols(); ++j)
      sub(i, j) = M(rows.empty() ? i : rows[static_cast<std::size_t>(i)], cols.empty() ? j : cols[static_cast<std::size_t>(j)]);
  return op_norm(sub);
}

namespace {

double lead_norm(const Mat& M, Index w) { return op_norm(M.topLeftCorner(std::min(w, M.rows()), std::min(w, M.cols()))); }

}  // namespace

GammaClass classify_gamma_tuple(const OperatorTuple& t, const Tolerances& tol, int samples, std::uint64_t seed) {
  GammaClass out;
  const int n = t.n;
  const Index dim = t.dim(), w = t.trusted();
  const Mat& P = t.P();
  const Mat I = identity(dim);
  out.evidence["commutation"] = t.commutation_residual;
  if (t.commutation_residual > tol.residual_tol) {
    out.verdict = GammaVerdict::Refuted;
    out.one_sided = false;
    return out;
  }
  double iso = lead_norm(P.adjoint() * P - I, w);
  double coiso = lead_norm(P * P.adjoint() - I, w);
  double rel = 0;
  for (int i = 1; i < n; ++i) rel = std::max(rel, lead_norm(t.S(i) - t.S(n - i).adjoint() * P, w));
  out.evidence["isometry"] = iso;
  out.evidence["coisometry"] = coiso;
  out.evidence["relation"] = rel;

  bool sub_ok = true;
  if (n == 2) {
    double s = op_norm(0.5 * t.S(1));
    out.evidence["scaled_norm"] = s;
    sub_ok = s <= 1 + tol.residual_tol;
    out.one_sided = false;
  } else if (n > 2) {
    std::vector<Mat> scaled;
    for (int i = 1; i < n; ++i) scaled.push_back(static_cast<double>(n - i) / n * t.S(i));
    auto w2 = refute_gamma_contraction(scaled, samples, seed ^ 0x9e3779b97f4a7c15ULL);
    sub_ok = !w2.has_value();
    out.evidence["scaled_refuted"] = sub_ok ? 0.0 : 1.0;
  }

  if (iso <= tol.residual_tol && rel <= tol.residual_tol && sub_ok) {
    if (coiso <= tol.residual_tol && t.window == 0) {
      out.verdict = GammaVerdict::GammaUnitary;
      return out;
    }
    Mat pk = P.adjoint();
    double best = op_norm(pk);
    for (Index k = 2; k <= 4 * dim && best > tol.residual_tol; ++k) {
      pk = pk * P.adjoint();
      best = std::min(best, op_norm(pk));
    }
    out.evidence["adjoint_power_decay"] = best;
    out.verdict = best <= tol.residual_tol ? GammaVerdict::PureGammaIsometry : GammaVerdict::GammaIsometry;
    return out;
  }
  auto wit = refute_gamma_contraction(t.members, samples, seed);
  if (wit) {
    out.verdict = GammaVerdict::Refuted;
    out.witness = wit;
    out.evidence["witness_norm"] = wit->tuple_norm;
    out.evidence["witness_sup"] = wit->sup;
  } else {
    out.verdict = GammaVerdict::ContractionUnrefuted;
  }
  return out;
}

double fo_reconstruction_residual(const OperatorTuple& t, const std::vector<Mat>& A, const DefectData& dd) {
  const int n = t.n;
  const Mat& Q = dd.space.basis;
  Mat Dq = Q * dd.values.cast<cplx>().asDiagonal();  // D_P restricted to its range
  double worst = 0;
  for (int i = 1; i < n; ++i) {
    Mat R = t.S(i) - t.S(n - i).adjoint() * t.P();
    Mat rec = Q.cols() ? Mat(Dq * A[static_cast<std::size_t>(i - 1)] * Dq.adjoint()) : Mat::Zero(R.rows(), R.cols());
    worst = std::max(worst, lead_norm(R - rec, t.trusted()));
  }
  return worst;
}

FoTuple solve_fo_tuple(const OperatorTuple& t, const Tolerances& tol, const DefectData* defect_override) {
  if (t.n < 2) fail(ErrorCode::DimensionMismatch, "fundamental operators need n >= 2");
  FoTuple out;
  out.n = t.n;
  out.defect = defect_override ? *defect_override : defect(t.P(), tol);
  const Mat& Q = out.defect.space.basis;
  const Index d = Q.cols();
  out.defect_dim = d;
  Eigen::VectorXd inv = out.defect.values.cwiseInverse();
  for (int i = 1; i < t.n; ++i) {
    Mat R = t.S(i) - t.S(t.n - i).adjoint() * t.P();
    out.ops.push_back(d ? Mat(inv.cast<cplx>().asDiagonal() * (Q.adjoint() * R * Q) * inv.cast<cplx>().asDiagonal())
                        : Mat(0, 0));
  }
  out.residual = fo_reconstruction_residual(t, out.ops, out.defect);
  if (out.residual > tol.residual_tol)
    fail(ErrorCode::ResidualTooLarge, "S_i - S_{n-i}* P leaves the range of the defect sandwich, residual " +
                                          std::to_string(out.residual));
  return out;
}

FoEquationsSolution solve_fo_equations(const OperatorTuple& t, const Tolerances& tol, const DefectData* defect_override) {
  if (t.n < 2) fail(ErrorCode::DimensionMismatch, "fundamental operators need n >= 2");
  const int n = t.n, m = n - 1;
  DefectData dd = defect_override ? *defect_override : defect(t.P(), tol);
  const Mat& Q = dd.space.basis;
  const Index d = Q.cols(), dim = t.dim();
  FoEquationsSolution out;
  if (d == 0) {
    out.ops.assign(static_cast<std::size_t>(m), Mat(0, 0));
    for (int i = 1; i < n; ++i)
      out.residual = std::max(out.residual, lead_norm(t.S(i) - t.S(n - i).adjoint() * t.P(), t.trusted()));
    if (out.residual > tol.residual_tol) fail(ErrorCode::ResidualTooLarge, "no defect space but S_i != S_{n-i}* P");
    return out;
  }
  Mat L = dd.values.cast<cplx>().asDiagonal() * Q.adjoint();  // D_P seen from its range
  Mat M = L * t.P();
  // D_P S_i = X_i D_P + X_{n-i}* D_P P, split into real and imaginary parts
  const Index eq_block = d * dim, unk_block = d * d;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * m * eq_block, 2 * m * unk_block);
  Eigen::VectorXd rhs(2 * m * eq_block);
  auto put = [&](Index row_block, Index col, const Mat& v) {
    for (Index c = 0; c < v.cols(); ++c)
      for (Index r = 0; r < d; ++r) {
        Index k = c * d + r;
        G(2 * row_block * eq_block + k, col) += v(r, c).real();
        G((2 * row_block + 1) * eq_block + k, col) += v(r, c).imag();
      }
  };
  for (int j = 1; j < n; ++j)
    for (Index a = 0; a < d; ++a)
      for (Index b = 0; b < d; ++b)
        for (int part = 0; part < 2; ++part) {
          Index col = 2 * (j - 1) * unk_block + part * unk_block + b * d + a;
          Mat U = Mat::Zero(d, d);
          U(a, b) = part == 0 ? cplx(1, 0) : cplx(0, 1);
          for (int i = 1; i < n; ++i) {
            if (i == j) put(i - 1, col, U * L);
            if (n - i == j) put(i - 1, col, U.adjoint() * M);
          }
        }
  for (int i = 1; i < n; ++i) {
    Mat v = L * t.S(i);
    for (Index c = 0; c < dim; ++c)
      for (Index r = 0; r < d; ++r) {
        rhs(2 * (i - 1) * eq_block + c * d + r) = v(r, c).real();
        rhs((2 * (i - 1) + 1) * eq_block + c * d + r) = v(r, c).imag();
      }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  out.min_singular = sv(sv.size() - 1);
  out.rank_deficient = out.min_singular <= 1e-10 * std::max(1.0, sv(0));
  svd.setThreshold(1e-10);
  Eigen::VectorXd x = svd.solve(rhs);
  for (int j = 1; j < n; ++j) {
    Mat X(d, d);
    for (Index a = 0; a < d; ++a)
      for (Index b = 0; b < d; ++b)
        X(a, b) = cplx(x(2 * (j - 1) * unk_block + b * d + a), x(2 * (j - 1) * unk_block + unk_block + b * d + a));
    out.ops.push_back(X);
  }
  for (int i = 1; i < n; ++i) {
    Mat r = L * t.S(i) - out.ops[static_cast<std::size_t>(i - 1)] * L -
            out.ops[static_cast<std::size_t>(n - i - 1)].adjoint() * M;
    out.residual = std::max(out.residual, op_norm(r.leftCols(t.trusted())));
  }
  if (out.residual > tol.residual_tol)
    fail(ErrorCode::ResidualTooLarge, "fundamental equations residual " + std::to_string(out.residual));
  return out;
}

GammaGenerator parse_gamma_generator(const std::string& id) {
  if (id == "symmetrized-unitaries" || id == "a") return GammaGenerator::SymmetrizedUnitaries;
  if (id == "binomial-isometry" || id == "b") return GammaGenerator::BinomialIsometry;
  if (id == "pure-compression" || id == "c") return GammaGenerator::PureCompression;
  if (id == "scalar" || id == "d") return GammaGenerator::ScalarPoint;
  fail(ErrorCode::InvalidParams, "unknown generator '" + id + "'");
}

namespace {

std::vector<Mat> elementary_symmetric(const std::vector<Mat>& z) {
  const Index dim = z.front().rows();
  std::vector<Mat> e(z.size() + 1, Mat::Zero(dim, dim));
  e[0] = identity(dim);
  for (std::size_t k = 0; k < z.size(); ++k)
    for (std::size_t j = k + 1; j >= 1; --j) e[j] += e[j - 1] * z[k];
  return std::vector<Mat>(e.begin() + 1, e.end());
}

bool well_separated_defect(const Mat& P) {
  Eigen::SelfAdjointEigenSolver<Mat> a(identity(P.rows()) - P.adjoint() * P, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Mat> b(identity(P.rows()) - P * P.adjoint(), Eigen::EigenvaluesOnly);
  for (auto* es : {&a, &b})
    for (Index i = 0; i < es->eigenvalues().size(); ++i) {
      double v = es->eigenvalues()(i);
      if (v > 1e-10 && v < 1e-6) return false;
    }
  return true;
}

}  // namespace

OperatorTuple make_gamma_instance(GammaGenerator kind, const GammaGeneratorParams& p, std::uint64_t seed) {
  if (p.n < 2) fail(ErrorCode::InvalidParams, "n must be at least 2");
  Rng rng(seed);
  switch (kind) {
    case GammaGenerator::SymmetrizedUnitaries: {
      if (p.dim < 1) fail(ErrorCode::InvalidParams, "dim must be positive");
      Mat U = rng.unitary(p.dim);
      std::vector<Mat> z;
      for (int j = 0; j < p.n; ++j) {
        Mat D = Mat::Zero(p.dim, p.dim);
        for (Index i = 0; i < p.dim; ++i) D(i, i) = rng.unit_phase();
        z.push_back(U * D * U.adjoint());
      }
      return OperatorTuple::make(elementary_symmetric(z));
    }
    case GammaGenerator::BinomialIsometry: {
      if (p.N < 1 || p.block < 1 || p.margin < 0 || p.margin > p.N)
        fail(ErrorCode::InvalidParams, "binomial generator needs N >= 1, block >= 1, 0 <= margin <= N");
      TruncationOrder tr{p.N, 0};
      auto mz = materialize(StructuredOperator::make_hardy(
                                TrigPolySymbol::from_map(p.block, {{1, identity(p.block)}})), tr);
      std::vector<Mat> m;
      const Mat I = identity(mz.rows());
      for (int i = 1; i < p.n; ++i) m.push_back(binomial(p.n - 1, i) * I + binomial(p.n - 1, i - 1) * mz);
      m.push_back(mz);
      return OperatorTuple::make(std::move(m), static_cast<Index>(p.N + 1 - p.margin) * p.block);
    }
    case GammaGenerator::PureCompression: {
      if (p.dim < 1 || p.dim > 8) fail(ErrorCode::InvalidParams, "pure generator needs 1 <= dim <= 8");
      if (!(p.radius > 0 && p.radius < 1)) fail(ErrorCode::InvalidParams, "radius must lie in (0, 1)");
      for (int attempt = 0; attempt < 100; ++attempt) {
        int l = (p.dim % 2 == 0 && rng.integer(0, 1)) ? 2 : 1;
        int mdim = p.dim / l;
        Mat T = rng.contraction(mdim, p.radius);
        Mat W = rng.unitary(l);
        const Mat Im = identity(mdim);
        std::vector<Mat> z;
        for (int j = 0; j < p.n; ++j) {
          cplx a = std::polar(rng.uniform(0, 0.5), rng.uniform(0, 2 * M_PI));
          Mat b = (T - a * Im) * (Im - std::conj(a) * T).inverse() * rng.unit_phase();
          Mat D = Mat::Zero(l, l);
          for (Index i = 0; i < l; ++i) D(i, i) = rng.unit_phase();
          z.push_back(kron(b, W * D * W.adjoint()));
        }
        auto e = elementary_symmetric(z);
        if (!well_separated_defect(e.back())) continue;
        return OperatorTuple::make(std::move(e));
      }
      fail(ErrorCode::InvalidParams, "could not draw a well-conditioned pure instance");
    }
    case GammaGenerator::ScalarPoint: {
      std::vector<cplx> coords = p.point;
      if (coords.empty()) {
        std::vector<cplx> z(static_cast<std::size_t>(p.n));
        for (auto& v : z) v = std::polar(rng.uniform(0, 0.95), rng.uniform(0, 2 * M_PI));
        coords = symmetrize(z).coords;
      }
      if (static_cast<int>(coords.size()) != p.n) fail(ErrorCode::InvalidParams, "point must have n coordinates");
      std::vector<Mat> m;
      for (auto c : coords) m.push_back(Mat::Constant(1, 1, c));
      return OperatorTuple::make(std::move(m));
    }
  }
  fail(ErrorCode::InvalidParams, "unknown generator");
}

std::vector<Mat> sigma_tuple(int which, const std::vector<Mat>& ops, cplx z) {
  const int n = static_cast<int>(ops.size()) + 1;
  std::vector<Mat> out;
  for (int i = 1; i < n; ++i) {
    const Mat& a = ops[static_cast<std::size_t>(i - 1)];
    const Mat& b = ops[static_cast<std::size_t>(n - i - 1)];
    double w = static_cast<double>(n - i) / n;
    out.push_back(which == 1 ? Mat(w * (a + z * b.adjoint())) : Mat(w * (a.adjoint() + z * b)));
  }
  return out;
}

bool sigma_unrefuted(int which, const std::vector<Mat>& ops, const Tolerances& tol, int samples, std::uint64_t seed,
                     double* worst) {
  double bad = 0;
  bool ok = true;
  if (ops.empty() || ops.front().size() == 0) {
    if (worst) *worst = 0;
    return true;
  }
  std::uint64_t s = seed;
  for (cplx z : disk_grid()) {
    auto sig = sigma_tuple(which, ops, z);
    if (sig.size() == 1) {
      double excess = op_norm(sig.front()) - 1.0;
      bad = std::max(bad, excess);
      if (excess > tol.residual_tol) ok = false;
      continue;
    }
    double c = commutation_residual(sig);
    bad = std::max(bad, c);
    if (c > tol.residual_tol) {
      ok = false;
      continue;
    }
    if (auto w = refute_gamma_contraction(sig, samples, ++s)) {
      ok = false;
      bad = std::max(bad, w->tuple_norm / w->sup - 1.0);
    }
  }
  if (worst) *worst = std::max(bad, 0.0);
  return ok;
}

VerificationReport verify_gamma_identity(const std::string& id, const GammaIdentityInput& in, const Tolerances& tol) {
  auto need = [&](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::MissingInput, id + " needs " + what);
  };
  need(in.tuple != nullptr, "the operator tuple");
  const OperatorTuple& t = *in.tuple;
  const int n = t.n;
  const auto& rows = in.trusted;
  nlohmann::json window = {{"coordinates", rows.empty() ? t.dim() : static_cast<Index>(rows.size())},
                           {"ambient", t.dim()}};
  auto lift_b = [&](int i) {
    const auto& Qs = in.B->defect.space.basis;
    return Mat(Qs * in.B->ops[static_cast<std::size_t>(i - 1)] * Qs.adjoint());
  };
  if (id == "GAMMA-L44" || id == "GAMMA-L45") {
    need(in.A && in.B, "fundamental tuples of the tuple and its adjoint");
    const Mat& Q = in.A->defect.space.basis;
    const Mat& D = in.A->defect.D;
    const Mat& Ds = in.B->defect.D;
    double worst = 0;
    for (int i = 1; i < n; ++i) {
      const Mat& Ai = in.A->ops[static_cast<std::size_t>(i - 1)];
      Mat diff = id == "GAMMA-L44" ? Mat(D * Q * Ai - (t.S(i) * D * Q - Ds * lift_b(n - i) * t.P() * Q))
                                   : Mat(t.P() * Q * Ai - lift_b(i).adjoint() * t.P() * Q);
      worst = std::max(worst, windowed_norm(diff, rows, {}));
    }
    return make_report(id, worst, tol.residual_tol, window);
  }
  if (id == "GAMMA-L43") {
    need(in.A && in.B && in.theta, "fundamental tuples and a characteristic-function evaluator");
    double worst = 0;
    for (cplx z : disk_grid()) {
      Mat th = in.theta->theta(z);
      for (int i = 1; i < n; ++i) {
        const Mat& Ai = in.A->ops[static_cast<std::size_t>(i - 1)];
        const Mat& An = in.A->ops[static_cast<std::size_t>(n - i - 1)];
        const Mat& Bi = in.B->ops[static_cast<std::size_t>(i - 1)];
        const Mat& Bn = in.B->ops[static_cast<std::size_t>(n - i - 1)];
        if (th.size() == 0) continue;
        worst = std::max(worst, op_norm((Bi.adjoint() + z * Bn) * th - th * (Ai + z * An.adjoint())));
      }
    }
    window["grid"] = "5 radii x 64 angles";
    return make_report(id, worst, 10 * tol.residual_tol, window);
  }
  if (id == "GAMMA-L41a" || id == "GAMMA-L41b") {
    need(in.astar != nullptr, "the strong limit A_*");
    const Mat& As = *in.astar;
    const Mat& P = t.P();
    double worst = 0;
    for (int j = 1; j < n; ++j) {
      double c1 = binomial(n - 1, j - 1), c0 = binomial(n - 1, j);
      Mat Sa = t.S(n - j).adjoint();
      Mat diff = id == "GAMMA-L41a" ? Mat(c1 * As + c0 * As * P.adjoint() - As * Sa)
                                    : Mat(c1 * P * As + c0 * As - P * As * Sa);
      worst = std::max(worst, windowed_norm(diff, rows, rows));
    }
    return make_report(id, worst, tol.residual_tol, window);
  }
  if (id == "GAMMA-SIGMA") {
    need(in.A && in.B, "fundamental tuples of the tuple and its adjoint");
    double w1 = 0, w2 = 0;
    bool ok1 = sigma_unrefuted(1, in.A->ops, tol, in.samples, in.seed, &w1);
    bool ok2 = sigma_unrefuted(2, in.B->ops, tol, in.samples, in.seed + 7, &w2);
    auto r = make_report(id, std::max(w1, w2), tol.residual_tol, window);
    r.pass = ok1 && ok2;
    r.reason = "refutation sampled; a pass is not a certificate";
    return r;
  }
  fail(ErrorCode::InvalidParams, "unknown identity " + id);
}

}  // namespace opkit
