#include "opkit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace opkit {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::IndefiniteBeyondTolerance: return "IndefiniteBeyondTolerance";
    case ErrorCode::NotAContraction: return "NotAContraction";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::IncompatibleOperators: return "IncompatibleOperators";
    case ErrorCode::NotToeplitz: return "NotToeplitz";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::RootFindingFailure: return "RootFindingFailure";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::RankDeficientSystem: return "RankDeficientSystem";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::ResolventSingular: return "ResolventSingular";
    case ErrorCode::TruncationInsufficient: return "TruncationInsufficient";
    case ErrorCode::TailTooLarge: return "TailTooLarge";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::EmbeddingNotFound: return "EmbeddingNotFound";
    case ErrorCode::SolverDisagreement: return "SolverDisagreement";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

void Tolerances::validate() const {
  if (!(rank_tol > 0 && residual_tol > 0 && convergence_tol > 0 && grid_points > 0 && algebraic_tol > 0 &&
        grid_tol > 0))
    fail(ErrorCode::InvalidParams, "tolerances must be strictly positive");
}

Mat identity(Index n) { return Mat::Identity(n, n); }

bool all_finite(const Mat& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

void require_finite(const Mat& m, const char* what) {
  if (!all_finite(m)) fail(ErrorCode::NonFiniteEntry, what);
}

void require_square(const Mat& m, const char* what) {
  if (m.rows() != m.cols())
    fail(ErrorCode::DimensionMismatch, std::string(what) + " must be square");
}

namespace {

void normalize_phase(Eigen::Ref<Vec> v) {
  double scale = v.cwiseAbs().maxCoeff();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-8 * scale) {
      cplx ph = v(i) / std::abs(v(i));
      v /= ph;
      return;
    }
  }
}

}  // namespace

SubspaceBasis canonical_range(const Mat& H, double cut, Eigen::VectorXd* values) {
  const Index n = H.rows();
  SubspaceBasis out;
  out.ambient_dim = n;
  if (n == 0) {
    out.basis = Mat(0, 0);
    if (values) values->resize(0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.adjoint()));
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Mat& V = es.eigenvectors();
  std::vector<Index> keep;
  for (Index i = n - 1; i >= 0; --i)
    if (lam(i) > cut) keep.push_back(i);  // descending
  out.basis = Mat::Zero(n, static_cast<Index>(keep.size()));
  Eigen::VectorXd vals(static_cast<Index>(keep.size()));
  Index col = 0;
  std::size_t a = 0;
  while (a < keep.size()) {
    std::size_t b = a + 1;
    while (b < keep.size() && std::abs(lam(keep[b]) - lam(keep[b - 1])) <= 1e-9 * std::max(1.0, lam(keep[a]))) ++b;
    const Index m = static_cast<Index>(b - a);
    if (m == 1) {
      Vec v = V.col(keep[a]);
      normalize_phase(v);
      out.basis.col(col) = v;
      vals(col) = lam(keep[a]);
      ++col;
    } else {
      Mat Vc(n, m);
      for (Index k = 0; k < m; ++k) Vc.col(k) = V.col(keep[a + static_cast<std::size_t>(k)]);
      Mat proj = Vc * Vc.adjoint();
      Mat found(n, 0);
      for (Index k = 0; k < m; ++k) {
        Mat resid = proj - found * (found.adjoint() * proj);
        Index best = 0;
        double bn = -1;
        for (Index c = 0; c < n; ++c) {
          double nrm = resid.col(c).norm();
          if (nrm > bn + 1e-12) {
            bn = nrm;
            best = c;
          }
        }
        Vec v = resid.col(best) / bn;
        normalize_phase(v);
        found.conservativeResize(n, found.cols() + 1);
        found.col(found.cols() - 1) = v;
      }
      double mean = 0;
      for (Index k = 0; k < m; ++k) mean += lam(keep[a + static_cast<std::size_t>(k)]);
      mean /= static_cast<double>(m);
      for (Index k = 0; k < m; ++k) {
        out.basis.col(col) = found.col(k);
        vals(col) = mean;
        ++col;
      }
    }
    a = b;
  }
  if (values) *values = vals;
  return out;
}

Mat psd_sqrt(const Mat& M, const Tolerances& tol) {
  require_square(M, "psd_sqrt input");
  require_finite(M, "psd_sqrt input");
  if (M.size() == 0) return M;
  double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.adjoint()).cwiseAbs().maxCoeff() > tol.residual_tol * scale)
    fail(ErrorCode::NotHermitian, "psd_sqrt input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.adjoint()));
  Eigen::VectorXd lam = es.eigenvalues();
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -tol.rank_tol) fail(ErrorCode::IndefiniteBeyondTolerance, "eigenvalue " + std::to_string(lam(i)));
    lam(i) = lam(i) < 0 ? 0.0 : std::sqrt(lam(i));
  }
  const Mat& V = es.eigenvectors();
  return V * lam.cast<cplx>().asDiagonal() * V.adjoint();
}

DefectData defect(const Mat& P, const Tolerances& tol) {
  require_square(P, "defect input");
  require_finite(P, "defect input");
  const Index n = P.rows();
  if (op_norm(P) > 1.0 + tol.rank_tol) fail(ErrorCode::NotAContraction, "operator norm exceeds 1");
  Mat M = identity(n) - P.adjoint() * P;
  DefectData out;
  Eigen::VectorXd lam;
  // rank cut on D^2: rounding of I - P*P is O(eps), which sqrt would inflate to O(1e-8)
  out.space = canonical_range(M, tol.rank_tol, &lam);
  out.values = lam.cwiseSqrt();
  out.D = out.space.basis * out.values.cast<cplx>().asDiagonal() * out.space.basis.adjoint();
  if (out.D.size() == 0) out.D = Mat::Zero(n, n);
  return out;
}

Mat compress(const Mat& T, const SubspaceBasis& domain, const SubspaceBasis& codomain) {
  if (T.cols() != domain.ambient_dim || T.rows() != codomain.ambient_dim ||
      domain.basis.rows() != domain.ambient_dim || codomain.basis.rows() != codomain.ambient_dim)
    fail(ErrorCode::DimensionMismatch, "compress: operator and bases disagree");
  return codomain.basis.adjoint() * T * domain.basis;
}

double op_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Mat G = M.rows() >= M.cols() ? Mat(M.adjoint() * M) : Mat(M * M.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(G, Eigen::EigenvaluesOnly);
  double top = es.eigenvalues().maxCoeff();
  return top > 0 ? std::sqrt(top) : 0.0;
}

double commutation_residual(const std::vector<Mat>& members) {
  for (const auto& m : members) {
    require_square(m, "tuple member");
    if (m.rows() != members.front().rows()) fail(ErrorCode::DimensionMismatch, "tuple members differ in size");
  }
  double worst = 0;
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i + 1; j < members.size(); ++j)
      worst = std::max(worst, op_norm(members[i] * members[j] - members[j] * members[i]));
  return worst;
}

Mat direct_sum(const std::vector<Mat>& blocks) {
  Index r = 0, c = 0;
  for (const auto& b : blocks) {
    r += b.rows();
    c += b.cols();
  }
  Mat out = Mat::Zero(r, c);
  r = c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

double Rng::uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
double Rng::normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
cplx Rng::cnormal() {
  double re = normal(), im = normal();
  return cplx(re, im) / std::sqrt(2.0);
}
cplx Rng::unit_phase() { return std::polar(1.0, uniform(0.0, 2.0 * M_PI)); }
int Rng::integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

Mat Rng::gaussian(Index r, Index c) {
  Mat m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = cnormal();
  return m;
}

Mat Rng::unitary(Index n) {
  Eigen::HouseholderQR<Mat> qr(gaussian(n, n));
  Mat Q = qr.householderQ();
  Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i) {
    cplx d = R(i, i);
    if (std::abs(d) > 0) Q.col(i) *= d / std::abs(d);
  }
  return Q;
}

Mat Rng::contraction(Index n, double norm) {
  Mat g = gaussian(n, n);
  return g * (norm / op_norm(g));
}

}  // namespace opkit
