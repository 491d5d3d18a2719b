#include "opkit/model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "opkit/fft.hpp"
#include "opkit/parallel.hpp"

namespace opkit {

// ---------------------------------------------------------------- evaluator

namespace {

void flatten(const StructuredOperator& op, std::vector<const StructuredOperator*>& out) {
  if (op.kind == StructuredOperator::Kind::DirectSum) {
    for (const auto& c : op.children) flatten(c, out);
  } else {
    out.push_back(&op);
  }
}

DefectData empty_defect(Index n) {
  DefectData d;
  d.D = Mat::Zero(n, n);
  d.space.ambient_dim = n;
  d.space.basis = Mat(n, 0);
  return d;
}

DefectData stack_defects(const std::vector<const DefectData*>& parts) {
  DefectData out;
  std::vector<Mat> D, Q;
  Index nv = 0;
  for (auto* p : parts) {
    D.push_back(p->D);
    Q.push_back(p->space.basis);
    nv += p->values.size();
  }
  out.D = direct_sum(D);
  out.space.basis = direct_sum(Q);
  out.space.ambient_dim = out.D.rows();
  out.values.resize(nv);
  nv = 0;
  for (auto* p : parts) {
    out.values.segment(nv, p->values.size()) = p->values;
    nv += p->values.size();
  }
  return out;
}

}  // namespace

CharFnEvaluator::CharFnEvaluator(const StructuredOperator& P, const TruncationOrder& trunc, const Tolerances& tol)
    : op_(P), trunc_(trunc), tol_(tol) {
  trunc_.validate();
  P_ = materialize(P, trunc_);
  init(tol);
}

CharFnEvaluator::CharFnEvaluator(const Mat& P, const Tolerances& tol)
    : op_(StructuredOperator::make_finite(P)), tol_(tol) {
  P_ = P;
  init(tol);
}

void CharFnEvaluator::init(const Tolerances& tol) {
  require_square(P_, "evaluator input");
  std::vector<const StructuredOperator*> parts;
  flatten(op_, parts);
  Index off = 0, doff = 0, dsoff = 0, eoff = 0;
  for (const auto* part : parts) {
    Leaf lf;
    lf.shift = part->kind == StructuredOperator::Kind::HardyShiftAdjoint;
    lf.P = materialize(*part, trunc_);
    lf.offset = off;
    lf.size = lf.P.rows();
    lf.dp = defect(lf.P, tol);
    // a truncated backward shift is co-isometric; its edge defect is an artifact
    lf.dps = lf.shift ? empty_defect(lf.size) : defect(lf.P.adjoint(), tol);
    lf.d_offset = doff;
    lf.d_size = lf.dp.space.dim();
    lf.ds_offset = dsoff;
    lf.ds_size = lf.dps.space.dim();
    lf.e_offset = eoff;
    if (lf.shift) eoff += lf.d_size;
    off += lf.size;
    doff += lf.d_size;
    dsoff += lf.ds_size;
    leaves_.push_back(std::move(lf));
  }
  if (off != P_.rows()) fail(ErrorCode::DimensionMismatch, "structure and matrix sizes disagree");
  std::vector<const DefectData*> a, b;
  for (const auto& lf : leaves_) {
    a.push_back(&lf.dp);
    b.push_back(&lf.dps);
  }
  dp_ = stack_defects(a);
  dps_ = stack_defects(b);
  e_select_ = Mat::Zero(doff, eoff);
  for (const auto& lf : leaves_)
    if (lf.shift)
      for (Index i = 0; i < lf.d_size; ++i) e_select_(lf.d_offset + i, lf.e_offset + i) = 1.0;
  try {
    astar_ = materialize(strong_limit_astar(op_, trunc_, tol), trunc_);
  } catch (const OpkitError& e) {
    if (e.code() != ErrorCode::NoConvergence) throw;
    astar_ = Mat();
  }
}

bool CharFnEvaluator::has_shift() const {
  return std::any_of(leaves_.begin(), leaves_.end(), [](const Leaf& l) { return l.shift; });
}

bool CharFnEvaluator::all_finite_pure() const { return !has_shift() && pure_blocks(); }

bool CharFnEvaluator::pure_blocks() const {
  for (const auto& lf : leaves_) {
    if (lf.shift) continue;
    if (lf.size == 0) continue;
    Eigen::ComplexEigenSolver<Mat> es(lf.P, false);
    if (es.eigenvalues().cwiseAbs().maxCoeff() >= 1.0 - 1e-9) return false;
  }
  return true;
}

const Eigen::PartialPivLU<Mat>& CharFnEvaluator::resolvent(std::size_t leaf, cplx z) const {
  std::lock_guard<std::mutex> lock(cache_mu_);
  auto key = std::make_pair(leaf, std::make_pair(z.real(), z.imag()));
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  if (cache_.size() > 50000) cache_.clear();
  const Leaf& lf = leaves_[leaf];
  Mat M = identity(lf.size) - z * lf.P.adjoint();
  Eigen::PartialPivLU<Mat> lu(M);
  if (!(lu.rcond() > 1e-12)) fail(ErrorCode::ResolventSingular, "I - zP* is singular at the requested point");
  return cache_.emplace(key, std::move(lu)).first->second;
}

Mat CharFnEvaluator::theta(cplx z) const {
  Mat out = Mat::Zero(dstar(), d());
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    const Leaf& lf = leaves_[i];
    if (lf.shift || lf.d_size == 0 || lf.ds_size == 0) continue;
    const Mat& Q = lf.dp.space.basis;
    const Mat& Qs = lf.dps.space.basis;
    Mat DQ = lf.dp.D * Q;
    Mat val = -lf.P * Q + z * lf.dps.D * resolvent(i, z).solve(DQ);
    out.block(lf.ds_offset, lf.d_offset, lf.ds_size, lf.d_size) = Qs.adjoint() * val;
  }
  return out;
}

Mat CharFnEvaluator::theta_ambient(cplx z) const {
  Mat out = Mat::Zero(dim(), d());
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    const Leaf& lf = leaves_[i];
    if (lf.d_size == 0) continue;
    const Mat& Q = lf.dp.space.basis;
    Mat val = -lf.P * Q;
    if (!lf.shift) val += z * lf.dps.D * resolvent(i, z).solve(lf.dp.D * Q);
    out.block(lf.offset, lf.d_offset, lf.size, lf.d_size) = val;
  }
  return out;
}

Mat CharFnEvaluator::delta_sq(double t) const {
  Mat th = theta(std::polar(1.0, t));
  return identity(d()) - th.adjoint() * th;
}

Mat CharFnEvaluator::delta(double t) const {
  Mat M = delta_sq(t);
  if (M.size() == 0) return M;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.adjoint()));
  Eigen::VectorXd lam = es.eigenvalues();
  for (Index i = 0; i < lam.size(); ++i) lam(i) = lam(i) > tol_.rank_tol ? std::sqrt(lam(i)) : 0.0;
  return es.eigenvectors() * lam.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

std::vector<Index> CharFnEvaluator::trusted() const {
  std::vector<Index> out;
  for (const auto& lf : leaves_) {
    if (!lf.shift) {
      for (Index i = 0; i < lf.size; ++i) out.push_back(lf.offset + i);
      continue;
    }
    const Index b = lf.size / (trunc_.N + 1);
    for (Index i = 0; i < (trunc_.window() + 1) * b; ++i) out.push_back(lf.offset + i);
  }
  return out;
}

std::vector<cplx> disk_grid() {
  std::vector<cplx> z;
  for (double r : {0.0, 0.25, 0.5, 0.75, 0.95})
    for (int k = 0; k < 64; ++k) z.push_back(std::polar(r, 2 * M_PI * k / 64.0));
  return z;
}

// ---------------------------------------------------------------- model spaces

ModelLayout model_layout(const CharFnEvaluator& ev, int N) {
  ModelLayout l;
  l.N = N;
  l.dstar = ev.dstar();
  l.e = ev.e_dim();
  return l;
}

std::vector<Mat> theta_taylor(const CharFnEvaluator& ev, int count, int grid, double radius) {
  if (!is_power_of_two(grid) || grid < 2 * count) fail(ErrorCode::InvalidParams, "Taylor grid too small");
  std::vector<Mat> samples(static_cast<std::size_t>(grid));
  parallel_for(samples.size(), [&](std::size_t l) {
    samples[l] = ev.theta(std::polar(radius, 2 * M_PI * static_cast<double>(l) / grid));
  });
  auto c = dft_coefficients(samples, count);
  std::vector<Mat> out;
  for (int m = 0; m < count; ++m) out.push_back(c.at(m) / std::pow(radius, m));
  return out;
}

std::vector<Mat> theta_taylor_closed(const CharFnEvaluator& ev, int count) {
  const Mat& Q = ev.defect_p().space.basis;
  const Mat& Qs = ev.defect_pstar().space.basis;
  std::vector<Mat> out;
  if (count > 0) out.push_back(Qs.adjoint() * (-ev.P()) * Q);
  Mat right = ev.defect_p().D * Q;
  for (int m = 1; m < count; ++m) {
    out.push_back(Qs.adjoint() * ev.defect_pstar().D * right);
    right = ev.P().adjoint() * right;
  }
  return out;
}

Mat model_column(const CharFnEvaluator& ev, const ModelLayout& L) {
  const Index d = ev.d();
  const int N = L.N;
  Mat C = Mat::Zero(L.dim(), (N + 1) * d);
  if (d == 0) return C;
  if (L.dstar > 0) {
    auto th = theta_taylor(ev, N + 1);
    for (int c = 0; c <= N; ++c)
      for (int r = c; r <= N; ++r) C.block(L.h2(r, 0), c * d, L.dstar, d) = th[static_cast<std::size_t>(r - c)];
  }
  if (L.e > 0) {
    const int span = 2 * N + 1;
    int grid = 256;
    while (grid < 4 * (span + 1)) grid *= 2;
    const Mat& E = ev.delta_range();
    auto coeff = fourier_coefficients([&](double t) { return Mat(E.adjoint() * ev.delta(t)); }, grid, span);
    for (int c = 0; c <= N; ++c)
      for (int r = -L.l2_reach(); r <= L.l2_reach(); ++r) C.block(L.l2(r, 0), c * d, L.e, d) = coeff.at(r - c);
  }
  return C;
}

namespace {

Mat orth_complement(const Mat& Q, Index n) {
  if (Q.cols() == 0) return identity(n);
  Eigen::HouseholderQR<Mat> qr(Q);
  Mat full = qr.householderQ() * identity(n);
  return full.rightCols(n - Q.cols());
}

Mat polar_factor(const Mat& M) {
  if (M.size() == 0) return M;
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

Mat pinv(const Mat& M, double rel) {
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  double top = s.size() ? s(0) : 0.0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > rel * top) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.cast<cplx>().asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace

ModelSpaces build_model_spaces(const CharFnEvaluator& ev, const TruncationOrder& trunc, const Tolerances& tol) {
  trunc.validate();
  ModelSpaces s;
  s.layout = model_layout(ev, trunc.N);
  s.column = model_column(ev, s.layout);
  const Index d = ev.d();
  // widest leading block of source modes on which the truncated column stays isometric
  Mat G = s.column.adjoint() * s.column;
  s.column_modes = -1;
  for (int k = trunc.window(); k >= 1 && d > 0; --k) {
    const Index c = (k + 1) * d;
    double def = op_norm(G.topLeftCorner(c, c) - identity(c));
    if (def <= tol.residual_tol) {
      s.column_modes = k;
      s.isometry_defect = def;
      break;
    }
  }
  if (d == 0) s.column_modes = trunc.window();
  if (s.column_modes < 1)
    fail(ErrorCode::TruncationInsufficient, "the column is not isometric on two leading modes");
  Mat Cw = s.column.leftCols((s.column_modes + 1) * d);
  if (Cw.cols()) {
    Eigen::JacobiSVD<Mat> svd(Cw, Eigen::ComputeThinU);
    Index keep = 0;
    while (keep < svd.singularValues().size() && svd.singularValues()(keep) > 0.5) ++keep;
    s.Q_basis = svd.matrixU().leftCols(keep);
  } else {
    s.Q_basis = Mat(s.layout.dim(), 0);
  }
  s.H_basis = orth_complement(s.Q_basis, s.layout.dim());
  return s;
}

Mat douglas_embedding(const CharFnEvaluator& ev, const ModelLayout& L, const Tolerances& tol) {
  const Index h = ev.dim();
  Mat phi = Mat::Zero(L.dim(), h);
  for (const auto& lf : ev.leaves()) {
    if (lf.shift) continue;
    Mat pk = identity(lf.size);
    for (int k = 0; k <= L.N; ++k) pk = pk * lf.P.adjoint();
    if (op_norm(pk) > std::sqrt(tol.residual_tol))
      fail(ErrorCode::TailTooLarge, "P*^N does not decay on a finite block");
  }
  if (L.dstar > 0) {
    Mat right = ev.defect_pstar().space.basis.adjoint() * ev.defect_pstar().D;
    for (int m = 0; m <= L.N; ++m) {
      phi.block(L.h2(m, 0), 0, L.dstar, h) = right;
      right = right * ev.P().adjoint();
    }
  }
  for (const auto& lf : ev.leaves()) {
    if (!lf.shift) continue;
    const Index b = lf.d_size;
    for (int m = 0; m <= L.N; ++m)
      for (Index a = 0; a < b; ++a) phi(L.l2(m, lf.e_offset + a), lf.offset + m * b + a) = 1.0;
  }
  return phi;
}

IsometryDefect douglas_isometry_defect(const CharFnEvaluator& ev, const Mat& phi1) {
  const int N = ev.truncation().N;
  Mat G = phi1.adjoint() * phi1;
  Mat tail = Mat::Zero(G.rows(), G.cols());
  for (const auto& lf : ev.leaves()) {
    if (lf.shift) continue;
    Mat pk = identity(lf.size);
    for (int k = 0; k <= N; ++k) pk = pk * lf.P.adjoint();
    tail.block(lf.offset, lf.offset, lf.size, lf.size) = pk.adjoint() * pk;
  }
  auto tr = ev.trusted();
  IsometryDefect out;
  Mat I = identity(G.rows());
  out.raw = windowed_norm(G - I, tr, tr);
  out.corrected = windowed_norm(G + tail - I, tr, tr);
  return out;
}

namespace {

Mat shift_operator(const ModelLayout& L, int h2_step, int l2_step) {
  Mat V = Mat::Zero(L.dim(), L.dim());
  for (int m = 0; m <= L.N; ++m) {
    int t = m + h2_step;
    if (t < 0 || t > L.N) continue;
    for (Index a = 0; a < L.dstar; ++a) V(L.h2(t, a), L.h2(m, a)) = 1.0;
  }
  for (int m = -L.l2_reach(); m <= L.l2_reach(); ++m) {
    int t = m + l2_step;
    if (t < -L.l2_reach() || t > L.l2_reach()) continue;
    for (Index a = 0; a < L.e; ++a) V(L.l2(t, a), L.l2(m, a)) = 1.0;
  }
  return V;
}

}  // namespace

Mat douglas_isometry(const ModelLayout& L) { return shift_operator(L, 1, -1); }
Mat model_isometry(const ModelLayout& L) { return shift_operator(L, 1, 1); }

Mat flip(const ModelLayout& L) {
  Mat F = Mat::Zero(L.dim(), L.dim());
  for (Index i = 0; i < L.h2_dim(); ++i) F(i, i) = 1.0;
  for (int m = -L.l2_reach(); m <= L.l2_reach(); ++m) {
    int t = -(m + 1);
    if (t < -L.l2_reach()) continue;
    for (Index a = 0; a < L.e; ++a) F(L.l2(t, a), L.l2(m, a)) = 1.0;
  }
  return F;
}

Mat nf_embedding(const Mat& phi1, const ModelLayout& L, const ModelSpaces& spaces) {
  Mat raw = flip(L) * phi1;
  const Mat& H = spaces.H_basis;
  return H * polar_factor(H.adjoint() * raw);
}

Mat dilation_intertwiner(const Mat& phi1, const Mat& phi2, const ModelLayout& L) {
  const int K = L.N / 2;
  const Index h = phi1.cols();
  Mat X(L.dim(), (K + 1) * h), Y(L.dim(), (K + 1) * h);
  Mat vn = model_isometry(L), vd = douglas_isometry(L);
  Mat x = phi2, y = phi1;
  for (int k = 0; k <= K; ++k) {
    X.middleCols(k * h, h) = x;
    Y.middleCols(k * h, h) = y;
    x = vn * x;
    y = vd * y;
  }
  return Y * pinv(X, 1e-10);
}

Mat hardy_multiplier(int N, const Mat& Y0, const Mat& Y1) {
  const Index k = Y0.rows();
  Mat M = Mat::Zero((N + 1) * k, (N + 1) * k);
  if (k == 0) return M;
  for (int m = 0; m <= N; ++m) {
    M.block(m * k, m * k, k, k) = Y0;
    if (m < N) M.block((m + 1) * k, m * k, k, k) = Y1;
  }
  return M;
}

Mat w_block(const ModelLayout& L, const Mat& X0, const Mat& X1, cplx c0, cplx c1) {
  Mat W = Mat::Zero(L.dim(), L.dim());
  if (L.dstar > 0) W.topLeftCorner(L.h2_dim(), L.h2_dim()) = hardy_multiplier(L.N, X0, X1);
  for (int m = -L.l2_reach(); m <= L.l2_reach(); ++m)
    for (Index a = 0; a < L.e; ++a) {
      W(L.l2(m, a), L.l2(m, a)) += c0;
      if (m < L.l2_reach()) W(L.l2(m + 1, a), L.l2(m, a)) += c1;
    }
  return W;
}

// ---------------------------------------------------------------- instances

FoTuple fo_of(const OperatorTuple& t, const CharFnEvaluator& ev, const Tolerances& tol) {
  DefectData dd = ev.defect_p();
  return solve_fo_tuple(t, tol, &dd);
}

FoTuple fo_of_adjoint(const OperatorTuple& t, const CharFnEvaluator& ev, const Tolerances& tol) {
  DefectData dd = ev.defect_pstar();
  return solve_fo_tuple(t.adjoint(), tol, &dd);
}

namespace {

Index prefix_window(const CharFnEvaluator& ev) {
  auto tr = ev.trusted();
  for (std::size_t i = 0; i < tr.size(); ++i)
    if (tr[i] != static_cast<Index>(i)) return 0;
  return tr.size() == static_cast<std::size_t>(ev.dim()) ? 0 : static_cast<Index>(tr.size());
}

void fill_model(DilationInstance& inst, const Tolerances& tol) {
  const auto& ev = *inst.ev;
  inst.spaces = build_model_spaces(ev, inst.trunc, tol);
  inst.phi1 = douglas_embedding(ev, inst.spaces.layout, tol);
  inst.phi2 = nf_embedding(inst.phi1, inst.spaces.layout, inst.spaces);
  inst.pure = ev.all_finite_pure();
  inst.astar_surrogate = ev.has_shift();
}

std::vector<Mat> make_w(const ModelLayout& L, const std::vector<Mat>& B, int n) {
  std::vector<Mat> W;
  for (int j = 1; j < n; ++j) {
    const Mat& Bj = B[static_cast<std::size_t>(j - 1)];
    const Mat& Bn = B[static_cast<std::size_t>(n - j - 1)];
    W.push_back(w_block(L, Bj.adjoint(), Bn, binomial(n - 1, j), binomial(n - 1, j - 1)));
  }
  return W;
}

}  // namespace

DilationInstance prepare_dilation(const OperatorTuple& t, std::shared_ptr<const CharFnEvaluator> ev,
                                  const TruncationOrder& trunc, const Tolerances& tol) {
  if (!ev) fail(ErrorCode::MissingInput, "evaluator");
  if (t.dim() != ev->dim()) fail(ErrorCode::DimensionMismatch, "tuple and evaluator dimensions differ");
  DilationInstance inst;
  inst.ev = std::move(ev);
  inst.tuple = t;
  inst.trunc = trunc;
  inst.A = fo_of(t, *inst.ev, tol);
  inst.B = fo_of_adjoint(t, *inst.ev, tol);
  fill_model(inst, tol);
  inst.W = make_w(inst.spaces.layout, inst.B.ops, t.n);
  inst.commutation = t.commutation_residual;
  inst.digest = digest_matrices(t.members);
  return inst;
}

DilationInstance construct_from_fo_data(std::shared_ptr<const CharFnEvaluator> ev, const std::vector<Mat>& A,
                                        const std::vector<Mat>& B, const TruncationOrder& trunc, const Tolerances& tol,
                                        int sigma_samples, std::uint64_t seed) {
  if (!ev) fail(ErrorCode::MissingInput, "evaluator");
  if (A.empty() || A.size() != B.size()) fail(ErrorCode::DimensionMismatch, "A and B tuples must have equal length >= 1");
  const int n = static_cast<int>(A.size()) + 1;
  for (const auto& a : A)
    if (a.rows() != ev->d() || a.cols() != ev->d()) fail(ErrorCode::DimensionMismatch, "A must act on D_P");
  for (const auto& b : B)
    if (b.rows() != ev->dstar() || b.cols() != ev->dstar()) fail(ErrorCode::DimensionMismatch, "B must act on D_P*");
  DilationInstance inst;
  inst.ev = ev;
  inst.trunc = trunc;
  inst.constructed = true;
  fill_model(inst, tol);
  const auto& S = inst.spaces;
  for (int j = 1; j < n; ++j) {
    const Mat& Aj = A[static_cast<std::size_t>(j - 1)];
    const Mat& An = A[static_cast<std::size_t>(n - j - 1)];
    const Mat& Bj = B[static_cast<std::size_t>(j - 1)];
    const Mat& Bn = B[static_cast<std::size_t>(n - j - 1)];
    double r = square_residual(S, Bj.adjoint(), Bn, binomial(n - 1, j), binomial(n - 1, j - 1), Aj, An.adjoint(),
                               S.column_modes - 1);
    if (r > 10 * tol.residual_tol)
      fail(ErrorCode::HypothesisViolated, "commuting square fails for index " + std::to_string(j) + ", residual " +
                                              std::to_string(r));
  }
  if (n > 2 || ev->dstar() > 0)
    if (!sigma_unrefuted(2, B, tol, sigma_samples, seed))
      fail(ErrorCode::HypothesisViolated, "Sigma_2(z) refuted as a contraction tuple");
  inst.W = make_w(S.layout, B, n);
  std::vector<Mat> members;
  for (const auto& W : inst.W) members.push_back(inst.phi2.adjoint() * W * inst.phi2);
  members.push_back(ev->P());
  inst.tuple = OperatorTuple::make(std::move(members), prefix_window(*ev));
  inst.commutation = inst.tuple.commutation_residual;
  inst.A = fo_of(inst.tuple, *ev, tol);
  inst.B = fo_of_adjoint(inst.tuple, *ev, tol);
  for (int j = 1; j < n; ++j) {
    auto k = static_cast<std::size_t>(j - 1);
    inst.roundtrip_A = std::max(inst.roundtrip_A, op_norm(inst.A.ops[k] - A[k]));
    inst.roundtrip_B = std::max(inst.roundtrip_B, op_norm(inst.B.ops[k] - B[k]));
  }
  inst.digest = digest_matrices(inst.tuple.members);
  return inst;
}

DilationInstance binomial_multiplier_instance(int n, const TruncationOrder& trunc, cplx p, const Tolerances& tol) {
  if (n < 2) fail(ErrorCode::InvalidParams, "n must be at least 2");
  if (!(std::abs(p) < 1)) fail(ErrorCode::InvalidParams, "the scalar must lie in the open disc");
  DilationInstance inst;
  inst.ev = std::make_shared<const CharFnEvaluator>(StructuredOperator::make_finite(Mat::Constant(1, 1, p)), trunc, tol);
  inst.trunc = trunc;
  fill_model(inst, tol);
  const Mat I = identity(1);
  for (int j = 1; j < n; ++j)
    inst.W.push_back(w_block(inst.spaces.layout, binomial(n - 1, j) * I, binomial(n - 1, j - 1) * I, 0.0, 0.0));
  inst.digest = digest_matrices(inst.W);
  return inst;
}

// ---------------------------------------------------------------- Fourier data

std::map<int, Mat> fourier_coeffs_numeric(const CharFnEvaluator& ev, const Mat& W0, const Mat& W1, int m_range,
                                          int grid) {
  if (!is_power_of_two(grid) || grid < 4 * (2 * m_range + 1))
    fail(ErrorCode::InvalidParams, "grid must be a power of two covering the requested modes");
  return fourier_coefficients([&](double t) { return Mat(ev.delta_sq(t) * (W0 + std::polar(1.0, t) * W1)); }, grid,
                              m_range);
}

std::map<int, Mat> fourier_coeffs_numeric(const CharFnEvaluator& ev, cplx c0, cplx c1, int m_range, int grid) {
  Mat I = identity(ev.d());
  return fourier_coeffs_numeric(ev, c0 * I, c1 * I, m_range, grid);
}

AppendixCoeffs fourier_coeffs_closed(const DilationInstance& inst, int j, int m_range) {
  if (!inst.ev) fail(ErrorCode::MissingInput, "evaluator");
  const auto& ev = *inst.ev;
  const int n = inst.tuple.n;
  if (j < 1 || j >= n) fail(ErrorCode::InvalidParams, "index out of range");
  if (ev.astar().size() == 0) fail(ErrorCode::MissingInput, "strong limit A_*");
  const Mat& P = ev.P();
  const Mat Ps = P.adjoint();
  const Mat& D = ev.defect_p().D;
  const Mat& Q = ev.defect_p().space.basis;
  const Mat& Ds = ev.defect_pstar().D;
  const Mat& Qs = ev.defect_pstar().space.basis;
  const Mat& As = ev.astar();
  const double c = binomial(n - 1, j), cp = binomial(n - 1, j - 1);
  auto lift = [](const Mat& basis, const Mat& X) { return Mat(basis * X * basis.adjoint()); };
  const Mat Aj = lift(Q, inst.A.ops[static_cast<std::size_t>(j - 1)]);
  const Mat An = lift(Q, inst.A.ops[static_cast<std::size_t>(n - j - 1)]);
  const Mat Bj = lift(Qs, inst.B.ops[static_cast<std::size_t>(j - 1)]);
  const Mat Bn = lift(Qs, inst.B.ops[static_cast<std::size_t>(n - j - 1)]);
  const Mat& Sj = inst.tuple.S(j);
  const Mat Sna = inst.tuple.S(n - j).adjoint();
  auto cmp = [&](const Mat& X) { return Mat(Q.adjoint() * X * Q); };
  auto pw = [](const Mat& M, int k) {
    Mat R = identity(M.rows());
    for (int i = 0; i < k; ++i) R = R * M;
    return R;
  };
  AppendixCoeffs out;
  for (int m = -m_range; m <= m_range; ++m) {
    Mat I, J;
    if (m == 0) {
      I = c * D * As * D + cp * D * P * As * D;
      J = D * D * Aj - D * Sj * D + D * Ds * Bn * P + D * P * As * Sna * D;
    } else if (m > 0) {
      I = cp * D * As * pw(Ps, m - 1) * D + c * D * As * pw(Ps, m) * D;
      if (m == 1)
        J = An.adjoint() * D * D + Ps * Bj.adjoint() * Ds * D - D * Sna * D + D * As * Sna * D;
      else
        J = D * As * pw(Ps, m - 1) * Sna * D;
    } else {
      I = c * D * pw(P, -m) * As * D + cp * D * pw(P, -m + 1) * As * D;
      J = D * pw(P, -m + 1) * As * Sna * D;
    }
    out.I[m] = cmp(I);
    out.J[m] = cmp(J);
  }
  return out;
}

double square_residual(const ModelSpaces& s, const Mat& X0, const Mat& X1, cplx c0, cplx c1, const Mat& Y0,
                       const Mat& Y1, int source_modes) {
  const Index d = s.column.cols() / (s.layout.N + 1);
  if (d == 0) return 0.0;
  const Index cols = (source_modes + 1) * d;
  Mat lhs = w_block(s.layout, X0, X1, c0, c1) * s.column.leftCols(cols);
  Mat rhs = s.column * hardy_multiplier(s.layout.N, Y0, Y1).leftCols(cols);
  return op_norm(lhs - rhs);
}

ExtractResult extract_multipliers(const ModelSpaces& s, const std::vector<Mat>& W, Index block, const Tolerances& tol) {
  ExtractResult out;
  if (block == 0) return out;
  TruncationOrder tr{s.layout.N, std::max(1, s.layout.N + 1 - s.column_modes)};
  for (const auto& w : W) {
    Mat T = s.column.adjoint() * w * s.column;
    auto fit = toeplitz_extract(T, block, tr, tol);
    out.structural = std::max(out.structural, fit.residual);
    for (int k = fit.symbol.degree_neg * -1; k <= fit.symbol.degree_pos; ++k)
      if (k != 0 && k != 1) out.degree_excess = std::max(out.degree_excess, op_norm(fit.symbol.coeff(k)));
    out.Y0.push_back(fit.symbol.coeff(0));
    out.Y1.push_back(fit.symbol.coeff(1));
  }
  return out;
}

// ---------------------------------------------------------------- generators

ModelInstance make_model_instance(ModelFamily kind, const ModelInstanceParams& p, std::uint64_t seed) {
  if (p.n < 2) fail(ErrorCode::InvalidParams, "n must be at least 2");
  ModelInstance out;
  out.trunc = TruncationOrder{p.N, p.margin};
  out.trunc.validate();
  const int n = p.n;
  if (kind == ModelFamily::Backshift) {
    if (p.block < 1) fail(ErrorCode::InvalidParams, "block must be positive");
    out.P = StructuredOperator::make_shift_adjoint(p.block);
    Mat P = materialize(out.P, out.trunc);
    const Mat I = identity(P.rows());
    std::vector<Mat> m;
    for (int j = 1; j < n; ++j) m.push_back(binomial(n - 1, j) * I + binomial(n - 1, j - 1) * P);
    m.push_back(P);
    out.tuple = OperatorTuple::make(std::move(m), (p.N + 1 - p.margin) * p.block);
    return out;
  }
  if (p.dim < 1 || p.dim > 8) fail(ErrorCode::InvalidParams, "finite model instances need 1 <= dim <= 8");
  Rng rng(seed);
  const int tdim = p.dim % 2 == 0 ? p.dim / 2 : p.dim;
  const int udim = p.dim / tdim;
  Mat T = kind == ModelFamily::ZeroP ? Mat(Mat::Zero(tdim, tdim)) : rng.contraction(tdim, 0.5);
  Mat W = rng.unitary(udim);
  std::vector<Mat> z;
  for (int j = 0; j + 1 < n; ++j) {
    Mat D = Mat::Zero(udim, udim);
    for (Index i = 0; i < udim; ++i) D(i, i) = rng.unit_phase();
    z.push_back(kron(W * D * W.adjoint(), identity(tdim)));
  }
  z.push_back(kron(identity(udim), T));
  const Index dim = p.dim;
  std::vector<Mat> e(static_cast<std::size_t>(n) + 1, Mat::Zero(dim, dim));
  e[0] = identity(dim);
  for (std::size_t k = 0; k < z.size(); ++k)
    for (std::size_t j = k + 1; j >= 1; --j) e[j] += e[j - 1] * z[k];
  out.tuple = OperatorTuple::make(std::vector<Mat>(e.begin() + 1, e.end()));
  out.P = StructuredOperator::make_finite(out.tuple.P(), AstarHint::Zero);
  return out;
}

std::shared_ptr<const CharFnEvaluator> make_evaluator(const ModelInstance& m, const Tolerances& tol) {
  return std::make_shared<const CharFnEvaluator>(m.P, m.trunc, tol);
}

}  // namespace opkit
