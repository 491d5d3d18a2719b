#include "opkit/structured.hpp"

#include <algorithm>
#include <cmath>

namespace opkit {

TrigPolySymbol TrigPolySymbol::constant(const Mat& c) {
  require_square(c, "symbol coefficient");
  TrigPolySymbol s;
  s.block_dim = c.rows();
  s.coeffs = {c};
  return s;
}

TrigPolySymbol TrigPolySymbol::from_map(Index block_dim, const std::map<int, Mat>& terms) {
  TrigPolySymbol s;
  s.block_dim = block_dim;
  if (terms.empty()) {
    s.coeffs = {Mat::Zero(block_dim, block_dim)};
    return s;
  }
  int lo = std::min(0, terms.begin()->first);
  int hi = std::max(0, terms.rbegin()->first);
  s.degree_neg = -lo;
  s.degree_pos = hi;
  s.coeffs.assign(static_cast<std::size_t>(hi - lo + 1), Mat::Zero(block_dim, block_dim));
  for (const auto& [k, c] : terms) {
    if (c.rows() != block_dim || c.cols() != block_dim)
      fail(ErrorCode::DimensionMismatch, "symbol blocks must share one square size");
    s.coeffs[static_cast<std::size_t>(k - lo)] = c;
  }
  return s;
}

Mat TrigPolySymbol::coeff(int k) const {
  if (k < -degree_neg || k > degree_pos) return Mat::Zero(block_dim, block_dim);
  return coeffs[static_cast<std::size_t>(k + degree_neg)];
}

Mat TrigPolySymbol::eval(double t) const {
  Mat out = Mat::Zero(block_dim, block_dim);
  for (int k = -degree_neg; k <= degree_pos; ++k) out += coeff(k) * std::polar(1.0, k * t);
  return out;
}

Mat TrigPolySymbol::eval_z(cplx z) const {
  Mat out = Mat::Zero(block_dim, block_dim);
  cplx zk = 1.0;
  for (int k = 0; k <= degree_pos; ++k) {
    out += coeff(k) * zk;
    zk *= z;
  }
  return out;
}

bool TrigPolySymbol::analytic() const {
  for (int k = -degree_neg; k < 0; ++k)
    if (coeff(k).cwiseAbs().maxCoeff() > 0) return false;
  return true;
}

TrigPolySymbol TrigPolySymbol::adjoint() const {
  std::map<int, Mat> terms;
  for (int k = -degree_neg; k <= degree_pos; ++k) terms[-k] = coeff(k).adjoint();
  return from_map(block_dim, terms);
}

TrigPolySymbol TrigPolySymbol::operator*(const TrigPolySymbol& o) const {
  if (block_dim != o.block_dim) fail(ErrorCode::IncompatibleOperators, "symbol block sizes differ");
  std::map<int, Mat> terms;
  for (int a = -degree_neg; a <= degree_pos; ++a)
    for (int b = -o.degree_neg; b <= o.degree_pos; ++b) {
      auto it = terms.find(a + b);
      Mat prod = coeff(a) * o.coeff(b);
      if (it == terms.end())
        terms.emplace(a + b, prod);
      else
        it->second += prod;
    }
  // drop exactly vanishing outer frequencies so e^{it} e^{-it} is the constant 1
  while (terms.size() > 1 && terms.rbegin()->first > 0 && terms.rbegin()->second.isZero(0.0)) terms.erase(std::prev(terms.end()));
  while (terms.size() > 1 && terms.begin()->first < 0 && terms.begin()->second.isZero(0.0)) terms.erase(terms.begin());
  return from_map(block_dim, terms);
}

void TruncationOrder::validate() const {
  if (N <= 0 || interior_margin < 0 || interior_margin >= N)
    fail(ErrorCode::InvalidParams, "truncation needs N > 0 and 0 <= interior_margin < N");
}

StructuredOperator StructuredOperator::make_finite(const Mat& m, AstarHint hint) {
  require_finite(m, "finite block");
  StructuredOperator op;
  op.kind = Kind::Finite;
  op.finite = m;
  op.block_dim = m.rows();
  op.astar_hint = hint;
  return op;
}

StructuredOperator StructuredOperator::make_hardy(const TrigPolySymbol& s) {
  if (!s.analytic()) fail(ErrorCode::InvalidParams, "Hardy multiplier symbol has negative frequencies");
  StructuredOperator op;
  op.kind = Kind::HardyMultiplier;
  op.symbol = s;
  op.block_dim = s.block_dim;
  return op;
}

StructuredOperator StructuredOperator::make_laurent(const TrigPolySymbol& s, AstarHint hint) {
  StructuredOperator op;
  op.kind = Kind::LaurentMultiplier;
  op.symbol = s;
  op.block_dim = s.block_dim;
  op.astar_hint = hint;
  return op;
}

StructuredOperator StructuredOperator::make_sum(std::vector<StructuredOperator> parts) {
  if (parts.empty()) fail(ErrorCode::InvalidParams, "direct sum needs at least one summand");
  StructuredOperator op;
  op.kind = Kind::DirectSum;
  op.children = std::move(parts);
  return op;
}

StructuredOperator StructuredOperator::make_shift_adjoint(Index block_dim) {
  StructuredOperator op;
  op.kind = Kind::HardyShiftAdjoint;
  op.block_dim = block_dim;
  op.astar_hint = AstarHint::Identity;
  return op;
}

Index StructuredOperator::dim(int N) const {
  switch (kind) {
    case Kind::Finite: return finite.rows();
    case Kind::HardyMultiplier:
    case Kind::HardyShiftAdjoint: return (N + 1) * block_dim;
    case Kind::LaurentMultiplier: return (2 * N + 1) * block_dim;
    case Kind::DirectSum: {
      Index d = 0;
      for (const auto& c : children) d += c.dim(N);
      return d;
    }
  }
  return 0;
}

Mat block_toeplitz(const std::function<Mat(int)>& coeff, Index row_block, Index col_block, int row_first,
                   int row_count, int col_first, int col_count) {
  Mat out = Mat::Zero(row_block * row_count, col_block * col_count);
  std::map<int, Mat> cache;
  for (int r = 0; r < row_count; ++r)
    for (int c = 0; c < col_count; ++c) {
      int k = row_first + r - col_first - c;
      auto it = cache.find(k);
      if (it == cache.end()) it = cache.emplace(k, coeff(k)).first;
      if (it->second.size() == 0) continue;
      out.block(r * row_block, c * col_block, row_block, col_block) = it->second;
    }
  return out;
}

Mat materialize(const StructuredOperator& op, const TruncationOrder& trunc) {
  using K = StructuredOperator::Kind;
  const int N = trunc.N;
  switch (op.kind) {
    case K::Finite: return op.finite;
    case K::HardyMultiplier: {
      Mat m = block_toeplitz([&](int k) { return op.symbol.coeff(k); }, op.block_dim, op.block_dim, 0, N + 1, 0, N + 1);
      return op.adjoint_deferred ? Mat(m.adjoint()) : m;
    }
    case K::LaurentMultiplier:
      return block_toeplitz([&](int k) { return op.symbol.coeff(k); }, op.block_dim, op.block_dim, -N, 2 * N + 1, -N,
                            2 * N + 1);
    case K::HardyShiftAdjoint: {
      const Index b = op.block_dim;
      return block_toeplitz([&](int k) { return k == -1 ? identity(b) : Mat(); }, b, b, 0, N + 1, 0, N + 1);
    }
    case K::DirectSum: {
      std::vector<Mat> blocks;
      for (const auto& c : op.children) blocks.push_back(materialize(c, trunc));
      return direct_sum(blocks);
    }
  }
  return Mat();
}

namespace {

bool is_identity_like(const StructuredOperator& op) {
  using K = StructuredOperator::Kind;
  if (op.kind == K::Finite) return op.finite.rows() == op.finite.cols() && op.finite.isIdentity(0.0);
  if (op.kind == K::HardyMultiplier || op.kind == K::LaurentMultiplier)
    return op.symbol.degree_neg == 0 && op.symbol.degree_pos == 0 && op.symbol.coeff(0).isIdentity(0.0);
  return false;
}

}  // namespace

StructuredOperator compose(const StructuredOperator& a, const StructuredOperator& b, const TruncationOrder& fallback) {
  using K = StructuredOperator::Kind;
  const Index da = a.dim(fallback.N), db = b.dim(fallback.N);
  if (is_identity_like(a) && (a.kind != K::Finite || da == db)) return b;
  if (is_identity_like(b) && (b.kind != K::Finite || da == db)) return a;
  if (a.kind == K::LaurentMultiplier && b.kind == K::LaurentMultiplier)
    return StructuredOperator::make_laurent(a.symbol * b.symbol);
  if (a.kind == K::HardyMultiplier && b.kind == K::HardyMultiplier && !a.adjoint_deferred && !b.adjoint_deferred)
    return StructuredOperator::make_hardy(a.symbol * b.symbol);
  if (a.kind == K::Finite && b.kind == K::Finite) {
    if (a.finite.cols() != b.finite.rows()) fail(ErrorCode::IncompatibleOperators, "finite blocks do not chain");
    return StructuredOperator::make_finite(a.finite * b.finite);
  }
  if (a.kind == K::DirectSum && b.kind == K::DirectSum && a.children.size() == b.children.size()) {
    std::vector<StructuredOperator> parts;
    bool lossy = false;
    for (std::size_t i = 0; i < a.children.size(); ++i) {
      parts.push_back(compose(a.children[i], b.children[i], fallback));
      lossy = lossy || parts.back().lossy;
    }
    auto out = StructuredOperator::make_sum(std::move(parts));
    out.lossy = lossy;
    return out;
  }
  if (da != db) fail(ErrorCode::IncompatibleOperators, "operators act on spaces of different size");
  auto out = StructuredOperator::make_finite(materialize(a, fallback) * materialize(b, fallback));
  out.lossy = true;
  return out;
}

StructuredOperator adjoint(const StructuredOperator& op) {
  using K = StructuredOperator::Kind;
  switch (op.kind) {
    case K::Finite: return StructuredOperator::make_finite(op.finite.adjoint());
    case K::LaurentMultiplier: return StructuredOperator::make_laurent(op.symbol.adjoint(), op.astar_hint);
    case K::HardyMultiplier: {
      StructuredOperator out = op;
      out.adjoint_deferred = !op.adjoint_deferred;
      out.astar_hint = AstarHint::Unknown;
      return out;
    }
    case K::HardyShiftAdjoint: {
      std::map<int, Mat> t{{1, identity(op.block_dim)}};
      return StructuredOperator::make_hardy(TrigPolySymbol::from_map(op.block_dim, t));
    }
    case K::DirectSum: {
      std::vector<StructuredOperator> parts;
      for (const auto& c : op.children) parts.push_back(adjoint(c));
      return StructuredOperator::make_sum(std::move(parts));
    }
  }
  return op;
}

ToeplitzFit toeplitz_extract(const Mat& M, Index block_dim, const TruncationOrder& trunc, const Tolerances& tol) {
  require_square(M, "toeplitz_extract input");
  if (block_dim <= 0 || M.rows() % block_dim != 0)
    fail(ErrorCode::DimensionMismatch, "matrix size not divisible by block size");
  const Index B = M.rows() / block_dim;
  const Index W = B - trunc.interior_margin;
  if (W < 1) fail(ErrorCode::InvalidParams, "interior window is empty");
  std::map<int, Mat> avg;
  std::map<int, int> count;
  for (Index r = 0; r < W; ++r)
    for (Index c = 0; c < W; ++c) {
      int k = static_cast<int>(r - c);
      Mat blk = M.block(r * block_dim, c * block_dim, block_dim, block_dim);
      auto it = avg.find(k);
      if (it == avg.end())
        avg.emplace(k, blk);
      else
        it->second += blk;
      ++count[k];
    }
  for (auto& [k, m] : avg) m /= static_cast<double>(count[k]);
  ToeplitzFit fit;
  for (Index r = 0; r < W; ++r)
    for (Index c = 0; c < W; ++c) {
      int k = static_cast<int>(r - c);
      fit.residual =
          std::max(fit.residual, op_norm(M.block(r * block_dim, c * block_dim, block_dim, block_dim) - avg[k]));
    }
  if (fit.residual > tol.residual_tol)
    fail(ErrorCode::NotToeplitz, "structural residual " + std::to_string(fit.residual));
  std::map<int, Mat> kept;
  int lo = 0, hi = 0;
  for (const auto& [k, m] : avg)
    if (op_norm(m) > tol.residual_tol) {
      lo = std::min(lo, k);
      hi = std::max(hi, k);
    }
  for (int k = lo; k <= hi; ++k) kept[k] = avg[k];
  fit.symbol = TrigPolySymbol::from_map(block_dim, kept);
  return fit;
}

namespace {

StructuredOperator iterate_astar(const Mat& P, AstarHint hint, int max_iter, const Tolerances& tol) {
  if (hint == AstarHint::Identity) return StructuredOperator::make_finite(identity(P.rows()), hint);
  if (hint == AstarHint::Zero) return StructuredOperator::make_finite(Mat::Zero(P.rows(), P.cols()), hint);
  if (op_norm(P) > 1.0 + tol.rank_tol) fail(ErrorCode::NotAContraction, "strong limit needs a contraction");
  Mat M = identity(P.rows());
  for (int it = 0; it < max_iter; ++it) {
    Mat next = P * M * P.adjoint();
    double change = op_norm(next - M);
    M = next;
    if (change < tol.convergence_tol) {
      AstarHint h = AstarHint::Unknown;
      if (op_norm(M) < tol.residual_tol)
        h = AstarHint::Zero;
      else if (op_norm(M - identity(M.rows())) < tol.residual_tol)
        h = AstarHint::Identity;
      return StructuredOperator::make_finite(M, h);
    }
  }
  fail(ErrorCode::NoConvergence, "P^n P*^n did not settle within " + std::to_string(max_iter) + " steps");
}

}  // namespace

StructuredOperator strong_limit_astar(const StructuredOperator& op, const TruncationOrder& trunc,
                                      const Tolerances& tol) {
  using K = StructuredOperator::Kind;
  const int max_iter = 10 * trunc.N;
  switch (op.kind) {
    case K::HardyShiftAdjoint:
      return StructuredOperator::make_finite(identity(op.dim(trunc.N)), AstarHint::Identity);
    case K::DirectSum: {
      std::vector<StructuredOperator> parts;
      for (const auto& c : op.children) parts.push_back(strong_limit_astar(c, trunc, tol));
      return StructuredOperator::make_sum(std::move(parts));
    }
    default: return iterate_astar(materialize(op, trunc), op.astar_hint, max_iter, tol);
  }
}

}  // namespace opkit
