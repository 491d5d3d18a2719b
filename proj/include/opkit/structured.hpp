#pragma once

#include <functional>
#include <map>
#include <vector>

#include "opkit/linalg.hpp"

namespace opkit {

// Sum_{k=-degree_neg}^{degree_pos} C_k e^{ikt} with square blocks.
struct TrigPolySymbol {
  Index block_dim = 1;
  int degree_neg = 0;
  int degree_pos = 0;
  std::vector<Mat> coeffs;  // index k + degree_neg

  static TrigPolySymbol constant(const Mat& c);
  static TrigPolySymbol from_map(Index block_dim, const std::map<int, Mat>& terms);
  Mat coeff(int k) const;  // zero block outside the stored range
  Mat eval(double t) const;
  Mat eval_z(cplx z) const;  // only meaningful for analytic symbols
  bool analytic() const;
  TrigPolySymbol adjoint() const;
  TrigPolySymbol operator*(const TrigPolySymbol& o) const;
};

struct TruncationOrder {
  int N = 64;
  int interior_margin = 3;
  void validate() const;
  int window() const { return N - interior_margin; }  // last trusted Hardy mode
};

enum class AstarHint { Unknown, Zero, Identity };

struct StructuredOperator {
  enum class Kind { Finite, HardyMultiplier, LaurentMultiplier, DirectSum, HardyShiftAdjoint };
  Kind kind = Kind::Finite;
  Mat finite;
  TrigPolySymbol symbol;
  std::vector<StructuredOperator> children;
  Index block_dim = 1;
  AstarHint astar_hint = AstarHint::Unknown;
  bool adjoint_deferred = false;  // Hardy multiplier adjoint, realized only when materialized
  bool lossy = false;

  static StructuredOperator make_finite(const Mat& m, AstarHint hint = AstarHint::Unknown);
  static StructuredOperator make_hardy(const TrigPolySymbol& s);
  static StructuredOperator make_laurent(const TrigPolySymbol& s, AstarHint hint = AstarHint::Unknown);
  static StructuredOperator make_sum(std::vector<StructuredOperator> parts);
  static StructuredOperator make_shift_adjoint(Index block_dim);

  // materialized dimension at truncation N
  Index dim(int N) const;
};

// Block layout of a multiplier restricted to Fourier modes: entry block (r, c) is
// coeff(row_first + r - col_first - c).
Mat block_toeplitz(const std::function<Mat(int)>& coeff, Index row_block, Index col_block, int row_first, int row_count,
                   int col_first, int col_count);

Mat materialize(const StructuredOperator& op, const TruncationOrder& trunc);
StructuredOperator compose(const StructuredOperator& a, const StructuredOperator& b, const TruncationOrder& fallback);
StructuredOperator adjoint(const StructuredOperator& op);

struct ToeplitzFit {
  TrigPolySymbol symbol;
  double residual = 0;
};
ToeplitzFit toeplitz_extract(const Mat& M, Index block_dim, const TruncationOrder& trunc, const Tolerances& tol);

StructuredOperator strong_limit_astar(const StructuredOperator& op, const TruncationOrder& trunc,
                                      const Tolerances& tol);

}  // namespace opkit
