#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "opkit/errors.hpp"

namespace opkit {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using Index = Eigen::Index;

struct Tolerances {
  double rank_tol = 1e-10;
  double residual_tol = 1e-8;
  double convergence_tol = 1e-13;
  int grid_points = 64;
  // membership regimes: exact algebraic tests vs. grid-limited ones
  double algebraic_tol = 1e-9;
  double grid_tol = 1e-3;

  void validate() const;
};

// Columns are an orthonormal basis of a subspace of C^ambient_dim.
struct SubspaceBasis {
  Index ambient_dim = 0;
  Mat basis;
  Index dim() const { return basis.cols(); }
  Mat projector() const { return basis * basis.adjoint(); }
};

struct DefectData {
  Mat D;
  SubspaceBasis space;
  Eigen::VectorXd values;  // nonzero eigenvalues of D on `space`, same order as its columns
};

Mat identity(Index n);
bool all_finite(const Mat& m);
void require_finite(const Mat& m, const char* what);
void require_square(const Mat& m, const char* what);

Mat psd_sqrt(const Mat& M, const Tolerances& tol);
DefectData defect(const Mat& P, const Tolerances& tol);
Mat compress(const Mat& T, const SubspaceBasis& domain, const SubspaceBasis& codomain);
double op_norm(const Mat& M);
double commutation_residual(const std::vector<Mat>& members);

// Deterministic orthonormal basis of a Hermitian eigen-decomposition restricted to
// eigenvalues above `cut`; ordering: eigenvalue descending, degenerate clusters
// spanned by projected coordinate vectors.
SubspaceBasis canonical_range(const Mat& hermitian_psd, double cut, Eigen::VectorXd* values);

Mat direct_sum(const std::vector<Mat>& blocks);
Mat kron(const Mat& a, const Mat& b);
double binomial(int n, int k);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0);
  double normal();
  cplx cnormal();  // standard complex Gaussian, E|z|^2 = 1
  cplx unit_phase();
  int integer(int lo, int hi);  // inclusive
  Mat gaussian(Index r, Index c);
  Mat unitary(Index n);
  Mat contraction(Index n, double norm);  // ||result|| == norm
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace opkit
