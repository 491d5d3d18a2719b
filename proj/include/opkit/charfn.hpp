#pragma once

#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "opkit/structured.hpp"

namespace opkit {

// A contraction assembled from finite blocks and truncated backward-shift blocks.
// Defect data are tracked per block: a truncated backward shift has a spurious
// defect for its adjoint at the truncation edge, which is dropped here.
class CharFnEvaluator {
 public:
  struct Leaf {
    bool shift = false;
    Index offset = 0, size = 0;          // coordinates in the ambient space
    Index d_offset = 0, d_size = 0;      // columns of the D_P basis
    Index ds_offset = 0, ds_size = 0;    // columns of the D_{P*} basis
    Index e_offset = 0;                  // columns of the Delta-range basis (shift leaves)
    Mat P;
    DefectData dp, dps;
  };

  CharFnEvaluator(const StructuredOperator& P, const TruncationOrder& trunc, const Tolerances& tol);
  CharFnEvaluator(const Mat& P, const Tolerances& tol);

  const Mat& P() const { return P_; }
  const DefectData& defect_p() const { return dp_; }
  const DefectData& defect_pstar() const { return dps_; }
  Index d() const { return dp_.space.dim(); }
  Index dstar() const { return dps_.space.dim(); }
  Index dim() const { return P_.rows(); }
  const std::vector<Leaf>& leaves() const { return leaves_; }
  const StructuredOperator& structure() const { return op_; }
  const TruncationOrder& truncation() const { return trunc_; }
  const Tolerances& tolerances() const { return tol_; }
  bool has_shift() const;
  bool all_finite_pure() const;  // every block finite with spectral radius < 1
  bool pure_blocks() const;      // every finite block has spectral radius < 1; shift blocks allowed

  // Theta_P(z) from D_P to D_{P*} in the canonical bases
  Mat theta(cplx z) const;
  // Theta_P(z) as an ambient operator restricted to D_P, for range checks
  Mat theta_ambient(cplx z) const;
  Mat delta_sq(double t) const;  // I - Theta* Theta, no cut
  Mat delta(double t) const;     // square root with the defect rank cut on Delta^2
  // D_P-basis columns spanning the range of Delta (the shift blocks)
  const Mat& delta_range() const { return e_select_; }
  Index e_dim() const { return e_select_.cols(); }

  const Mat& astar() const { return astar_; }
  // trusted ambient coordinates: all of a finite block, leading modes of a shift block
  std::vector<Index> trusted() const;

 private:
  void init(const Tolerances& tol);
  const Eigen::PartialPivLU<Mat>& resolvent(std::size_t leaf, cplx z) const;

  StructuredOperator op_;
  TruncationOrder trunc_;
  Tolerances tol_;
  Mat P_;
  DefectData dp_, dps_;
  Mat e_select_;
  Mat astar_;
  std::vector<Leaf> leaves_;
  mutable std::mutex cache_mu_;
  mutable std::map<std::pair<std::size_t, std::pair<double, double>>, Eigen::PartialPivLU<Mat>> cache_;
};

// Radii 0, .25, .5, .75, .95 times 64 angles.
std::vector<cplx> disk_grid();

}  // namespace opkit
