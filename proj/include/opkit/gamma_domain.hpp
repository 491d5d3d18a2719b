#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "opkit/linalg.hpp"
#include "opkit/polynomial.hpp"

namespace opkit {

struct GammaPoint {
  int n = 0;
  std::vector<cplx> coords;  // (s_1, ..., s_{n-1}, p)
};

enum class Membership { Interior, InSet, OnDistinguishedBoundary, Outside };
const char* membership_name(Membership m);

struct MembershipVerdict {
  Membership status = Membership::Outside;
  std::vector<cplx> witness;  // roots, or (beta_1, beta_2) for the tetrablock
  double margin = 0;          // positive inside, negative outside
};

GammaPoint symmetrize(const std::vector<cplx>& z);
MembershipVerdict gamma_membership(const GammaPoint& pt, const Tolerances& tol);
MembershipVerdict tetrablock_membership(const std::vector<cplx>& x, const Tolerances& tol);
double mu_diag_2x2(const Mat& A, const Tolerances& tol);

// A compact parameter box mapped onto a boundary set; polynomials are maximized
// over a fixed sample of it, then optionally polished by coordinate search.
class BoundarySampler {
 public:
  using Map = std::function<std::vector<cplx>(const std::vector<double>&)>;
  BoundarySampler(int nvars, Map map, std::vector<double> lo, std::vector<double> hi, std::vector<bool> periodic,
                  std::vector<std::vector<double>> params, int max_degree);

  int nvars() const { return nvars_; }
  double grid_max(const Polynomial& f, std::vector<double>* argmax = nullptr) const;
  double refine(const Polynomial& f, std::vector<double> start) const;
  // grid max, then refined from the best `starts` grid points
  double sup(const Polynomial& f, int starts) const;

 private:
  int nvars_;
  Map map_;
  std::vector<double> lo_, hi_;
  std::vector<bool> periodic_;
  std::vector<std::vector<double>> params_;
  std::vector<std::vector<int>> exps_;
  std::vector<Vec> mono_;  // per point, monomial values in exps_ order
};

// Torus sample of pi_n(T^n): nondecreasing index tuples on an equispaced grid (the
// image is symmetric, so this loses nothing). Random torus points beyond 1e7 tuples.
BoundarySampler gamma_sampler(int n, int grid, int max_degree, bool* sampled = nullptr);
// b E parametrized by x_2 = r e^{i phi}, x_3 = e^{i psi}, x_1 = conj(x_2) x_3.
BoundarySampler tetrablock_sampler(int radial, int angular, int max_degree);

struct SupEstimate {
  double value = 0;     // lower bound from the grid
  double refined = 0;   // after local polishing, still a lower bound
  bool sampled = false; // random torus points were used
};
SupEstimate sup_norm_on_gamma(const Polynomial& f, int n, int grid);

struct RefutationWitness {
  Polynomial f;
  double tuple_norm = 0;
  double sup = 0;
};

// Probes coordinate functions first, then random polynomials of degree <= 4.
std::optional<RefutationWitness> refute_on(const std::vector<Mat>& tuple, const BoundarySampler& sampler, int samples,
                                           std::uint64_t seed, double rel_tol);
std::optional<RefutationWitness> refute_gamma_contraction(const std::vector<Mat>& tuple, int samples,
                                                          std::uint64_t seed, double rel_tol = 1e-3);
std::optional<RefutationWitness> refute_e_contraction(const std::vector<Mat>& triple, int samples,
                                                      std::uint64_t seed, double rel_tol = 1e-3);

}  // namespace opkit
