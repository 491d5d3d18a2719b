#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opkit/charfn.hpp"
#include "opkit/gamma_domain.hpp"
#include "opkit/report.hpp"

namespace opkit {

struct OperatorTuple {
  int n = 0;
  std::vector<Mat> members;  // S_1, ..., S_{n-1}, P
  double commutation_residual = 0;
  // Leading coordinates trusted for truncated surrogates; 0 means all.
  Index window = 0;

  static OperatorTuple make(std::vector<Mat> members, Index window = 0);
  const Mat& S(int i) const { return members.at(static_cast<std::size_t>(i - 1)); }
  const Mat& P() const { return members.back(); }
  Index dim() const { return members.empty() ? 0 : members.front().rows(); }
  Index trusted() const { return window > 0 ? std::min(window, dim()) : dim(); }
  OperatorTuple adjoint() const;
};

struct FoTuple {
  int n = 0;
  std::vector<Mat> ops;  // A_1, ..., A_{n-1} in the canonical D_P basis
  Index defect_dim = 0;
  double residual = 0;
  DefectData defect;
};

enum class GammaVerdict { GammaUnitary, GammaIsometry, PureGammaIsometry, ContractionUnrefuted, Refuted };
const char* verdict_name(GammaVerdict v);

struct GammaClass {
  GammaVerdict verdict = GammaVerdict::ContractionUnrefuted;
  std::map<std::string, double> evidence;
  std::optional<RefutationWitness> witness;
  bool one_sided = true;  // the scaled-tuple subcheck is refutation based for n >= 3
};

GammaClass classify_gamma_tuple(const OperatorTuple& t, const Tolerances& tol, int samples, std::uint64_t seed = 1);

// `defect_override` replaces defect(P) (structure-aware callers).
FoTuple solve_fo_tuple(const OperatorTuple& t, const Tolerances& tol, const DefectData* defect_override = nullptr);

struct FoEquationsSolution {
  std::vector<Mat> ops;
  double residual = 0;
  bool rank_deficient = false;
  double min_singular = 0;
};
FoEquationsSolution solve_fo_equations(const OperatorTuple& t, const Tolerances& tol,
                                       const DefectData* defect_override = nullptr);

// Max of the sandwich reconstruction error for given A (in the basis of `defect`).
double fo_reconstruction_residual(const OperatorTuple& t, const std::vector<Mat>& A, const DefectData& defect);

enum class GammaGenerator { SymmetrizedUnitaries, BinomialIsometry, PureCompression, ScalarPoint };
struct GammaGeneratorParams {
  int n = 3;
  int dim = 4;     // ambient dimension for finite kinds
  int N = 16;      // truncation for the binomial kind
  int block = 1;   // multiplicity for the binomial kind
  int margin = 3;
  double radius = 0.6;       // spectral bound for the pure kind
  std::vector<cplx> point;   // scalar kind; random interior point if empty
};
GammaGenerator parse_gamma_generator(const std::string& id);
OperatorTuple make_gamma_instance(GammaGenerator kind, const GammaGeneratorParams& params, std::uint64_t seed);

// Data for the relation identities; null members are reported as missing.
struct GammaIdentityInput {
  const OperatorTuple* tuple = nullptr;
  const FoTuple* A = nullptr;  // of the tuple
  const FoTuple* B = nullptr;  // of the adjoint tuple
  const CharFnEvaluator* theta = nullptr;
  const Mat* astar = nullptr;
  std::vector<Index> trusted;  // coordinates for window-restricted norms; empty means all
  int samples = 20;            // refutation polynomials per grid point (SIGMA)
  std::uint64_t seed = 1;
};

// GAMMA-L44, GAMMA-L45, GAMMA-L43, GAMMA-L41a, GAMMA-L41b, GAMMA-SIGMA
VerificationReport verify_gamma_identity(const std::string& id, const GammaIdentityInput& in, const Tolerances& tol);

// Sigma_1(z) (which = 1) from A, or Sigma_2(z) (which = 2) from B.
std::vector<Mat> sigma_tuple(int which, const std::vector<Mat>& ops, cplx z);
// Refutation sampled check that every Sigma(z) on the disk grid is a Gamma_{n-1}-contraction.
bool sigma_unrefuted(int which, const std::vector<Mat>& ops, const Tolerances& tol, int samples, std::uint64_t seed,
                     double* worst = nullptr);

double windowed_norm(const Mat& M, const std::vector<Index>& rows, const std::vector<Index>& cols);

}  // namespace opkit
