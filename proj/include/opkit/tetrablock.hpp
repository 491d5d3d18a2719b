#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opkit/model.hpp"

namespace opkit {

struct ETriple {
  Mat A, B, P;
  double commutation_residual = 0;
  Index window = 0;  // leading trusted coordinates, 0 means all

  static ETriple make(const Mat& A, const Mat& B, const Mat& P, Index window = 0);
  Index dim() const { return P.rows(); }
  Index trusted() const { return window > 0 ? std::min(window, dim()) : dim(); }
  ETriple adjoint() const;
  // (A, B, P) read as a three-member tuple; the fundamental equations coincide
  OperatorTuple as_tuple() const;
};

struct FoPair {
  Mat F1, F2;
  double residual = 0;
  double solver_gap = 0;  // sandwich solve vs. realified system
  bool rank_deficient = false;
  bool fo_commute = false;
  bool defect_balance = false;
  DefectData defect;
};

enum class EVerdict { EUnitary, EIsometry, ContractionUnrefuted, Refuted };
const char* e_verdict_name(EVerdict v);
struct EClass {
  EVerdict verdict = EVerdict::ContractionUnrefuted;
  std::map<std::string, double> evidence;
  std::optional<RefutationWitness> witness;
};

EClass classify_e_triple(const ETriple& t, const Tolerances& tol, int samples, std::uint64_t seed = 1);
FoPair solve_fo_pair(const ETriple& t, const Tolerances& tol, const DefectData* defect_override = nullptr);

enum class EGenerator { EUnitary, HalfIsometry, ProductPure, HalfGamma, Backshift, ScalarPoint };
struct EGeneratorParams {
  int dim = 4;
  int N = 32;
  int margin = 3;
  std::vector<cplx> point;  // scalar kind; a random interior point if empty
};
EGenerator parse_e_generator(const std::string& id);
ETriple make_e_instance(EGenerator kind, const EGeneratorParams& p, std::uint64_t seed);
// Structure of P for the model machinery (shift-adjoint for the backshift kind).
StructuredOperator e_structure(EGenerator kind, const ETriple& t);

struct ETetraInput {
  const ETriple* triple = nullptr;
  const FoPair* F = nullptr;   // of the triple
  const FoPair* G = nullptr;   // of the adjoint triple
  const CharFnEvaluator* theta_adj = nullptr;  // evaluator of P*
  const Mat* astar = nullptr;
  const DilationInstance* model = nullptr;     // for NEC/EXTRACT/DIL
  std::vector<Index> trusted;
  int N = 32;  // HALFUNIT truncation
  int samples = 8;
  std::uint64_t seed = 1;
};
// TETRA-L52a, TETRA-L52b, TETRA-ASTAR, TETRA-HALFUNIT, TETRA-NEC, TETRA-EXTRACT, TETRA-DIL
VerificationReport verify_tetra_identity(const std::string& id, const ETetraInput& in, const Tolerances& tol);

// Dilation data of a triple through the model of P; W_1, W_2 carry the (I + e^{it})/2 block.
DilationInstance prepare_e_dilation(const ETriple& t, std::shared_ptr<const CharFnEvaluator> ev,
                                    const TruncationOrder& trunc, const Tolerances& tol, FoPair* F, FoPair* G);
struct EConstruction {
  ETriple triple;
  DilationInstance model;
  FoPair F, G;
  double roundtrip_F = 0, roundtrip_G = 0;
};
EConstruction construct_e_from_fo(std::shared_ptr<const CharFnEvaluator> ev, const Mat& F1, const Mat& F2,
                                  const Mat& G1, const Mat& G2, const TruncationOrder& trunc, const Tolerances& tol);

}  // namespace opkit
