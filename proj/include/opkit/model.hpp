#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "opkit/charfn.hpp"
#include "opkit/gamma_fo.hpp"
#include "opkit/report.hpp"

namespace opkit {

// Coordinates of K = H^2_N(D_{P*}) (+) L^2(E), E the range of Delta. Both parts are
// mode-major; the L^2 part keeps modes -(N+1)..(N+1) so that the flip of mode N fits.
struct ModelLayout {
  int N = 0;
  Index dstar = 0;  // dim D_{P*}
  Index e = 0;      // dim E
  Index h2_dim() const { return (N + 1) * dstar; }
  int l2_reach() const { return N + 1; }
  Index l2_dim() const { return (2 * l2_reach() + 1) * e; }
  Index dim() const { return h2_dim() + l2_dim(); }
  Index h2(int mode, Index a) const { return mode * dstar + a; }
  Index l2(int mode, Index a) const { return h2_dim() + (mode + l2_reach()) * e + a; }
};

ModelLayout model_layout(const CharFnEvaluator& ev, int N);

// Taylor coefficients Theta_0..Theta_{count-1} from an FFT on |z| = radius.
std::vector<Mat> theta_taylor(const CharFnEvaluator& ev, int count, int grid = 4096, double radius = 0.98);
// Closed form: Theta_0 = -P, Theta_m = D_* P^{*(m-1)} D, compressed.
std::vector<Mat> theta_taylor_closed(const CharFnEvaluator& ev, int count);

struct ModelSpaces {
  ModelLayout layout;
  int column_modes = 0;  // source modes 0..column_modes of H^2(D_P) used for Q_P
  Mat column;            // (M_Theta; Delta) on H^2_N(D_P), all source modes
  Mat Q_basis;
  Mat H_basis;
  double isometry_defect = 0;  // on source modes 0..column_modes
};

// Column operator H^2_N(D_P) -> K.
Mat model_column(const CharFnEvaluator& ev, const ModelLayout& layout);
ModelSpaces build_model_spaces(const CharFnEvaluator& ev, const TruncationOrder& trunc, const Tolerances& tol);

// Douglas embedding of the ambient space into K.
Mat douglas_embedding(const CharFnEvaluator& ev, const ModelLayout& layout, const Tolerances& tol);
// Gram defect of phi_1 on trusted coordinates, raw and with finite-block tails added back.
struct IsometryDefect {
  double raw = 0;
  double corrected = 0;
};
IsometryDefect douglas_isometry_defect(const CharFnEvaluator& ev, const Mat& phi1);

// M_z (+) M_{e^{-it}} (Douglas) and M_z (+) M_{e^{it}} (model), truncated.
Mat douglas_isometry(const ModelLayout& layout);
Mat model_isometry(const ModelLayout& layout);
// e^{imt} -> e^{-i(m+1)t} on the L^2 part, identity on H^2.
Mat flip(const ModelLayout& layout);
Mat nf_embedding(const Mat& phi1, const ModelLayout& layout, const ModelSpaces& spaces);
// Least-squares U with U V_model^k phi_2 = V_Douglas^k phi_1, k = 0..N/2.
Mat dilation_intertwiner(const Mat& phi1, const Mat& phi2, const ModelLayout& layout);

// Block operator on K: multiplier by X0 + z X1 on H^2_N(D_*) and by c0 + c1 e^{it} on L^2(E).
Mat w_block(const ModelLayout& layout, const Mat& X0, const Mat& X1, cplx c0, cplx c1);
// Multiplier by Y0 + z Y1 on H^2_N(C^k), modes 0..N.
Mat hardy_multiplier(int N, const Mat& Y0, const Mat& Y1);

struct DilationInstance {
  std::shared_ptr<const CharFnEvaluator> ev;
  OperatorTuple tuple;
  FoTuple A, B;  // A on D_P; B on the effective D_{P*}
  TruncationOrder trunc;
  ModelSpaces spaces;
  Mat phi1, phi2;
  std::vector<Mat> W;  // W_1..W_{n-1} on K
  bool pure = false;
  bool astar_surrogate = false;
  bool constructed = false;
  double commutation = 0;
  double roundtrip_A = 0, roundtrip_B = 0;
  std::string digest;
};

// Fundamental data of an operator tuple through the structure-aware defect bases.
FoTuple fo_of(const OperatorTuple& t, const CharFnEvaluator& ev, const Tolerances& tol);
FoTuple fo_of_adjoint(const OperatorTuple& t, const CharFnEvaluator& ev, const Tolerances& tol);

DilationInstance prepare_dilation(const OperatorTuple& t, std::shared_ptr<const CharFnEvaluator> ev,
                                  const TruncationOrder& trunc, const Tolerances& tol);
DilationInstance construct_from_fo_data(std::shared_ptr<const CharFnEvaluator> ev, const std::vector<Mat>& A,
                                        const std::vector<Mat>& B, const TruncationOrder& trunc, const Tolerances& tol,
                                        int sigma_samples = 8, std::uint64_t seed = 1);

// Binomial multipliers c_j + c'_j z on H^2 compressed through the column of the scalar p.
DilationInstance binomial_multiplier_instance(int n, const TruncationOrder& trunc, cplx p, const Tolerances& tol);

// Coefficients of Delta(t)^2 (W0 + e^{it} W1) for |m| <= m_range, in the D_P basis.
std::map<int, Mat> fourier_coeffs_numeric(const CharFnEvaluator& ev, const Mat& W0, const Mat& W1, int m_range,
                                          int grid);
std::map<int, Mat> fourier_coeffs_numeric(const CharFnEvaluator& ev, cplx c0, cplx c1, int m_range, int grid);

struct AppendixCoeffs {
  std::map<int, Mat> I, J;
};
AppendixCoeffs fourier_coeffs_closed(const DilationInstance& inst, int j, int m_range);

// Commuting square diag(M_{X0+zX1}, M_{c0+c1 e^{it}}) C = C M_{Y0+zY1} on the source window.
double square_residual(const ModelSpaces& spaces, const Mat& X0, const Mat& X1, cplx c0, cplx c1, const Mat& Y0,
                       const Mat& Y1, int source_modes);

struct ExtractResult {
  std::vector<Mat> Y0, Y1;  // constant and z coefficients per index
  double structural = 0;    // Toeplitz residual
  double degree_excess = 0; // norm of coefficients outside degrees 0 and 1
};
// T = C* W C, then Toeplitz fit on the leading half of the modes.
ExtractResult extract_multipliers(const ModelSpaces& spaces, const std::vector<Mat>& W, Index block,
                                  const Tolerances& tol);

struct ModelVerifyOptions {
  int m_range = 8;
  int grid = 4096;
  int samples = 8;
  std::uint64_t seed = 1;
};
// MODEL-APPX, MODEL-REL1, MODEL-NEC, MODEL-EXTRACT, MODEL-DOUG, MODEL-BLKDIAG, MODEL-POWDIL
VerificationReport verify_model_identity(const std::string& id, const DilationInstance* inst, const Tolerances& tol,
                                         const ModelVerifyOptions& opt = {});

// Instances with a genuine dilation structure.
enum class ModelFamily { Backshift, ZeroP, PureSigmaSafe };
struct ModelInstanceParams {
  int n = 3;
  int N = 32;
  int block = 1;  // shift multiplicity
  int dim = 4;    // finite kinds
  int margin = 3;
};
struct ModelInstance {
  OperatorTuple tuple;
  StructuredOperator P;
  TruncationOrder trunc;
};
ModelInstance make_model_instance(ModelFamily kind, const ModelInstanceParams& p, std::uint64_t seed);
std::shared_ptr<const CharFnEvaluator> make_evaluator(const ModelInstance& m, const Tolerances& tol);

}  // namespace opkit
