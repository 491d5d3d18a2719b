#include "doctest.h"
#include "opkit/gamma_fo.hpp"

using namespace opkit;

namespace {

Mat scalar(cplx v) { return Mat::Constant(1, 1, v); }

Mat conj_by(const Mat& U, const Mat& X) { return U * X * U.adjoint(); }

}  // namespace

TEST_CASE("scalar fundamental operator") {
  Tolerances tol;
  auto t = OperatorTuple::make({scalar(1.2), scalar(0.5)});
  auto fo = solve_fo_tuple(t, tol);
  REQUIRE(fo.defect_dim == 1);
  CHECK(std::abs(fo.ops[0](0, 0) - 0.8) < 1e-12);
  auto eq = solve_fo_equations(t, tol);
  CHECK(std::abs(eq.ops[0](0, 0) - 0.8) < 1e-10);
  CHECK_FALSE(eq.rank_deficient);
}

TEST_CASE("zero last member gives A = S") {
  Tolerances tol;
  Rng rng(3);
  Mat S1 = rng.contraction(3, 0.5), S2 = rng.contraction(3, 0.3);
  auto t = OperatorTuple::make({S1, S2, Mat::Zero(3, 3)});
  auto fo = solve_fo_tuple(t, tol);
  // D_P = I with canonical basis the coordinate vectors
  const Mat& Q = fo.defect.space.basis;
  CHECK(op_norm(Q * fo.ops[0] * Q.adjoint() - S1) < 1e-12);
  CHECK(op_norm(Q * fo.ops[1] * Q.adjoint() - S2) < 1e-12);
  auto eq = solve_fo_equations(t, tol);
  CHECK(op_norm(Q * eq.ops[0] * Q.adjoint() - S1) < 1e-10);
}

TEST_CASE("unitary last member has an empty fundamental tuple") {
  Tolerances tol;
  auto t = make_gamma_instance(GammaGenerator::SymmetrizedUnitaries, {3, 4}, 11);
  auto fo = solve_fo_tuple(t, tol);
  CHECK(fo.defect_dim == 0);
  CHECK(fo.residual < 1e-10);
}

TEST_CASE("residual too large on a non-member") {
  Tolerances tol;
  // S_1 - S_1* P is not a multiple of D_P^2 once P is unitary
  auto t = OperatorTuple::make({scalar(1.0), scalar(-1.0)});
  CHECK_THROWS_AS(solve_fo_tuple(t, tol), OpkitError);
}

TEST_CASE("classification examples") {
  Tolerances tol;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    auto t = make_gamma_instance(GammaGenerator::SymmetrizedUnitaries, {3, 4}, s);
    CHECK(classify_gamma_tuple(t, tol, 20).verdict == GammaVerdict::GammaUnitary);
  }
  GammaGeneratorParams bp;
  bp.n = 3;
  bp.N = 16;
  auto b = make_gamma_instance(GammaGenerator::BinomialIsometry, bp, 1);
  // members are 2I + M_z, I + 2M_z, M_z
  Mat mz = b.P();
  CHECK(op_norm(b.S(1) - (2 * identity(17) + mz)) < 1e-15);
  CHECK(op_norm(b.S(2) - (identity(17) + 2 * mz)) < 1e-15);
  auto cb = classify_gamma_tuple(b, tol, 20);
  CHECK(cb.verdict == GammaVerdict::PureGammaIsometry);

  auto bad = OperatorTuple::make({3.0 * identity(2), Mat::Zero(2, 2)});
  auto cr = classify_gamma_tuple(bad, tol, 50);
  CHECK(cr.verdict == GammaVerdict::Refuted);
  CHECK(cr.witness.has_value());

  GammaGeneratorParams zp;
  zp.n = 3;
  zp.point = {0.0, 0.0, 0.0};
  auto z = make_gamma_instance(GammaGenerator::ScalarPoint, zp, 1);
  CHECK(classify_gamma_tuple(z, tol, 20).verdict == GammaVerdict::ContractionUnrefuted);
}

TEST_CASE("solver paths agree on pure compressions") {
  Tolerances tol;
  for (int n = 2; n <= 4; ++n)
    for (std::uint64_t s = 1; s <= 6; ++s) {
      GammaGeneratorParams p;
      p.n = n;
      p.dim = 2 + static_cast<int>(s % 5);
      auto t = make_gamma_instance(GammaGenerator::PureCompression, p, s);
      auto fo = solve_fo_tuple(t, tol);
      CHECK(fo.residual <= 1e-8);
      auto eq = solve_fo_equations(t, tol);
      for (int i = 0; i < n - 1; ++i) CHECK(op_norm(fo.ops[i] - eq.ops[i]) <= 1e-7);
    }
}

TEST_CASE("fundamental tuple singular values are unitarily invariant") {
  Tolerances tol;
  Rng rng(9);
  GammaGeneratorParams p;
  p.n = 3;
  p.dim = 4;
  auto t = make_gamma_instance(GammaGenerator::PureCompression, p, 21);
  Mat U = rng.unitary(4);
  std::vector<Mat> m;
  for (const auto& x : t.members) m.push_back(conj_by(U, x));
  auto fo1 = solve_fo_tuple(t, tol);
  auto fo2 = solve_fo_tuple(OperatorTuple::make(m), tol);
  for (int i = 0; i < 2; ++i) {
    Eigen::JacobiSVD<Mat> a(fo1.ops[i]), b(fo2.ops[i]);
    CHECK((a.singularValues() - b.singularValues()).norm() < 1e-8);
  }
}

TEST_CASE("characteristic function examples") {
  Tolerances tol;
  CharFnEvaluator zero(Mat::Zero(2, 2), tol);
  cplx z(0.3, 0.4);
  CHECK(op_norm(zero.theta(z) - z * identity(2)) < 1e-14);
  CharFnEvaluator half(scalar(0.5), tol);
  for (cplx w : {cplx(0, 0), cplx(0.5, -0.2), cplx(-0.9, 0.1)}) {
    cplx expect = (w - 0.5) / (1.0 - 0.5 * w);
    CHECK(std::abs(half.theta(w)(0, 0) - expect) < 1e-14);
  }
  for (double t : {0.0, 1.0, 2.5}) CHECK(op_norm(half.delta(t)) < 1e-7);
  CharFnEvaluator unit(scalar(1.0), tol);
  CHECK(unit.d() == 0);
}

TEST_CASE("relation identities on generated instances") {
  Tolerances tol;
  for (int n = 2; n <= 4; ++n)
    for (std::uint64_t s = 1; s <= 4; ++s) {
      GammaGeneratorParams p;
      p.n = n;
      p.dim = 4;
      auto t = make_gamma_instance(GammaGenerator::PureCompression, p, 100 + s);
      auto A = solve_fo_tuple(t, tol);
      auto B = solve_fo_tuple(t.adjoint(), tol);
      CharFnEvaluator ev(t.P(), tol);
      GammaIdentityInput in;
      in.tuple = &t;
      in.A = &A;
      in.B = &B;
      in.theta = &ev;
      for (const char* id : {"GAMMA-L44", "GAMMA-L45", "GAMMA-L43"}) {
        auto r = verify_gamma_identity(id, in, tol);
        CHECK_MESSAGE(r.pass, id << " residual " << r.residual);
      }
    }
}

TEST_CASE("scalar L43 against a direct Mobius evaluation") {
  Tolerances tol;
  cplx s(0.4, 0.1), p(0.3, -0.2);
  auto t = OperatorTuple::make({scalar(s), scalar(p)});
  auto A = solve_fo_tuple(t, tol);
  auto B = solve_fo_tuple(t.adjoint(), tol);
  cplx a = A.ops[0](0, 0), b = B.ops[0](0, 0);
  for (cplx z : disk_grid()) {
    cplx th = (z - p) / (1.0 - std::conj(p) * z);
    CHECK(std::abs((std::conj(b) + z * b) * th - th * (a + z * std::conj(a))) < 1e-12);
  }
}

TEST_CASE("missing inputs are reported") {
  Tolerances tol;
  auto t = OperatorTuple::make({scalar(0.1), scalar(0.2)});
  GammaIdentityInput in;
  in.tuple = &t;
  CHECK_THROWS_AS(verify_gamma_identity("GAMMA-L44", in, tol), OpkitError);
  CHECK_THROWS_AS(verify_gamma_identity("GAMMA-L41a", in, tol), OpkitError);
}

TEST_CASE("unitary defect identities vanish") {
  Tolerances tol;
  auto t = make_gamma_instance(GammaGenerator::SymmetrizedUnitaries, {3, 3}, 4);
  auto A = solve_fo_tuple(t, tol);
  auto B = solve_fo_tuple(t.adjoint(), tol);
  GammaIdentityInput in;
  in.tuple = &t;
  in.A = &A;
  in.B = &B;
  auto r = verify_gamma_identity("GAMMA-L45", in, tol);
  CHECK(r.pass);
  CHECK(r.residual == 0.0);
}
