#include "doctest.h"
#include "opkit/tetrablock.hpp"

using namespace opkit;

namespace {

Mat scalar(cplx v) { return Mat::Constant(1, 1, v); }

}  // namespace

TEST_CASE("scalar fundamental pair") {
  Tolerances tol;
  cplx a = 0.3, b = 0.4, p = 0.5;
  auto m = tetrablock_membership({a, b, p}, tol);
  REQUIRE((m.status == Membership::Interior || m.status == Membership::InSet));
  auto f = solve_fo_pair(ETriple::make(scalar(a), scalar(b), scalar(p)), tol);
  double den = 1 - std::norm(p);
  CHECK(std::abs(f.F1(0, 0) - (a - std::conj(b) * p) / den) < 1e-12);
  CHECK(std::abs(f.F2(0, 0) - (b - std::conj(a) * p) / den) < 1e-12);
  CHECK(f.fo_commute);
  CHECK(f.defect_balance);
}

TEST_CASE("pair examples") {
  Tolerances tol;
  Rng rng(4);
  Mat A = rng.contraction(3, 0.4), B = rng.contraction(3, 0.3);
  auto f = solve_fo_pair(ETriple::make(A, B, Mat::Zero(3, 3)), tol);
  const Mat& Q = f.defect.space.basis;
  CHECK(op_norm(Q * f.F1 * Q.adjoint() - A) < 1e-12);
  CHECK(op_norm(Q * f.F2 * Q.adjoint() - B) < 1e-12);
  auto u = make_e_instance(EGenerator::EUnitary, {3}, 5);
  auto fu = solve_fo_pair(u, tol);
  CHECK(fu.F1.size() == 0);
  CHECK(fu.residual < 1e-10);
}

TEST_CASE("classification") {
  Tolerances tol;
  for (std::uint64_t s = 1; s <= 10; ++s)
    CHECK(classify_e_triple(make_e_instance(EGenerator::EUnitary, {4}, s), tol, 20).verdict == EVerdict::EUnitary);
  EGeneratorParams hp;
  hp.N = 24;
  CHECK(classify_e_triple(make_e_instance(EGenerator::HalfIsometry, hp, 1), tol, 20).verdict == EVerdict::EIsometry);
  auto bad = ETriple::make(2.0 * identity(2), Mat::Zero(2, 2), Mat::Zero(2, 2));
  auto c = classify_e_triple(bad, tol, 50);
  CHECK(c.verdict == EVerdict::Refuted);
  CHECK(c.witness.has_value());
}

TEST_CASE("intertwining through the adjoint characteristic function") {
  Tolerances tol;
  for (auto kind : {EGenerator::ProductPure, EGenerator::HalfGamma, EGenerator::ScalarPoint})
    for (std::uint64_t s = 1; s <= 3; ++s) {
      auto t = make_e_instance(kind, {4}, s);
      auto F = solve_fo_pair(t, tol);
      auto G = solve_fo_pair(t.adjoint(), tol);
      CharFnEvaluator ev(t.P.adjoint(), tol);
      ETetraInput in;
      in.F = &F;
      in.G = &G;
      in.theta_adj = &ev;
      for (const char* id : {"TETRA-L52a", "TETRA-L52b"}) {
        auto r = verify_tetra_identity(id, in, tol);
        CHECK_MESSAGE(r.pass, id << " " << r.residual);
      }
    }
}

TEST_CASE("half unitary triple") {
  Tolerances tol;
  ETetraInput in;
  in.N = 32;
  CHECK(verify_tetra_identity("TETRA-HALFUNIT", in, tol).pass);
}

TEST_CASE("construction round trip and dilation") {
  Tolerances tol;
  TruncationOrder tr{32, 3};
  for (auto kind : {EGenerator::ProductPure, EGenerator::HalfGamma, EGenerator::Backshift}) {
    EGeneratorParams p;
    p.dim = 4;
    p.N = 32;
    auto t = make_e_instance(kind, p, 3);
    auto ev = std::make_shared<const CharFnEvaluator>(e_structure(kind, t), tr, tol);
    FoPair F, G;
    auto inst = prepare_e_dilation(t, ev, tr, tol, &F, &G);
    auto c = construct_e_from_fo(ev, F.F1, F.F2, G.F1, G.F2, tr, tol);
    CHECK(c.roundtrip_F < 1e-6);
    CHECK(c.roundtrip_G < 1e-6);
    ETetraInput in;
    in.model = &c.model;
    for (const char* id : {"TETRA-NEC", "TETRA-EXTRACT", "TETRA-DIL"}) {
      auto r = verify_tetra_identity(id, in, tol);
      CHECK_MESSAGE(r.pass, id << " kind " << static_cast<int>(kind) << " " << to_json(r).dump());
    }
    if (kind == EGenerator::Backshift) {
      ETetraInput a;
      a.triple = &c.triple;
      Mat As = ev->astar();
      a.astar = &As;
      a.trusted = ev->trusted();
      CHECK(verify_tetra_identity("TETRA-ASTAR", a, tol).pass);
    }
  }
}

TEST_CASE("construction rejects non-commuting pairs") {
  Tolerances tol;
  TruncationOrder tr{16, 3};
  Rng rng(1);
  auto ev = std::make_shared<const CharFnEvaluator>(StructuredOperator::make_finite(rng.contraction(2, 0.5)), tr, tol);
  Mat F1 = rng.gaussian(2, 2), F2 = rng.gaussian(2, 2);
  CHECK_THROWS_AS(construct_e_from_fo(ev, F1, F2, F1, F2, tr, tol), OpkitError);
}
