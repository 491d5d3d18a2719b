#include "doctest.h"
#include "opkit/model.hpp"

using namespace opkit;

namespace {

Mat scalar(cplx v) { return Mat::Constant(1, 1, v); }

}  // namespace

TEST_CASE("Taylor coefficients match the resolvent expansion") {
  Tolerances tol;
  Rng rng(2);
  CharFnEvaluator ev(rng.contraction(3, 0.6), tol);
  auto fft = theta_taylor(ev, 20);
  auto closed = theta_taylor_closed(ev, 20);
  for (int m = 0; m < 20; ++m) CHECK(op_norm(fft[m] - closed[m]) < 1e-10);
}

TEST_CASE("backward shift evaluator") {
  Tolerances tol;
  TruncationOrder tr{16, 3};
  CharFnEvaluator ev(StructuredOperator::make_shift_adjoint(1), tr, tol);
  CHECK(ev.d() == 1);
  CHECK(ev.dstar() == 0);
  CHECK(ev.e_dim() == 1);
  CHECK(op_norm(ev.delta(0.7) - identity(1)) < 1e-14);
  CHECK(op_norm(ev.astar() - identity(17)) < 1e-14);
  auto c = fourier_coeffs_numeric(ev, 1.0, 0.0, 4, 64);
  CHECK(std::abs(c.at(0)(0, 0) - 1.0) < 1e-14);
  CHECK(op_norm(c.at(1)) < 1e-14);
  auto c1 = fourier_coeffs_numeric(ev, 0.0, 1.0, 4, 64);
  CHECK(std::abs(c1.at(1)(0, 0) - 1.0) < 1e-14);
  CHECK(op_norm(c1.at(0)) < 1e-14);
}

TEST_CASE("model spaces of simple operators") {
  Tolerances tol;
  TruncationOrder tr{16, 3};
  // scalar Mobius symbol: the model space is one dimensional
  CharFnEvaluator half(StructuredOperator::make_finite(scalar(0.5)), tr, tol);
  auto s = build_model_spaces(half, tr, tol);
  auto phi1 = douglas_embedding(half, s.layout, tol);
  auto phi2 = nf_embedding(phi1, s.layout, s);
  CHECK(op_norm(s.Q_basis.adjoint() * phi2) < 1e-8);
  CHECK(op_norm(phi2.adjoint() * phi2 - identity(1)) < 1e-10);

  // P = 0: phi_1 sends h to the constant h
  CharFnEvaluator zero(StructuredOperator::make_finite(Mat::Zero(2, 2)), tr, tol);
  auto z = build_model_spaces(zero, tr, tol);
  auto p0 = douglas_embedding(zero, z.layout, tol);
  CHECK(op_norm(p0.topRows(2) - identity(2)) < 1e-14);
  CHECK(op_norm(p0.bottomRows(p0.rows() - 2)) < 1e-14);

  // backward shift: phi_1 h lands in L^2, the model space is the negative modes
  CharFnEvaluator bs(StructuredOperator::make_shift_adjoint(1), tr, tol);
  auto b = build_model_spaces(bs, tr, tol);
  auto pb = douglas_embedding(bs, b.layout, tol);
  CHECK(b.layout.dstar == 0);
  CHECK(op_norm(pb.adjoint() * pb - identity(17)) < 1e-14);
  auto pb2 = nf_embedding(pb, b.layout, b);
  for (int m = 0; m <= 16; ++m) CHECK(std::abs(pb2(b.layout.l2(-(m + 1), 0), m)) > 1 - 1e-12);
}

TEST_CASE("pure finite evaluator has inner symbol") {
  Tolerances tol;
  Rng rng(5);
  TruncationOrder tr{32, 3};
  CharFnEvaluator ev(StructuredOperator::make_finite(rng.contraction(4, 0.5)), tr, tol);
  for (double t : {0.1, 1.3, 4.0}) CHECK(op_norm(ev.delta_sq(t)) < 1e-10);
  for (cplx z : disk_grid()) CHECK(op_norm(ev.theta(z)) <= 1 + 1e-8);
}

TEST_CASE("construction round trip on model instances") {
  Tolerances tol;
  struct Case {
    ModelFamily kind;
    int n, dim;
  };
  for (Case c : {Case{ModelFamily::PureSigmaSafe, 2, 4}, Case{ModelFamily::PureSigmaSafe, 3, 4},
                 Case{ModelFamily::ZeroP, 3, 2}, Case{ModelFamily::Backshift, 3, 1}}) {
    ModelInstanceParams p;
    p.n = c.n;
    p.dim = c.dim;
    p.N = 32;
    auto mi = make_model_instance(c.kind, p, 7);
    auto ev = make_evaluator(mi, tol);
    auto inst = prepare_dilation(mi.tuple, ev, mi.trunc, tol);
    auto built = construct_from_fo_data(ev, inst.A.ops, inst.B.ops, mi.trunc, tol);
    CHECK(built.roundtrip_A < 1e-6);
    CHECK(built.roundtrip_B < 1e-6);
    auto tr = ev->trusted();
    for (int j = 1; j < c.n; ++j) CHECK(windowed_norm(built.tuple.S(j) - mi.tuple.S(j), tr, tr) < 1e-6);
    for (const char* id : {"MODEL-NEC", "MODEL-EXTRACT", "MODEL-DOUG", "MODEL-BLKDIAG", "MODEL-POWDIL", "MODEL-REL1"}) {
      auto r = verify_model_identity(id, &built, tol);
      CHECK_MESSAGE(r.pass, id << " kind " << static_cast<int>(c.kind) << " n " << c.n << " residual " << r.residual
                               << " " << to_json(r).dump());
    }
  }
}

TEST_CASE("appendix coefficients on the backward shift") {
  Tolerances tol;
  ModelInstanceParams p;
  p.n = 3;
  p.N = 32;
  auto mi = make_model_instance(ModelFamily::Backshift, p, 1);
  auto ev = make_evaluator(mi, tol);
  auto inst = prepare_dilation(mi.tuple, ev, mi.trunc, tol);
  for (int j = 1; j < 3; ++j) {
    auto cf = fourier_coeffs_closed(inst, j, 8);
    CHECK(std::abs(cf.I.at(0)(0, 0) - binomial(2, j)) < 1e-14);
    CHECK(std::abs(cf.I.at(1)(0, 0) - binomial(2, j - 1)) < 1e-14);
    for (int m = 2; m <= 8; ++m) {
      CHECK(op_norm(cf.I.at(m)) < 1e-14);
      CHECK(op_norm(cf.I.at(-m)) < 1e-14);
    }
  }
  auto r = verify_model_identity("MODEL-APPX", &inst, tol, {8, 1024});
  CHECK_MESSAGE(r.pass, to_json(r).dump());
}

TEST_CASE("construction rejects data that violate the square") {
  Tolerances tol;
  ModelInstanceParams p;
  p.n = 2;
  p.dim = 2;
  auto mi = make_model_instance(ModelFamily::PureSigmaSafe, p, 3);
  auto ev = make_evaluator(mi, tol);
  auto inst = prepare_dilation(mi.tuple, ev, mi.trunc, tol);
  auto A = inst.A.ops;
  A[0] += 1e-3 * identity(A[0].rows());
  CHECK_THROWS_AS(construct_from_fo_data(ev, A, inst.B.ops, mi.trunc, tol), OpkitError);
}
