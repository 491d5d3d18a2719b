#include "opkit/tetrablock.hpp"

#include <algorithm>
#include <cmath>

namespace opkit {

namespace {

double lead_norm(const Mat& M, Index w) { return op_norm(M.topLeftCorner(std::min(w, M.rows()), std::min(w, M.cols()))); }

Mat comm(const Mat& X, const Mat& Y) { return X * Y - Y * X; }

Index prefix_window(const CharFnEvaluator& ev) {
  auto tr = ev.trusted();
  for (std::size_t i = 0; i < tr.size(); ++i)
    if (tr[i] != static_cast<Index>(i)) return 0;
  return tr.size() == static_cast<std::size_t>(ev.dim()) ? 0 : static_cast<Index>(tr.size());
}

}  // namespace

const char* e_verdict_name(EVerdict v) {
  switch (v) {
    case EVerdict::EUnitary: return "EUnitary";
    case EVerdict::EIsometry: return "EIsometry";
    case EVerdict::ContractionUnrefuted: return "ContractionUnrefuted";
    case EVerdict::Refuted: return "Refuted";
  }
  return "Unknown";
}

ETriple ETriple::make(const Mat& A, const Mat& B, const Mat& P, Index window) {
  require_square(A, "A");
  require_square(B, "B");
  require_square(P, "P");
  if (A.rows() != P.rows() || B.rows() != P.rows()) fail(ErrorCode::DimensionMismatch, "triple members differ in size");
  for (const Mat* m : {&A, &B, &P}) require_finite(*m, "triple member");
  ETriple t;
  t.A = A;
  t.B = B;
  t.P = P;
  t.window = window;
  t.commutation_residual = opkit::commutation_residual({A, B, P});
  return t;
}

ETriple ETriple::adjoint() const { return make(A.adjoint(), B.adjoint(), P.adjoint(), window); }

OperatorTuple ETriple::as_tuple() const { return OperatorTuple::make({A, B, P}, window); }

EClass classify_e_triple(const ETriple& t, const Tolerances& tol, int samples, std::uint64_t seed) {
  EClass out;
  const Index w = t.trusted();
  const Mat I = identity(t.dim());
  out.evidence["commutation"] = t.commutation_residual;
  if (t.commutation_residual > tol.residual_tol) {
    out.verdict = EVerdict::Refuted;
    return out;
  }
  double iso = lead_norm(t.P.adjoint() * t.P - I, w);
  double coiso = lead_norm(t.P * t.P.adjoint() - I, w);
  double rel = lead_norm(t.A - t.B.adjoint() * t.P, w);
  double bnorm = op_norm(t.B);
  out.evidence["isometry"] = iso;
  out.evidence["coisometry"] = coiso;
  out.evidence["relation"] = rel;
  out.evidence["b_norm"] = bnorm;
  if (iso <= tol.residual_tol && rel <= tol.residual_tol && bnorm <= 1 + tol.residual_tol) {
    out.verdict = coiso <= tol.residual_tol && t.window == 0 ? EVerdict::EUnitary : EVerdict::EIsometry;
    return out;
  }
  auto wit = refute_e_contraction({t.A, t.B, t.P}, samples, seed);
  if (wit) {
    out.verdict = EVerdict::Refuted;
    out.witness = wit;
    out.evidence["witness_norm"] = wit->tuple_norm;
    out.evidence["witness_sup"] = wit->sup;
  }
  return out;
}

FoPair solve_fo_pair(const ETriple& t, const Tolerances& tol, const DefectData* defect_override) {
  auto tuple = t.as_tuple();
  auto fo = solve_fo_tuple(tuple, tol, defect_override);
  auto eq = solve_fo_equations(tuple, tol, defect_override);
  FoPair out;
  out.F1 = fo.ops[0];
  out.F2 = fo.ops[1];
  out.residual = fo.residual;
  out.defect = fo.defect;
  out.rank_deficient = eq.rank_deficient;
  for (int i = 0; i < 2; ++i) out.solver_gap = std::max(out.solver_gap, op_norm(fo.ops[i] - eq.ops[i]));
  if (out.solver_gap > 10 * tol.residual_tol && !out.rank_deficient)
    fail(ErrorCode::SolverDisagreement, "sandwich and coupled solves differ by " + std::to_string(out.solver_gap));
  out.fo_commute = op_norm(comm(out.F1, out.F2)) <= tol.residual_tol;
  out.defect_balance =
      op_norm(comm(out.F1, out.F1.adjoint()) - comm(out.F2, out.F2.adjoint())) <= tol.residual_tol;
  return out;
}

EGenerator parse_e_generator(const std::string& id) {
  if (id == "e-unitary") return EGenerator::EUnitary;
  if (id == "half-isometry") return EGenerator::HalfIsometry;
  if (id == "product-pure") return EGenerator::ProductPure;
  if (id == "half-gamma") return EGenerator::HalfGamma;
  if (id == "e-backshift") return EGenerator::Backshift;
  if (id == "e-scalar") return EGenerator::ScalarPoint;
  fail(ErrorCode::InvalidParams, "unknown tetrablock generator '" + id + "'");
}

ETriple make_e_instance(EGenerator kind, const EGeneratorParams& p, std::uint64_t seed) {
  Rng rng(seed);
  switch (kind) {
    case EGenerator::EUnitary: {
      if (p.dim < 1) fail(ErrorCode::InvalidParams, "dim must be positive");
      Mat W = rng.unitary(p.dim);
      Mat d3 = Mat::Zero(p.dim, p.dim), d2 = Mat::Zero(p.dim, p.dim);
      for (Index i = 0; i < p.dim; ++i) {
        d3(i, i) = rng.unit_phase();
        d2(i, i) = rng.uniform() * rng.unit_phase();
      }
      Mat V3 = W * d3 * W.adjoint(), V2 = W * d2 * W.adjoint();
      return ETriple::make(V2.adjoint() * V3, V2, V3);
    }
    case EGenerator::HalfIsometry:
    case EGenerator::Backshift: {
      TruncationOrder tr{p.N, p.margin};
      tr.validate();
      Mat P = kind == EGenerator::Backshift
                  ? materialize(StructuredOperator::make_shift_adjoint(1), tr)
                  : materialize(StructuredOperator::make_hardy(TrigPolySymbol::from_map(1, {{1, identity(1)}})), tr);
      Mat H = 0.5 * (identity(P.rows()) + P);
      return ETriple::make(H, H, P, p.N + 1 - p.margin);
    }
    case EGenerator::ProductPure: {
      if (p.dim < 1 || p.dim > 8) fail(ErrorCode::InvalidParams, "product generator needs 1 <= dim <= 8");
      const int m = p.dim % 2 == 0 ? p.dim / 2 : p.dim;
      const int u = p.dim / m;
      Mat U = rng.unitary(u), T = rng.contraction(m, 0.5);
      Mat X = kron(U, identity(m)), Y = kron(identity(u), T);
      if (rng.integer(0, 1)) return ETriple::make(Y, X, X * Y);
      return ETriple::make(X, Y, X * Y);
    }
    case EGenerator::HalfGamma: {
      ModelInstanceParams mp;
      mp.n = 2;
      mp.dim = p.dim;
      auto mi = make_model_instance(ModelFamily::PureSigmaSafe, mp, seed);
      Mat H = 0.5 * mi.tuple.S(1);
      return ETriple::make(H, H, mi.tuple.P());
    }
    case EGenerator::ScalarPoint: {
      std::vector<cplx> x = p.point;
      if (x.empty()) {
        cplx x3 = std::polar(rng.uniform(0, 0.9), rng.uniform(0, 2 * M_PI));
        double s = rng.uniform(0, 0.9), f = rng.uniform();
        cplx b1 = std::polar(s * f, rng.uniform(0, 2 * M_PI)), b2 = std::polar(s * (1 - f), rng.uniform(0, 2 * M_PI));
        x = {b1 + std::conj(b2) * x3, b2 + std::conj(b1) * x3, x3};
      }
      if (x.size() != 3) fail(ErrorCode::InvalidParams, "a tetrablock point has three coordinates");
      return ETriple::make(Mat::Constant(1, 1, x[0]), Mat::Constant(1, 1, x[1]), Mat::Constant(1, 1, x[2]));
    }
  }
  fail(ErrorCode::InvalidParams, "unknown generator");
}

StructuredOperator e_structure(EGenerator kind, const ETriple& t) {
  if (kind == EGenerator::Backshift) return StructuredOperator::make_shift_adjoint(1);
  return StructuredOperator::make_finite(t.P);
}

namespace {

std::vector<Mat> e_w(const ModelLayout& L, const Mat& G1, const Mat& G2) {
  return {w_block(L, G1.adjoint(), G2, 0.5, 0.5), w_block(L, G2.adjoint(), G1, 0.5, 0.5)};
}

void fill_e_model(DilationInstance& inst, const Tolerances& tol) {
  inst.spaces = build_model_spaces(*inst.ev, inst.trunc, tol);
  inst.phi1 = douglas_embedding(*inst.ev, inst.spaces.layout, tol);
  inst.phi2 = nf_embedding(inst.phi1, inst.spaces.layout, inst.spaces);
  inst.pure = inst.ev->all_finite_pure();
  inst.astar_surrogate = inst.ev->has_shift();
}

FoTuple as_fo(const FoPair& f) {
  FoTuple t;
  t.n = 3;
  t.ops = {f.F1, f.F2};
  t.defect_dim = f.F1.rows();
  t.residual = f.residual;
  t.defect = f.defect;
  return t;
}

double square_pair(const ModelSpaces& s, const Mat& F1, const Mat& F2, const Mat& G1, const Mat& G2) {
  const int k = s.column_modes - 1;
  return std::max(square_residual(s, G1.adjoint(), G2, 0.5, 0.5, F1, F2.adjoint(), k),
                  square_residual(s, G2.adjoint(), G1, 0.5, 0.5, F2, F1.adjoint(), k));
}

}  // namespace

DilationInstance prepare_e_dilation(const ETriple& t, std::shared_ptr<const CharFnEvaluator> ev,
                                    const TruncationOrder& trunc, const Tolerances& tol, FoPair* Fout, FoPair* Gout) {
  if (!ev) fail(ErrorCode::MissingInput, "evaluator");
  DilationInstance inst;
  inst.ev = ev;
  inst.trunc = trunc;
  inst.tuple = t.as_tuple();
  DefectData dp = ev->defect_p(), dps = ev->defect_pstar();
  FoPair F = solve_fo_pair(t, tol, &dp);
  FoPair G = solve_fo_pair(t.adjoint(), tol, &dps);
  inst.A = as_fo(F);
  inst.B = as_fo(G);
  fill_e_model(inst, tol);
  inst.W = e_w(inst.spaces.layout, G.F1, G.F2);
  inst.commutation = t.commutation_residual;
  inst.digest = digest_matrices({t.A, t.B, t.P});
  if (Fout) *Fout = F;
  if (Gout) *Gout = G;
  return inst;
}

EConstruction construct_e_from_fo(std::shared_ptr<const CharFnEvaluator> ev, const Mat& F1, const Mat& F2,
                                  const Mat& G1, const Mat& G2, const TruncationOrder& trunc, const Tolerances& tol) {
  if (!ev) fail(ErrorCode::MissingInput, "evaluator");
  if (F1.rows() != ev->d() || F2.rows() != ev->d() || G1.rows() != ev->dstar() || G2.rows() != ev->dstar())
    fail(ErrorCode::DimensionMismatch, "pairs must act on the defect spaces of P and P*");
  if (op_norm(comm(F1, F2)) > tol.residual_tol) fail(ErrorCode::HypothesisViolated, "[F1, F2] != 0");
  if (op_norm(comm(F1, F1.adjoint()) - comm(F2, F2.adjoint())) > tol.residual_tol)
    fail(ErrorCode::HypothesisViolated, "[F1, F1*] != [F2, F2*]");
  EConstruction out;
  DilationInstance& inst = out.model;
  inst.ev = ev;
  inst.trunc = trunc;
  inst.constructed = true;
  fill_e_model(inst, tol);
  double sq = square_pair(inst.spaces, F1, F2, G1, G2);
  if (sq > 10 * tol.residual_tol)
    fail(ErrorCode::HypothesisViolated, "commuting square fails, residual " + std::to_string(sq));
  inst.W = e_w(inst.spaces.layout, G1, G2);
  Mat A = inst.phi2.adjoint() * inst.W[0] * inst.phi2;
  Mat B = inst.phi2.adjoint() * inst.W[1] * inst.phi2;
  out.triple = ETriple::make(A, B, ev->P(), prefix_window(*ev));
  inst.tuple = out.triple.as_tuple();
  inst.commutation = out.triple.commutation_residual;
  DefectData dp = ev->defect_p(), dps = ev->defect_pstar();
  out.F = solve_fo_pair(out.triple, tol, &dp);
  out.G = solve_fo_pair(out.triple.adjoint(), tol, &dps);
  inst.A = as_fo(out.F);
  inst.B = as_fo(out.G);
  out.roundtrip_F = std::max(op_norm(out.F.F1 - F1), op_norm(out.F.F2 - F2));
  out.roundtrip_G = std::max(op_norm(out.G.F1 - G1), op_norm(out.G.F2 - G2));
  inst.roundtrip_A = out.roundtrip_F;
  inst.roundtrip_B = out.roundtrip_G;
  inst.digest = digest_matrices({A, B, ev->P()});
  return out;
}

VerificationReport verify_tetra_identity(const std::string& id, const ETetraInput& in, const Tolerances& tol) {
  auto need = [&](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::MissingInput, id + " needs " + what);
  };
  nlohmann::json window = nlohmann::json::object();
  if (id == "TETRA-L52a" || id == "TETRA-L52b") {
    need(in.F && in.G && in.theta_adj, "both fundamental pairs and the evaluator of P*");
    const bool a = id == "TETRA-L52a";
    const Mat& F1 = a ? in.F->F1 : in.F->F2;
    const Mat& F2 = a ? in.F->F2 : in.F->F1;
    const Mat& G1 = a ? in.G->F1 : in.G->F2;
    const Mat& G2 = a ? in.G->F2 : in.G->F1;
    double worst = 0;
    for (cplx z : disk_grid()) {
      Mat th = in.theta_adj->theta(z);
      if (th.size() == 0) continue;
      worst = std::max(worst, op_norm((F1.adjoint() + z * F2) * th - th * (G1 + z * G2.adjoint())));
    }
    window["grid"] = "5 radii x 64 angles";
    return make_report(id, worst, 10 * tol.residual_tol, window);
  }
  if (id == "TETRA-ASTAR") {
    need(in.triple && in.astar, "the triple and the strong limit A_*");
    const auto& t = *in.triple;
    const Mat& As = *in.astar;
    const Mat Aa = t.A.adjoint(), Ba = t.B.adjoint(), Pa = t.P.adjoint();
    double r = 0;
    r = std::max(r, windowed_norm(As + As * Pa - 2.0 * As * Aa, in.trusted, in.trusted));
    r = std::max(r, windowed_norm(As * Aa - As * Ba, in.trusted, in.trusted));
    r = std::max(r, windowed_norm(t.P * As + As - 2.0 * t.P * As * Aa, in.trusted, in.trusted));
    window["coordinates"] = in.trusted.empty() ? t.dim() : static_cast<Index>(in.trusted.size());
    return make_report(id, r, tol.residual_tol, window);
  }
  if (id == "TETRA-HALFUNIT") {
    TruncationOrder tr{in.N, 3};
    tr.validate();
    Mat half = materialize(StructuredOperator::make_laurent(TrigPolySymbol::from_map(
                               1, {{0, 0.5 * identity(1)}, {1, 0.5 * identity(1)}})),
                           tr);
    Mat e = materialize(StructuredOperator::make_laurent(TrigPolySymbol::from_map(1, {{1, identity(1)}})), tr);
    std::vector<Index> inner;
    for (int m = -tr.window(); m <= tr.window(); ++m) inner.push_back(m + in.N);
    const Mat I = identity(e.rows());
    double uni = std::max(windowed_norm(e.adjoint() * e - I, inner, inner), windowed_norm(e * e.adjoint() - I, inner, inner));
    double contr = std::max(0.0, op_norm(half) - 1.0);
    double rel = windowed_norm(half - half.adjoint() * e, inner, inner);
    double com = std::max(windowed_norm(half * e - e * half, inner, inner), 0.0);
    window["modes"] = tr.window();
    window["unitary"] = uni;
    window["contraction_excess"] = contr;
    window["relation"] = rel;
    return make_report(id, std::max({uni, contr, rel, com}), tol.residual_tol, window);
  }
  need(in.model != nullptr, "a dilation instance");
  const DilationInstance& inst = *in.model;
  const auto& F = inst.A.ops;
  const auto& G = inst.B.ops;
  window = {{"truncation", inst.trunc.N}, {"column_modes", inst.spaces.column_modes}};
  if (id == "TETRA-NEC") {
    auto r = make_report(id, square_pair(inst.spaces, F[0], F[1], G[0], G[1]), 10 * tol.residual_tol, window);
    r.instance_digest = inst.digest;
    return r;
  }
  if (id == "TETRA-EXTRACT") {
    Tolerances loose = tol;
    loose.residual_tol = 10 * tol.residual_tol;
    VerificationReport r;
    try {
      auto ex = extract_multipliers(inst.spaces, inst.W, inst.ev->d(), loose);
      double rel = 0, excess = 0;
      if (!ex.Y0.empty()) {
        rel = std::max(op_norm(ex.Y0[0] - ex.Y1[1].adjoint()), op_norm(ex.Y1[0] - ex.Y0[1].adjoint()));
        for (int k = 0; k < 256; ++k)
          excess = std::max(excess, op_norm(ex.Y0[1] + std::polar(1.0, 2 * M_PI * k / 256.0) * ex.Y1[1]) - 1.0);
      }
      window["structural"] = ex.structural;
      window["degree_excess"] = ex.degree_excess;
      window["relation"] = rel;
      window["contraction_excess"] = excess;
      r = make_report(id, std::max({ex.structural, ex.degree_excess, rel, excess}), 10 * tol.residual_tol, window);
    } catch (const OpkitError& e) {
      r = make_report(id, INFINITY, 10 * tol.residual_tol, window);
      r.pass = false;
      r.reason = e.what();
    }
    r.instance_digest = inst.digest;
    return r;
  }
  if (id == "TETRA-DIL") {
    auto tr = inst.ev->trusted();
    const Mat& phi = inst.phi2;
    double a = windowed_norm(phi * inst.tuple.S(1).adjoint() - inst.W[0].adjoint() * phi, {}, tr);
    double b = windowed_norm(phi * inst.tuple.S(2).adjoint() - inst.W[1].adjoint() * phi, {}, tr);
    double p = windowed_norm(phi * inst.ev->P().adjoint() - model_isometry(inst.spaces.layout).adjoint() * phi, {}, tr);
    auto pw = verify_model_identity("MODEL-POWDIL", &inst, tol);
    window["intertwining"] = std::max({a, b, p});
    window["power_dilation"] = pw.residual;
    auto r = make_report(id, std::max({a, b, p, pw.residual}), 10 * tol.residual_tol, window);
    r.instance_digest = inst.digest;
    return r;
  }
  fail(ErrorCode::InvalidParams, "unknown identity " + id);
}

}  // namespace opkit
