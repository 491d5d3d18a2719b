// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "opkit/gamma_domain.hpp"
#include "opkit/gamma_fo.hpp"
#include "opkit/model.hpp"
#include "opkit/tetrablock.hpp"

using namespace opkit;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::vector<Index> lead(Index k) {
  std::vector<Index> v;
  for (Index i = 0; i < k; ++i) v.push_back(i);
  return v;
}

// ---------------------------------------------------------------- shared instance sets

struct GammaCase {
  OperatorTuple t;
  std::string label;
};

std::vector<GammaCase> gamma_cases() {
  std::vector<GammaCase> out;
  const GammaGenerator kinds[] = {GammaGenerator::PureCompression, GammaGenerator::SymmetrizedUnitaries,
                                  GammaGenerator::ScalarPoint, GammaGenerator::BinomialIsometry};
  const char* names[] = {"pure-compression", "symmetrized-unitaries", "scalar", "binomial-isometry"};
  for (int k = 0; k < 100; ++k) {
    GammaGeneratorParams p;
    p.n = 2 + k % 3;
    p.dim = 2 + (k / 3) % 7;
    p.N = 16 + 4 * (k % 5);
    int kind = (k / 2) % 4;
    auto s = static_cast<std::uint64_t>(1000 + k);
    out.push_back({make_gamma_instance(kinds[kind], p, s), std::string(names[kind]) + " seed " + std::to_string(s)});
  }
  return out;
}

struct Built {
  std::shared_ptr<const CharFnEvaluator> ev;
  DilationInstance inst;
  std::string label;
};

std::vector<Built> constructed;  // filled by criterion 5, reused by 4 and 6

// ---------------------------------------------------------------- criteria

Outcome criterion1(const std::vector<GammaCase>& cases) {
  Outcome o;
  Tolerances tol;
  auto t0 = std::chrono::steady_clock::now();
  double rec = 0, gap = 0;
  for (const auto& c : cases) {
    try {
      auto fo = solve_fo_tuple(c.t, tol);
      double r = fo_reconstruction_residual(c.t, fo.ops, fo.defect);
      auto eq = solve_fo_equations(c.t, tol);
      double g = 0;
      for (std::size_t i = 0; i < fo.ops.size(); ++i) g = std::max(g, op_norm(fo.ops[i] - eq.ops[i]));
      rec = std::max(rec, r);
      gap = std::max(gap, g);
      o.require(r <= 1e-8, c.label + " reconstruction " + sci(r));
      o.require(g <= 1e-7, c.label + " solver gap " + sci(g));
    } catch (const OpkitError& e) {
      o.require(false, c.label + ": " + e.what());
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs <= 60, "runtime " + std::to_string(secs) + " s");
  o.detail << cases.size() << " instances, max reconstruction " << sci(rec) << ", max solver gap " << sci(gap) << ", "
           << sci(secs) << " s";
  return o;
}

Outcome criterion2(const std::vector<GammaCase>& cases) {
  Outcome o;
  Tolerances tol;
  double w44 = 0, w45 = 0, w43 = 0;
  int used = 0;
  for (const auto& c : cases) {
    FoTuple A, B;
    try {
      A = solve_fo_tuple(c.t, tol);
      B = solve_fo_tuple(c.t.adjoint(), tol);
    } catch (const OpkitError&) {
      continue;  // adjoint tuple not solvable
    }
    ++used;
    CharFnEvaluator ev(c.t.P(), tol);
    GammaIdentityInput in;
    in.tuple = &c.t;
    in.A = &A;
    in.B = &B;
    in.theta = &ev;
    if (c.t.window > 0) in.trusted = lead(c.t.trusted());
    auto r44 = verify_gamma_identity("GAMMA-L44", in, tol);
    auto r45 = verify_gamma_identity("GAMMA-L45", in, tol);
    auto r43 = verify_gamma_identity("GAMMA-L43", in, tol);
    w44 = std::max(w44, r44.residual);
    w45 = std::max(w45, r45.residual);
    w43 = std::max(w43, r43.residual);
    o.require(r44.residual <= 1e-8, c.label + " L44 " + sci(r44.residual));
    o.require(r45.residual <= 1e-8, c.label + " L45 " + sci(r45.residual));
    o.require(r43.residual <= 1e-7, c.label + " L43 " + sci(r43.residual));
  }
  o.detail << used << " instances with solvable adjoint tuple, max residuals " << sci(w44) << " / " << sci(w45)
           << " / " << sci(w43);
  return o;
}

Outcome criterion3() {
  Outcome o;
  Tolerances tol;
  struct Case {
    int n, block;
  };
  double closed = 0, numeric = 0;
  for (Case c : {Case{2, 1}, Case{3, 1}, Case{3, 2}}) {
    ModelInstanceParams p;
    p.n = c.n;
    p.block = c.block;
    p.N = 64;
    auto mi = make_model_instance(ModelFamily::Backshift, p, 11);
    auto ev = make_evaluator(mi, tol);
    auto inst = prepare_dilation(mi.tuple, ev, mi.trunc, tol);
    auto r = verify_model_identity("MODEL-APPX", &inst, tol, {8, 4096});
    double nr = r.window.value("numeric_residual", 1.0);
    closed = std::max(closed, r.residual);
    numeric = std::max(numeric, nr);
    std::string tag = "backshift n " + std::to_string(c.n) + " block " + std::to_string(c.block);
    o.require(r.residual <= 1e-8, tag + " closed " + sci(r.residual));
    o.require(nr <= 1e-6, tag + " numeric " + sci(nr));
  }
  double control = 0;
  for (int n = 2; n <= 4; ++n) {
    ModelInstanceParams p;
    p.n = n;
    p.dim = 4;
    auto mi = make_model_instance(ModelFamily::PureSigmaSafe, p, static_cast<std::uint64_t>(20 + n));
    auto ev = make_evaluator(mi, tol);
    auto inst = prepare_dilation(mi.tuple, ev, mi.trunc, tol);
    for (int j = 1; j < n; ++j) {
      auto cf = fourier_coeffs_closed(inst, j, 8);
      const Mat& Aj = inst.A.ops[static_cast<std::size_t>(j - 1)];
      const Mat& An = inst.A.ops[static_cast<std::size_t>(n - j - 1)];
      auto num = fourier_coeffs_numeric(*ev, Aj, Mat(An.adjoint()), 8, 4096);
      for (int m = -8; m <= 8; ++m)
        control = std::max({control, op_norm(cf.I.at(m)), op_norm(cf.J.at(m)), op_norm(num.at(m))});
    }
  }
  o.require(control <= 1e-8, "finite pure control " + sci(control));
  o.detail << "3 backshift instances at N 64: closed " << sci(closed) << ", numeric " << sci(numeric)
           << "; finite pure control " << sci(control);
  return o;
}

Outcome criterion5() {
  Outcome o;
  Tolerances tol;
  double worst = 0;
  const ModelFamily kinds[] = {ModelFamily::PureSigmaSafe, ModelFamily::ZeroP, ModelFamily::Backshift};
  for (int k = 0; k < 50; ++k) {
    ModelInstanceParams p;
    p.n = 2 + k % 2;
    p.dim = (k / 2) % 2 == 0 ? 4 : 2;
    p.N = 32;
    auto kind = kinds[(k / 2) % 3];
    auto s = static_cast<std::uint64_t>(500 + k);
    std::string label = "family " + std::to_string((k / 2) % 3) + " n " + std::to_string(p.n) + " seed " + std::to_string(s);
    try {
      auto mi = make_model_instance(kind, p, s);
      auto ev = make_evaluator(mi, tol);
      auto prep = prepare_dilation(mi.tuple, ev, mi.trunc, tol);
      auto built = construct_from_fo_data(ev, prep.A.ops, prep.B.ops, mi.trunc, tol);
      double r = std::max(built.roundtrip_A, built.roundtrip_B);
      worst = std::max(worst, r);
      o.require(r <= 1e-6, label + " round trip " + sci(r));
      constructed.push_back({ev, std::move(built), label});
    } catch (const OpkitError& e) {
      o.require(false, label + ": " + e.what());
    }
  }
  o.detail << "50 constructions, max round trip " << sci(worst);
  return o;
}

Outcome criterion4() {
  Outcome o;
  Tolerances tol;
  double nec = 0, ex = 0;
  for (const auto& b : constructed) {
    auto rn = verify_model_identity("MODEL-NEC", &b.inst, tol);
    auto re = verify_model_identity("MODEL-EXTRACT", &b.inst, tol);
    nec = std::max(nec, rn.residual);
    ex = std::max(ex, re.residual);
    o.require(rn.residual <= 1e-7, b.label + " square " + sci(rn.residual));
    o.require(re.pass && re.residual <= 1e-7, b.label + " extraction " + sci(re.residual) + " " + re.reason);
  }
  o.require(!constructed.empty(), "no constructed instances");
  o.detail << constructed.size() << " constructed instances, max square " << sci(nec) << ", max extraction "
           << sci(ex);
  return o;
}

Outcome criterion6() {
  Outcome o;
  Tolerances tol;
  double doug = 0, blk = 0, pw = 0;
  for (const auto& b : constructed) {
    auto rd = verify_model_identity("MODEL-DOUG", &b.inst, tol);
    auto rb = verify_model_identity("MODEL-BLKDIAG", &b.inst, tol);
    auto rp = verify_model_identity("MODEL-POWDIL", &b.inst, tol);
    doug = std::max(doug, rd.residual);
    blk = std::max(blk, rb.residual);
    pw = std::max(pw, rp.residual);
    o.require(rd.residual <= 1e-8, b.label + " embedding " + sci(rd.residual));
    o.require(rb.residual <= 1e-6, b.label + " block diagonal " + sci(rb.residual));
    o.require(rp.residual <= 1e-7, b.label + " power dilation " + sci(rp.residual));
  }
  o.require(!constructed.empty(), "no constructed instances");
  o.detail << "embedding " << sci(doug) << ", block diagonal " << sci(blk) << ", power dilation " << sci(pw);
  return o;
}

Outcome criterion7() {
  Outcome o;
  Tolerances tol;
  const EGenerator kinds[] = {EGenerator::EUnitary,   EGenerator::HalfIsometry, EGenerator::ProductPure,
                              EGenerator::HalfGamma,  EGenerator::Backshift,    EGenerator::ScalarPoint};
  double rec = 0, gap = 0, l52 = 0;
  for (int k = 0; k < 100; ++k) {
    EGeneratorParams p;
    p.dim = 2 + 2 * (k % 3);
    p.N = 24;
    auto kind = kinds[k % 6];
    auto s = static_cast<std::uint64_t>(2000 + k);
    std::string label = "generator " + std::to_string(k % 6) + " seed " + std::to_string(s);
    try {
      auto t = make_e_instance(kind, p, s);
      auto F = solve_fo_pair(t, tol);
      rec = std::max(rec, F.residual);
      gap = std::max(gap, F.solver_gap);
      o.require(F.residual <= 1e-8, label + " reconstruction " + sci(F.residual));
      o.require(F.rank_deficient || F.solver_gap <= 1e-7, label + " solver gap " + sci(F.solver_gap));
      if (kind == EGenerator::Backshift) continue;
      auto G = solve_fo_pair(t.adjoint(), tol);
      CharFnEvaluator ev(Mat(t.P.adjoint()), tol);
      ETetraInput in;
      in.F = &F;
      in.G = &G;
      in.theta_adj = &ev;
      for (const char* id : {"TETRA-L52a", "TETRA-L52b"}) {
        auto r = verify_tetra_identity(id, in, tol);
        l52 = std::max(l52, r.residual);
        o.require(r.pass, label + " " + id + " " + sci(r.residual));
      }
    } catch (const OpkitError& e) {
      o.require(false, label + ": " + e.what());
    }
  }
  double trip = 0;
  int built = 0;
  for (auto kind : {EGenerator::ProductPure, EGenerator::HalfGamma, EGenerator::Backshift})
    for (std::uint64_t s = 1; s <= 10; ++s) {
      std::string label = "construction " + std::to_string(static_cast<int>(kind)) + " seed " + std::to_string(s);
      try {
        EGeneratorParams p;
        p.dim = 4;
        p.N = 24;
        TruncationOrder tr{24, 3};
        auto t = make_e_instance(kind, p, 3000 + s);
        auto ev = std::make_shared<const CharFnEvaluator>(e_structure(kind, t), tr, tol);
        FoPair F, G;
        prepare_e_dilation(t, ev, tr, tol, &F, &G);
        auto c = construct_e_from_fo(ev, F.F1, F.F2, G.F1, G.F2, tr, tol);
        double r = std::max(c.roundtrip_F, c.roundtrip_G);
        trip = std::max(trip, r);
        o.require(r <= 1e-6, label + " round trip " + sci(r));
        ETetraInput in;
        in.model = &c.model;
        for (const char* id : {"TETRA-NEC", "TETRA-EXTRACT", "TETRA-DIL"}) {
          auto rr = verify_tetra_identity(id, in, tol);
          o.require(rr.pass, label + " " + id + " " + sci(rr.residual));
        }
        ++built;
      } catch (const OpkitError& e) {
        o.require(false, label + ": " + e.what());
      }
    }
  ETetraInput h;
  h.N = 32;
  auto hu = verify_tetra_identity("TETRA-HALFUNIT", h, tol);
  o.require(hu.pass, "half unitary " + sci(hu.residual));
  int classified = 0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    EGeneratorParams p;
    p.dim = 3;
    p.N = 16;
    bool ok = classify_e_triple(make_e_instance(EGenerator::EUnitary, p, s), tol, 20, s).verdict == EVerdict::EUnitary;
    ok = ok && classify_e_triple(make_e_instance(EGenerator::HalfIsometry, p, s), tol, 20, s).verdict ==
                   EVerdict::EIsometry;
    ok = ok && classify_e_triple(make_e_instance(EGenerator::ProductPure, p, s), tol, 20, s).verdict !=
                   EVerdict::Refuted;
    Rng rng(s);
    double scale = rng.uniform(1.5, 3.0);
    auto bad = ETriple::make(scale * rng.unitary(2), Mat::Zero(2, 2), Mat::Zero(2, 2));
    ok = ok && classify_e_triple(bad, tol, 50, s).verdict == EVerdict::Refuted;
    o.require(ok, "classification seed " + std::to_string(s));
    classified += ok;
  }
  o.detail << "pair reconstruction " << sci(rec) << ", solver gap " << sci(gap) << ", adjoint intertwining "
           << sci(l52) << ", " << built << " constructions with round trip " << sci(trip) << ", half unitary "
           << (hu.pass ? "pass" : "fail") << ", classification " << classified << "/100";
  return o;
}

Outcome criterion8() {
  Outcome o;
  Tolerances tol;
  Rng rng(8);
  int mismatches = 0, root_misses = 0;
  for (int k = 0; k < 10000; ++k) {
    int n = rng.integer(2, 5);
    int regime = rng.integer(0, 3);  // interior, in set, distinguished boundary, outside
    std::vector<cplx> z(static_cast<std::size_t>(n));
    for (auto& v : z) v = std::polar(rng.uniform(0, 0.999), rng.uniform(0, 6.283185307179586));
    Membership expect = Membership::Interior;
    if (regime == 1) {
      z[0] = rng.unit_phase();
      expect = Membership::InSet;
    } else if (regime == 2) {
      for (auto& v : z) v = rng.unit_phase();
      expect = Membership::OnDistinguishedBoundary;
    } else if (regime == 3) {
      z[static_cast<std::size_t>(rng.integer(0, n - 1))] = std::polar(rng.uniform(1.001, 2.0), rng.uniform(0, 6.28));
      expect = Membership::Outside;
    }
    auto pt = symmetrize(z);
    auto v = gamma_membership(pt, tol);
    if (v.status != expect) ++mismatches;
    // re-symmetrized witness roots reproduce the point
    auto back = symmetrize(v.witness).coords;
    for (std::size_t i = 0; i < back.size(); ++i)
      if (std::abs(back[i] - pt.coords[i]) > 1e-9 * (1 + std::abs(pt.coords[i]))) {
        ++root_misses;
        break;
      }
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " classification mismatches");
  o.require(root_misses == 0, std::to_string(root_misses) + " root round trip misses");
  int disagree = 0, tested = 0;
  for (int k = 0; k < 200; ++k) {
    Mat A = rng.gaussian(2, 2);
    double mu = mu_diag_2x2(A, tol);
    A *= rng.uniform(0.5, 1.5) / mu;
    mu = mu_diag_2x2(A, tol);
    if (std::abs(mu - 1) < 1e-3) continue;
    ++tested;
    auto m = tetrablock_membership({A(0, 0), A(1, 1), A.determinant()}, tol).status;
    bool inside = m == Membership::Interior;
    if (inside != (mu < 1)) ++disagree;
  }
  o.require(disagree == 0, std::to_string(disagree) + " mu disagreements");
  o.detail << "10000 points, " << mismatches << " mismatches, " << root_misses << " root misses; " << tested
           << " matrices, " << disagree << " mu disagreements";
  return o;
}

Outcome criterion9() {
  Outcome o;
  int false_pos = 0, checked = 0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    GammaGeneratorParams p;
    p.n = 2 + static_cast<int>(s % 3);
    p.dim = 3;
    p.N = 12;
    for (auto kind : {GammaGenerator::SymmetrizedUnitaries, GammaGenerator::BinomialIsometry}) {
      auto t = make_gamma_instance(kind, p, s);
      ++checked;
      if (refute_gamma_contraction(t.members, 200, s)) ++false_pos;
    }
  }
  o.require(false_pos == 0, std::to_string(false_pos) + " false refutations");
  int planted = 0, caught = 0;
  Rng rng(9);
  for (int n = 2; n <= 4; ++n)
    for (int k = 0; k < 5; ++k) {
      std::vector<Mat> t(static_cast<std::size_t>(n), Mat::Zero(2, 2));
      t[0] = (n + rng.uniform(0.5, 1.0)) * identity(2);
      ++planted;
      if (refute_gamma_contraction(t, 200, static_cast<std::uint64_t>(k + 1))) ++caught;
    }
  o.require(caught == planted, std::to_string(planted - caught) + " planted violators missed");
  o.detail << checked << " members of the domain boundary classes, " << false_pos << " false refutations; " << caught
           << "/" << planted << " planted violators refuted";
  return o;
}

}  // namespace

int main() {
  bool all = true;
  auto report = [&](int k, const std::function<Outcome()>& f) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && o.pass;
    std::printf("criterion %d %s (%.1f s): %s\n", k, o.pass ? "PASS" : "FAIL", secs, o.detail.str().c_str());
    std::fflush(stdout);
  };
  auto cases = gamma_cases();
  report(1, [&] { return criterion1(cases); });
  report(2, [&] { return criterion2(cases); });
  report(3, criterion3);
  report(5, criterion5);
  report(4, criterion4);
  report(6, criterion6);
  report(7, criterion7);
  report(8, criterion8);
  report(9, criterion9);
  return all ? 0 : 1;
}
