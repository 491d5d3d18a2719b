#include <algorithm>
#include <cmath>

#include "opkit/model.hpp"
#include "opkit/polynomial.hpp"

namespace opkit {

namespace {

nlohmann::json base_window(const DilationInstance& inst) {
  return {{"truncation", inst.trunc.N},
          {"column_modes", inst.spaces.column_modes},
          {"trusted", inst.ev->trusted().size()},
          {"ambient", inst.ev->dim()}};
}

VerificationReport appx(const DilationInstance& inst, const Tolerances& tol, const ModelVerifyOptions& opt) {
  const auto& ev = *inst.ev;
  const int n = inst.tuple.n;
  double closed = 0, numeric = 0;
  for (int j = 1; j < n; ++j) {
    auto cf = fourier_coeffs_closed(inst, j, opt.m_range);
    auto ni = fourier_coeffs_numeric(ev, binomial(n - 1, j), binomial(n - 1, j - 1), opt.m_range, opt.grid);
    const Mat& Aj = inst.A.ops[static_cast<std::size_t>(j - 1)];
    const Mat& An = inst.A.ops[static_cast<std::size_t>(n - j - 1)];
    auto nj = fourier_coeffs_numeric(ev, Aj, An.adjoint(), opt.m_range, opt.grid);
    for (int m = -opt.m_range; m <= opt.m_range; ++m) {
      closed = std::max(closed, op_norm(cf.I.at(m) - cf.J.at(m)));
      numeric = std::max(numeric, op_norm(cf.I.at(m) - ni.at(m)));
      numeric = std::max(numeric, op_norm(cf.J.at(m) - nj.at(m)));
    }
  }
  auto w = base_window(inst);
  w["m_range"] = opt.m_range;
  w["grid"] = opt.grid;
  w["numeric_residual"] = numeric;
  w["numeric_tolerance"] = 100 * tol.residual_tol;
  auto r = make_report("MODEL-APPX", closed, tol.residual_tol, w);
  if (!(numeric <= 100 * tol.residual_tol)) {
    r.pass = false;
    r.reason = "closed forms disagree with the FFT coefficients";
  }
  return r;
}

VerificationReport rel1(const DilationInstance& inst, const Tolerances& tol) {
  const auto& ev = *inst.ev;
  const int n = inst.tuple.n;
  double worst = 0;
  for (int k = 0; k < 64; ++k) {
    double t = 2 * M_PI * k / 64.0;
    cplx e = std::polar(1.0, t);
    Mat D = ev.delta(t);
    for (int j = 1; j < n; ++j) {
      const Mat& Aj = inst.A.ops[static_cast<std::size_t>(j - 1)];
      const Mat& An = inst.A.ops[static_cast<std::size_t>(n - j - 1)];
      cplx w = binomial(n - 1, j) + binomial(n - 1, j - 1) * e;
      worst = std::max(worst, op_norm(w * D - D * (Aj + e * An.adjoint())));
    }
  }
  auto w = base_window(inst);
  w["angles"] = 64;
  return make_report("MODEL-REL1", worst, tol.residual_tol, w);
}

VerificationReport nec(const DilationInstance& inst, const Tolerances& tol) {
  const int n = inst.tuple.n;
  double worst = 0;
  for (int j = 1; j < n; ++j) {
    const Mat& Aj = inst.A.ops[static_cast<std::size_t>(j - 1)];
    const Mat& An = inst.A.ops[static_cast<std::size_t>(n - j - 1)];
    const Mat& Bj = inst.B.ops[static_cast<std::size_t>(j - 1)];
    const Mat& Bn = inst.B.ops[static_cast<std::size_t>(n - j - 1)];
    worst = std::max(worst, square_residual(inst.spaces, Bj.adjoint(), Bn, binomial(n - 1, j), binomial(n - 1, j - 1),
                                            Aj, An.adjoint(), inst.spaces.column_modes - 1));
  }
  auto w = base_window(inst);
  w["source_modes"] = inst.spaces.column_modes;
  return make_report("MODEL-NEC", worst, 10 * tol.residual_tol, w);
}

VerificationReport extract(const DilationInstance& inst, const Tolerances& tol, const ModelVerifyOptions& opt) {
  const int n = static_cast<int>(inst.W.size()) + 1;
  const double lim = 10 * tol.residual_tol;
  Tolerances loose = tol;
  loose.residual_tol = lim;
  auto w = base_window(inst);
  ExtractResult ex;
  try {
    ex = extract_multipliers(inst.spaces, inst.W, inst.ev->d(), loose);
  } catch (const OpkitError& e) {
    auto r = make_report("MODEL-EXTRACT", INFINITY, lim, w);
    r.pass = false;
    r.reason = e.what();
    return r;
  }
  // Gamma-isometry conditions for the multipliers with M_z: Y_j + zY'_j = (Y_{n-j} + zY'_{n-j})^* z
  double rel = 0;
  for (int j = 1; j < n && !ex.Y0.empty(); ++j) {
    auto a = static_cast<std::size_t>(j - 1), b = static_cast<std::size_t>(n - j - 1);
    rel = std::max(rel, op_norm(ex.Y0[a] - ex.Y1[b].adjoint()));
    rel = std::max(rel, op_norm(ex.Y1[a] - ex.Y0[b].adjoint()));
  }
  bool sigma_ok = ex.Y0.empty() || sigma_unrefuted(1, ex.Y0, tol, opt.samples, opt.seed);
  w["structural"] = ex.structural;
  w["degree_excess"] = ex.degree_excess;
  w["relation"] = rel;
  w["scaled_tuple_unrefuted"] = sigma_ok;
  auto r = make_report("MODEL-EXTRACT", std::max({ex.structural, ex.degree_excess, rel}), lim, w);
  if (!sigma_ok) {
    r.pass = false;
    r.reason = "scaled multiplier tuple refuted";
  }
  return r;
}

VerificationReport doug(const DilationInstance& inst, const Tolerances& tol) {
  const auto& ev = *inst.ev;
  const auto& L = inst.spaces.layout;
  auto tr = ev.trusted();
  const Mat Ps = ev.P().adjoint();
  double r1 = windowed_norm(inst.phi1 * Ps - douglas_isometry(L).adjoint() * inst.phi1, {}, tr);
  double r2 = windowed_norm(inst.phi2 * Ps - model_isometry(L).adjoint() * inst.phi2, {}, tr);
  auto iso = douglas_isometry_defect(ev, inst.phi1);
  auto w = base_window(inst);
  w["douglas_intertwining"] = r1;
  w["model_intertwining"] = r2;
  w["isometry_defect_raw"] = iso.raw;
  w["isometry_defect_corrected"] = iso.corrected;
  return make_report("MODEL-DOUG", std::max({r1, r2, iso.corrected}), tol.residual_tol, w);
}

VerificationReport blkdiag(const DilationInstance& inst, const Tolerances&) {
  const auto& L = inst.spaces.layout;
  Mat U = dilation_intertwiner(inst.phi1, inst.phi2, L);
  const int wm = L.N / 4;
  std::vector<Index> h2, l2;
  for (int m = 0; m <= wm; ++m)
    for (Index a = 0; a < L.dstar; ++a) h2.push_back(L.h2(m, a));
  for (int m = -wm; m <= wm; ++m)
    for (Index a = 0; a < L.e; ++a) l2.push_back(L.l2(m, a));
  double off = 0;
  if (!h2.empty() && !l2.empty()) off = std::max(windowed_norm(U, h2, l2), windowed_norm(U, l2, h2));
  double tensor = 0, unitary = 0;
  if (L.dstar > 0) {
    Mat U00 = U.block(L.h2(0, 0), L.h2(0, 0), L.dstar, L.dstar);
    unitary = op_norm(U00.adjoint() * U00 - identity(L.dstar));
    for (int m = 0; m <= wm; ++m)
      for (int k = 0; k <= wm; ++k) {
        Mat blk = U.block(L.h2(m, 0), L.h2(k, 0), L.dstar, L.dstar);
        tensor = std::max(tensor, op_norm(m == k ? Mat(blk - U00) : blk));
      }
  }
  double l2unit = 0;
  if (!l2.empty()) {
    Mat sub(l2.size(), l2.size());
    for (std::size_t i = 0; i < l2.size(); ++i)
      for (std::size_t j = 0; j < l2.size(); ++j) sub(i, j) = U(l2[i], l2[j]);
    // interior columns of the L^2 block are isometric
    Mat g = sub.adjoint() * sub;
    const Index inner = static_cast<Index>(l2.size()) - 2 * L.e;
    if (inner > 0) l2unit = op_norm(g.block(L.e, L.e, inner, inner) - identity(inner));
  }
  auto w = base_window(inst);
  w["modes"] = wm;
  w["off_diagonal"] = off;
  w["h2_tensor"] = tensor;
  w["h2_unitary"] = unitary;
  w["l2_isometry"] = l2unit;
  return make_report("MODEL-BLKDIAG", std::max({off, tensor, unitary, l2unit}), 1e-6, w);
}

VerificationReport powdil(const DilationInstance& inst, const Tolerances& tol) {
  const auto& ev = *inst.ev;
  const auto& L = inst.spaces.layout;
  const auto& t = inst.tuple;
  const int n = t.n;
  auto tr = ev.trusted();
  Mat V = model_isometry(L);
  std::vector<Mat> dil(inst.W.begin(), inst.W.end());
  dil.push_back(V);
  double worst = 0;
  for (const auto& alpha : monomial_exponents(n, 3)) {
    Mat big = identity(L.dim()), small = identity(t.dim());
    for (int v = 0; v < n; ++v)
      for (int k = 0; k < alpha[static_cast<std::size_t>(v)]; ++k) {
        big = big * dil[static_cast<std::size_t>(v)];
        small = small * t.members[static_cast<std::size_t>(v)];
      }
    worst = std::max(worst, windowed_norm(inst.phi2.adjoint() * big * inst.phi2 - small, tr, tr));
  }
  auto w = base_window(inst);
  w["max_degree"] = 3;
  return make_report("MODEL-POWDIL", worst, 10 * tol.residual_tol, w);
}

}  // namespace

VerificationReport verify_model_identity(const std::string& id, const DilationInstance* inst, const Tolerances& tol,
                                         const ModelVerifyOptions& opt) {
  if (!inst || !inst->ev) fail(ErrorCode::MissingInput, id + " needs a dilation instance");
  VerificationReport r;
  if (id == "MODEL-APPX")
    r = appx(*inst, tol, opt);
  else if (id == "MODEL-REL1")
    r = rel1(*inst, tol);
  else if (id == "MODEL-NEC")
    r = nec(*inst, tol);
  else if (id == "MODEL-EXTRACT")
    r = extract(*inst, tol, opt);
  else if (id == "MODEL-DOUG")
    r = doug(*inst, tol);
  else if (id == "MODEL-BLKDIAG")
    r = blkdiag(*inst, tol);
  else if (id == "MODEL-POWDIL")
    r = powdil(*inst, tol);
  else
    fail(ErrorCode::InvalidParams, "unknown identity " + id);
  r.instance_digest = inst->digest;
  return r;
}

}  // namespace opkit
