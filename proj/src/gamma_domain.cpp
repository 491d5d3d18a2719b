#include "opkit/gamma_domain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>

#include "opkit/parallel.hpp"

namespace opkit {

const char* membership_name(Membership m) {
  switch (m) {
    case Membership::Interior: return "Interior";
    case Membership::InSet: return "InSet";
    case Membership::OnDistinguishedBoundary: return "OnDistinguishedBoundary";
    case Membership::Outside: return "Outside";
  }
  return "Unknown";
}

GammaPoint symmetrize(const std::vector<cplx>& z) {
  const int n = static_cast<int>(z.size());
  std::vector<cplx> e(static_cast<std::size_t>(n) + 1, 0.0);
  e[0] = 1.0;
  for (int k = 0; k < n; ++k)
    for (int j = k + 1; j >= 1; --j) e[static_cast<std::size_t>(j)] += e[static_cast<std::size_t>(j) - 1] * z[static_cast<std::size_t>(k)];
  GammaPoint out;
  out.n = n;
  out.coords.assign(e.begin() + 1, e.end());
  return out;
}

namespace {

std::vector<cplx> polynomial_roots(const GammaPoint& pt) {
  const int n = pt.n;
  if (n <= 0 || static_cast<int>(pt.coords.size()) != n) fail(ErrorCode::RootFindingFailure, "malformed point");
  for (const auto& c : pt.coords)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) fail(ErrorCode::RootFindingFailure, "non-finite coordinate");
  // z^n + a_{n-1} z^{n-1} + ... + a_0 with a_{n-k} = (-1)^k s_k
  Mat C = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
  for (int k = 1; k <= n; ++k) {
    cplx a = (k % 2 ? -1.0 : 1.0) * pt.coords[static_cast<std::size_t>(k) - 1];
    C(n - k, n - 1) = -a;
  }
  Eigen::ComplexEigenSolver<Mat> es(C, false);
  if (es.info() != Eigen::Success) fail(ErrorCode::RootFindingFailure, "companion eigensolver failed");
  std::vector<cplx> r(es.eigenvalues().data(), es.eigenvalues().data() + n);
  // a root of multiplicity m is only resolved to ~eps^(1/m); replace clusters by their mean
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int i) { return parent[static_cast<std::size_t>(i)] == i ? i : parent[static_cast<std::size_t>(i)] = find(parent[static_cast<std::size_t>(i)]); };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(r[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(j)]) <= 1e-4 * std::max(1.0, std::abs(r[static_cast<std::size_t>(i)])))
        parent[static_cast<std::size_t>(find(i))] = find(j);
  std::map<int, std::pair<cplx, int>> sums;
  for (int i = 0; i < n; ++i) {
    auto& s = sums[find(i)];
    s.first += r[static_cast<std::size_t>(i)];
    ++s.second;
  }
  for (int i = 0; i < n; ++i) {
    const auto& s = sums[find(i)];
    if (s.second > 1) r[static_cast<std::size_t>(i)] = s.first / static_cast<double>(s.second);
  }
  std::sort(r.begin(), r.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return r;
}

}  // namespace

MembershipVerdict gamma_membership(const GammaPoint& pt, const Tolerances& tol) {
  MembershipVerdict v;
  v.witness = polynomial_roots(pt);
  double hi = 0, lo = 1e300;
  for (const auto& r : v.witness) {
    hi = std::max(hi, std::abs(r));
    lo = std::min(lo, std::abs(r));
  }
  const double t = tol.algebraic_tol;
  v.margin = 1.0 - hi;
  if (lo >= 1 - t && hi <= 1 + t)
    v.status = Membership::OnDistinguishedBoundary;
  else if (hi < 1 - t)
    v.status = Membership::Interior;
  else if (hi <= 1 + t)
    v.status = Membership::InSet;
  else
    v.status = Membership::Outside;
  return v;
}

MembershipVerdict tetrablock_membership(const std::vector<cplx>& x, const Tolerances& tol) {
  if (x.size() != 3) fail(ErrorCode::DimensionMismatch, "tetrablock point needs 3 coordinates");
  const double t = tol.algebraic_tol;
  const double a3 = std::abs(x[2]);
  MembershipVerdict v;
  if (a3 < 1 - t) {
    double den = 1 - a3 * a3;
    cplx b1 = (x[0] - std::conj(x[1]) * x[2]) / den;
    cplx b2 = (x[1] - std::conj(x[0]) * x[2]) / den;
    v.witness = {b1, b2};
    double s = std::abs(b1) + std::abs(b2);
    v.margin = 1 - s;
    v.status = s < 1 - t ? Membership::Interior : (s <= 1 + t ? Membership::InSet : Membership::Outside);
    return v;
  }
  if (a3 > 1 + t) {
    v.margin = 1 - a3;
    v.status = Membership::Outside;
    return v;
  }
  // |x_3| = 1: as r -> 1 the interior test at r x_3 forces x_1 = conj(x_2) x_3, |x_2| <= 1
  double gap = std::max(std::abs(x[0] - std::conj(x[1]) * x[2]), std::abs(x[1]) - 1.0);
  v.margin = -gap;
  v.status = gap <= t ? Membership::OnDistinguishedBoundary : Membership::Outside;
  return v;
}

namespace {

template <class F>
double golden_min(F f, double a, double b, int iters) {
  const double g = (std::sqrt(5.0) - 1) / 2;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < iters; ++k) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return std::min(fc, fd);
}

}  // namespace

double mu_diag_2x2(const Mat& A, const Tolerances& tol) {
  if (A.rows() != 2 || A.cols() != 2) fail(ErrorCode::DimensionMismatch, "mu_diag_2x2 needs a 2x2 matrix");
  require_finite(A, "mu_diag_2x2 input");
  const cplx a = A(0, 0), d = A(1, 1), det = A.determinant();
  // det(I - A diag(x1, x2)) = 1 - a x1 - d x2 + det x1 x2
  auto feasible = [&](double rho) {
    const double small = 1e-14;
    if (std::abs(d) < small && std::abs(det) < small) return std::abs(a) > small && 1.0 / std::abs(a) <= rho;
    if (std::abs(a) > small) {
      cplx zero = 1.0 / a;
      if (std::abs(zero) <= rho) return true;
    }
    if (std::abs(det) > small) {
      cplx pole = d / det;
      if (std::abs(1.0 - a * pole) < small && std::abs(pole) <= rho) return true;  // x2 free there
    }
    auto g = [&](double th) {
      cplx x1 = std::polar(rho, th);
      cplx den = d - det * x1;
      double num = std::abs(1.0 - a * x1);
      return std::abs(den) < 1e-300 ? 1e300 : num / std::abs(den);
    };
    const int G = 512;
    double best = 1e300;
    int arg = 0;
    for (int k = 0; k < G; ++k) {
      double v = g(2 * M_PI * k / G);
      if (v < best) {
        best = v;
        arg = k;
      }
    }
    double th = 2 * M_PI * arg / G, h = 2 * M_PI / G;
    best = std::min(best, golden_min(g, th - h, th + h, 60));
    return best <= rho;
  };
  double lo = 1e-9, hi = 1e9;
  if (!feasible(hi)) return 0.0;
  if (feasible(lo)) return 1.0 / lo;
  for (int it = 0; it < 200 && hi / lo > 1 + 1e-13; ++it) {
    double mid = std::sqrt(lo * hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  double mu = 1.0 / hi;
  bool interior = tetrablock_membership({a, d, det}, tol).status == Membership::Interior;
  if ((mu < 1) != interior && std::abs(mu - 1) > tol.grid_tol)
    fail(ErrorCode::GridTooCoarse, "mu " + std::to_string(mu) + " disagrees with tetrablock membership");
  return mu;
}

BoundarySampler::BoundarySampler(int nvars, Map map, std::vector<double> lo, std::vector<double> hi,
                                 std::vector<bool> periodic, std::vector<std::vector<double>> params, int max_degree)
    : nvars_(nvars), map_(std::move(map)), lo_(std::move(lo)), hi_(std::move(hi)), periodic_(std::move(periodic)),
      params_(std::move(params)) {
  exps_ = monomial_exponents(nvars_, max_degree);
  mono_.resize(params_.size());
  parallel_for(params_.size(), [&](std::size_t k) {
    auto x = map_(params_[k]);
    Vec m(static_cast<Index>(exps_.size()));
    for (std::size_t e = 0; e < exps_.size(); ++e) {
      cplx v = 1.0;
      for (int i = 0; i < nvars_; ++i) v *= std::pow(x[static_cast<std::size_t>(i)], exps_[e][static_cast<std::size_t>(i)]);
      m(static_cast<Index>(e)) = v;
    }
    mono_[k] = std::move(m);
  });
}

double BoundarySampler::grid_max(const Polynomial& f, std::vector<double>* argmax) const {
  Vec c = Vec::Zero(static_cast<Index>(exps_.size()));
  for (const auto& t : f.terms) {
    auto it = std::find(exps_.begin(), exps_.end(), t.alpha);
    if (it == exps_.end()) fail(ErrorCode::InvalidParams, "polynomial degree exceeds the sampler");
    c(static_cast<Index>(it - exps_.begin())) += t.coeff;
  }
  double best = -1;
  std::size_t arg = 0;
  for (std::size_t k = 0; k < mono_.size(); ++k) {
    double v = std::abs(mono_[k].dot(c.conjugate()));
    if (v > best) {
      best = v;
      arg = k;
    }
  }
  if (argmax && !params_.empty()) *argmax = params_[arg];
  return std::max(best, 0.0);
}

double BoundarySampler::refine(const Polynomial& f, std::vector<double> x) const {
  auto value = [&](const std::vector<double>& p) { return std::abs(f.eval(map_(p))); };
  double best = value(x);
  const std::size_t d = x.size();
  std::vector<double> h(d);
  for (std::size_t i = 0; i < d; ++i) h[i] = (hi_[i] - lo_[i]) / 8;
  for (int sweep = 0; sweep < 40; ++sweep) {
    double before = best;
    for (std::size_t i = 0; i < d; ++i) {
      double a = x[i] - h[i], b = x[i] + h[i];
      if (!periodic_[i]) {
        a = std::max(a, lo_[i]);
        b = std::min(b, hi_[i]);
      }
      auto neg = [&](double s) {
        auto y = x;
        y[i] = s;
        return -value(y);
      };
      const double g = (std::sqrt(5.0) - 1) / 2;
      double c = b - g * (b - a), e = a + g * (b - a), fc = neg(c), fe = neg(e);
      for (int k = 0; k < 50; ++k) {
        if (fc < fe) {
          b = e; e = c; fe = fc; c = b - g * (b - a); fc = neg(c);
        } else {
          a = c; c = e; fc = fe; e = a + g * (b - a); fe = neg(e);
        }
      }
      double s = fc < fe ? c : e, v = -std::min(fc, fe);
      if (v > best) {
        best = v;
        x[i] = s;
      }
      h[i] = std::max(h[i] * 0.5, 1e-6);
    }
    if (best - before <= 1e-14 * std::max(1.0, best) && sweep > 3) break;
  }
  return best;
}

double BoundarySampler::sup(const Polynomial& f, int starts) const {
  Vec c = Vec::Zero(static_cast<Index>(exps_.size()));
  for (const auto& t : f.terms) {
    auto it = std::find(exps_.begin(), exps_.end(), t.alpha);
    if (it == exps_.end()) fail(ErrorCode::InvalidParams, "polynomial degree exceeds the sampler");
    c(static_cast<Index>(it - exps_.begin())) += t.coeff;
  }
  std::vector<std::pair<double, std::size_t>> vals(mono_.size());
  for (std::size_t k = 0; k < mono_.size(); ++k) vals[k] = {std::abs(mono_[k].dot(c.conjugate())), k};
  const std::size_t s = std::min<std::size_t>(static_cast<std::size_t>(std::max(starts, 0)), vals.size());
  std::partial_sort(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(s), vals.end(),
                    [](const auto& x, const auto& y) { return x.first > y.first || (x.first == y.first && x.second < y.second); });
  double best = vals.empty() ? 0.0 : std::max_element(vals.begin(), vals.end())->first;
  for (std::size_t k = 0; k < s; ++k) best = std::max(best, refine(f, params_[vals[k].second]));
  return best;
}

BoundarySampler gamma_sampler(int n, int grid, int max_degree, bool* sampled) {
  std::vector<std::vector<double>> params;
  double count = 1;  // multisets of size n from `grid` symbols
  for (int k = 0; k < n; ++k) count = count * (grid + k) / (k + 1);
  const bool random = count > 1e7;
  if (sampled) *sampled = random;
  if (random) {
    Rng rng(0x5eedULL + static_cast<std::uint64_t>(n));
    for (int k = 0; k < 1000000; ++k) {
      std::vector<double> th(static_cast<std::size_t>(n));
      for (auto& t : th) t = rng.uniform(0, 2 * M_PI);
      params.push_back(th);
    }
  } else {
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      std::vector<double> th(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) th[static_cast<std::size_t>(i)] = 2 * M_PI * idx[static_cast<std::size_t>(i)] / grid;
      params.push_back(th);
      int i = n - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == grid - 1) --i;
      if (i < 0) break;
      int v = idx[static_cast<std::size_t>(i)] + 1;
      for (int j = i; j < n; ++j) idx[static_cast<std::size_t>(j)] = v;
    }
  }
  auto map = [n](const std::vector<double>& th) {
    std::vector<cplx> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = std::polar(1.0, th[static_cast<std::size_t>(i)]);
    return symmetrize(z).coords;
  };
  return BoundarySampler(n, map, std::vector<double>(static_cast<std::size_t>(n), 0.0),
                         std::vector<double>(static_cast<std::size_t>(n), 2 * M_PI),
                         std::vector<bool>(static_cast<std::size_t>(n), true), std::move(params), max_degree);
}

BoundarySampler tetrablock_sampler(int radial, int angular, int max_degree) {
  std::vector<std::vector<double>> params;
  for (int r = 0; r <= radial; ++r)
    for (int a = 0; a < (r == 0 ? 1 : angular); ++a)
      for (int b = 0; b < angular; ++b)
        params.push_back({static_cast<double>(r) / radial, 2 * M_PI * a / angular, 2 * M_PI * b / angular});
  auto map = [](const std::vector<double>& p) {
    cplx x2 = std::polar(std::clamp(p[0], 0.0, 1.0), p[1]);
    cplx x3 = std::polar(1.0, p[2]);
    return std::vector<cplx>{std::conj(x2) * x3, x2, x3};
  };
  return BoundarySampler(3, map, {0.0, 0.0, 0.0}, {1.0, 2 * M_PI, 2 * M_PI}, {false, true, true}, std::move(params),
                         max_degree);
}

SupEstimate sup_norm_on_gamma(const Polynomial& f, int n, int grid) {
  if (f.n != n) fail(ErrorCode::DimensionMismatch, "polynomial arity differs from n");
  SupEstimate out;
  auto sampler = gamma_sampler(n, grid, std::max(f.degree(), 0), &out.sampled);
  out.value = sampler.grid_max(f);
  out.refined = std::max(out.value, sampler.sup(f, 4));
  return out;
}

namespace {

const BoundarySampler& cached_gamma_sampler(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<BoundarySampler>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    // about 2-3 thousand symmetric torus points for every n
    int grid = n <= 1 ? 256 : n == 2 ? 64 : n == 3 ? 24 : n == 4 ? 14 : n == 5 ? 10 : 6;
    slot = std::make_unique<BoundarySampler>(gamma_sampler(n, grid, 4));
  }
  return *slot;
}

const BoundarySampler& cached_tetrablock_sampler() {
  static std::once_flag once;
  static std::unique_ptr<BoundarySampler> s;
  std::call_once(once, [] { s = std::make_unique<BoundarySampler>(tetrablock_sampler(8, 20, 4)); });
  return *s;
}

}  // namespace

std::optional<RefutationWitness> refute_on(const std::vector<Mat>& tuple, const BoundarySampler& sampler, int samples,
                                           std::uint64_t seed, double rel_tol) {
  const int n = sampler.nvars();
  if (static_cast<int>(tuple.size()) != n) fail(ErrorCode::DimensionMismatch, "tuple length differs from sampler arity");
  MonomialTable table(tuple, 4);
  Rng rng(seed);
  auto test = [&](const Polynomial& f) -> std::optional<RefutationWitness> {
    double tn = op_norm(table.combine(f));
    double quick = sampler.grid_max(f);
    if (tn <= quick * (1 + rel_tol)) return std::nullopt;
    double s = sampler.sup(f, 8);
    if (tn > s * (1 + rel_tol)) return RefutationWitness{f, tn, s};
    return std::nullopt;
  };
  int used = 0;
  for (int i = 0; i < n && used < samples; ++i, ++used)
    if (auto w = test(Polynomial::coordinate(n, i))) return w;
  for (; used < samples; ++used)
    if (auto w = test(Polynomial::random(n, 4, rng))) return w;
  return std::nullopt;
}

std::optional<RefutationWitness> refute_gamma_contraction(const std::vector<Mat>& tuple, int samples,
                                                          std::uint64_t seed, double rel_tol) {
  if (tuple.empty()) fail(ErrorCode::DimensionMismatch, "empty tuple");
  return refute_on(tuple, cached_gamma_sampler(static_cast<int>(tuple.size())), samples, seed, rel_tol);
}

std::optional<RefutationWitness> refute_e_contraction(const std::vector<Mat>& triple, int samples, std::uint64_t seed,
                                                      double rel_tol) {
  return refute_on(triple, cached_tetrablock_sampler(), samples, seed, rel_tol);
}

}  // namespace opkit
