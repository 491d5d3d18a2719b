#include "opkit/polynomial.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace opkit {

std::vector<std::vector<int>> monomial_exponents(int nvars, int max_degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(nvars), 0);
  for (int deg = 0; deg <= max_degree; ++deg) {
    std::function<void(int, int)> rec = [&](int var, int left) {
      if (var == nvars - 1) {
        cur[static_cast<std::size_t>(var)] = left;
        out.push_back(cur);
        return;
      }
      for (int e = left; e >= 0; --e) {
        cur[static_cast<std::size_t>(var)] = e;
        rec(var + 1, left - e);
      }
    };
    if (nvars > 0) rec(0, deg);
  }
  return out;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& t : terms) {
    int s = 0;
    for (int e : t.alpha) s += e;
    d = std::max(d, s);
  }
  return d;
}

cplx Polynomial::eval(const std::vector<cplx>& x) const {
  if (static_cast<int>(x.size()) != n) fail(ErrorCode::DimensionMismatch, "polynomial arity");
  cplx acc = 0;
  for (const auto& t : terms) {
    cplx m = t.coeff;
    for (int i = 0; i < n; ++i)
      for (int e = 0; e < t.alpha[static_cast<std::size_t>(i)]; ++e) m *= x[static_cast<std::size_t>(i)];
    acc += m;
  }
  return acc;
}

namespace {

Mat horner(const std::vector<const Polynomial::Term*>& terms, const std::vector<Mat>& tuple, std::size_t var,
           Index dim) {
  if (terms.empty()) return Mat::Zero(dim, dim);
  if (var == tuple.size()) {
    cplx c = 0;
    for (const auto* t : terms) c += t->coeff;
    return c * identity(dim);
  }
  std::map<int, std::vector<const Polynomial::Term*>> by_power;
  for (const auto* t : terms) by_power[t->alpha[var]].push_back(t);
  int top = by_power.rbegin()->first;
  Mat acc = Mat::Zero(dim, dim);
  for (int k = top; k >= 0; --k) {
    auto it = by_power.find(k);
    Mat inner = it == by_power.end() ? Mat::Zero(dim, dim) : horner(it->second, tuple, var + 1, dim);
    acc = (k == top) ? inner : Mat(tuple[var] * acc + inner);
  }
  return acc;
}

}  // namespace

Mat Polynomial::eval(const std::vector<Mat>& tuple) const {
  if (static_cast<int>(tuple.size()) != n) fail(ErrorCode::DimensionMismatch, "polynomial arity");
  Index dim = tuple.empty() ? 0 : tuple.front().rows();
  std::vector<const Term*> ptrs;
  for (const auto& t : terms) ptrs.push_back(&t);
  return horner(ptrs, tuple, 0, dim);
}

Polynomial Polynomial::coordinate(int n, int index) {
  Polynomial f;
  f.n = n;
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  a[static_cast<std::size_t>(index)] = 1;
  f.terms.push_back({a, 1.0});
  return f;
}

Polynomial Polynomial::constant(int n, cplx c) {
  Polynomial f;
  f.n = n;
  f.terms.push_back({std::vector<int>(static_cast<std::size_t>(n), 0), c});
  return f;
}

Polynomial Polynomial::random(int n, int max_degree, Rng& rng) {
  Polynomial f;
  f.n = n;
  int deg = rng.integer(1, max_degree);
  for (const auto& a : monomial_exponents(n, deg)) f.terms.push_back({a, rng.cnormal()});
  return f;
}

MonomialTable::MonomialTable(const std::vector<Mat>& tuple, int max_degree) {
  const int n = static_cast<int>(tuple.size());
  exps_ = monomial_exponents(n, max_degree);
  Index dim = tuple.empty() ? 0 : tuple.front().rows();
  std::map<std::vector<int>, std::size_t> where;
  for (std::size_t k = 0; k < exps_.size(); ++k) {
    const auto& a = exps_[k];
    where[a] = k;
    int var = -1;
    for (int i = 0; i < n; ++i)
      if (a[static_cast<std::size_t>(i)] > 0) {
        var = i;
        break;
      }
    if (var < 0) {
      mats_.push_back(identity(dim));
      continue;
    }
    auto lower = a;
    --lower[static_cast<std::size_t>(var)];
    mats_.push_back(tuple[static_cast<std::size_t>(var)] * mats_[where.at(lower)]);
  }
}

Mat MonomialTable::combine(const Polynomial& f) const {
  Index dim = mats_.empty() ? 0 : mats_.front().rows();
  Mat acc = Mat::Zero(dim, dim);
  for (const auto& t : f.terms) {
    auto it = std::find(exps_.begin(), exps_.end(), t.alpha);
    if (it == exps_.end()) fail(ErrorCode::InvalidParams, "polynomial degree exceeds the table");
    acc += t.coeff * mats_[static_cast<std::size_t>(it - exps_.begin())];
  }
  return acc;
}

}  // namespace opkit
