#pragma once

#include <vector>

#include "opkit/linalg.hpp"

namespace opkit {

// Exponent vectors in graded order, degree 0 first.
std::vector<std::vector<int>> monomial_exponents(int nvars, int max_degree);

struct Polynomial {
  struct Term {
    std::vector<int> alpha;
    cplx coeff;
  };
  int n = 0;  // number of variables
  std::vector<Term> terms;

  int degree() const;
  cplx eval(const std::vector<cplx>& x) const;
  Mat eval(const std::vector<Mat>& tuple) const;  // nested Horner in the first variable

  static Polynomial coordinate(int n, int index);
  static Polynomial constant(int n, cplx c);
  static Polynomial random(int n, int max_degree, Rng& rng);
};

// All monomials of a commuting tuple up to a degree, built by one product each.
class MonomialTable {
 public:
  MonomialTable(const std::vector<Mat>& tuple, int max_degree);
  const std::vector<std::vector<int>>& exponents() const { return exps_; }
  Mat combine(const Polynomial& f) const;

 private:
  std::vector<std::vector<int>> exps_;
  std::vector<Mat> mats_;
};

}  // namespace opkit
