#pragma once

#include <functional>
#include <map>
#include <vector>

#include "opkit/linalg.hpp"

namespace opkit {

// Forward DFT of matrix-valued samples f_l, l = 0..G-1: returns
// c_m = (1/G) sum_l f_l e^{-2 pi i l m / G} for |m| <= m_range (negative m alias to G+m).
std::map<int, Mat> dft_coefficients(const std::vector<Mat>& samples, int m_range);

// Fourier coefficients of t -> f(t) on [0, 2pi) from `grid` uniform samples.
std::map<int, Mat> fourier_coefficients(const std::function<Mat(double)>& f, int grid, int m_range);

bool is_power_of_two(int g);

}  // namespace opkit
