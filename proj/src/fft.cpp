#include "opkit/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace opkit {

namespace {
std::mutex plan_mutex;  // FFTW planner is not reentrant
}

bool is_power_of_two(int g) { return g > 0 && (g & (g - 1)) == 0; }

std::map<int, Mat> dft_coefficients(const std::vector<Mat>& samples, int m_range) {
  const int G = static_cast<int>(samples.size());
  if (G == 0) fail(ErrorCode::InvalidParams, "no samples");
  if (2 * m_range + 1 > G) fail(ErrorCode::InvalidParams, "grid too small for requested coefficients");
  const Index rows = samples.front().rows(), cols = samples.front().cols();
  const int howmany = static_cast<int>(rows * cols);
  std::map<int, Mat> out;
  if (howmany == 0) {
    for (int m = -m_range; m <= m_range; ++m) out[m] = Mat(rows, cols);
    return out;
  }
  // layout: entry e occupies a contiguous run of G samples
  fftw_complex* in = fftw_alloc_complex(static_cast<std::size_t>(G) * howmany);
  fftw_complex* res = fftw_alloc_complex(static_cast<std::size_t>(G) * howmany);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    plan = fftw_plan_many_dft(1, &G, howmany, in, nullptr, 1, G, res, nullptr, 1, G, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (int l = 0; l < G; ++l) {
    const Mat& s = samples[static_cast<std::size_t>(l)];
    if (s.rows() != rows || s.cols() != cols) fail(ErrorCode::DimensionMismatch, "samples differ in shape");
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) {
        std::size_t e = static_cast<std::size_t>(j * rows + i);
        in[e * G + l][0] = s(i, j).real();
        in[e * G + l][1] = s(i, j).imag();
      }
  }
  fftw_execute(plan);
  for (int m = -m_range; m <= m_range; ++m) {
    int idx = ((m % G) + G) % G;
    Mat c(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) {
        std::size_t e = static_cast<std::size_t>(j * rows + i);
        c(i, j) = cplx(res[e * G + idx][0], res[e * G + idx][1]) / static_cast<double>(G);
      }
    out[m] = c;
  }
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(res);
  return out;
}

std::map<int, Mat> fourier_coefficients(const std::function<Mat(double)>& f, int grid, int m_range) {
  std::vector<Mat> samples(static_cast<std::size_t>(grid));
  for (int l = 0; l < grid; ++l) samples[static_cast<std::size_t>(l)] = f(2.0 * M_PI * l / grid);
  return dft_coefficients(samples, m_range);
}

}  // namespace opkit
