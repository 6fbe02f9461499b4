#include "ttpdf/iact.hpp"

#include "ttpdf/errors.hpp"
#include "ttpdf/log.hpp"

#include <unsupported/Eigen/FFT>

#include <bit>
#include <complex>
#include <vector>

namespace ttpdf {

double iact(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 100) throw DomainError("IACT needs at least 100 values");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);

  const std::size_t len = std::bit_ceil(2 * n);
  std::vector<double> x(len, 0.0);
  for (std::size_t i = 0; i < n; ++i) x[i] = series[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> f;
  fft.fwd(f, x);
  for (auto& c : f) c = std::norm(c);
  std::vector<double> acov;
  fft.inv(acov, f);
  // Biased autocovariance estimates gamma(t) = acov[t] / n.
  double g0 = acov[0] / static_cast<double>(n);
  if (!(g0 > 1e-24 * mean * mean) || g0 == 0.0) {
    warn("IACT of a constant series; reporting 1");
    return 1.0;
  }
  double sum = 0.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = (acov[2 * m] + acov[2 * m + 1]) / static_cast<double>(n);
    if (m > 0 && pair <= 0.0) break;
    sum += pair;
  }
  return -1.0 + 2.0 * sum / g0;
}

}  // namespace ttpdf
