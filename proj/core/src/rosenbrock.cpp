#include "ttpdf/rosenbrock.hpp"

#include "portable_random.hpp"
#include "ttpdf/errors.hpp"

#include <algorithm>

namespace ttpdf {

double rosenbrock_r(std::span<const double> x) {
  double r = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    double c = x[k + 1] + 5.0 * (x[k] * x[k] + 1.0);
    r += x[k] * x[k] + c * c;
  }
  return r;
}

std::vector<std::size_t> rosenbrock_grid_sizes(std::size_t d) {
  if (d < 2) throw DomainError("Rosenbrock needs d >= 2");
  std::vector<std::size_t> n(d, 128);
  n[d - 2] = 512;
  n[d - 1] = 4096;
  return n;
}

Rosenbrock::Rosenbrock(std::size_t d) : d_(d) {
  if (d < 2) throw DomainError("Rosenbrock needs d >= 2");
}

double Rosenbrock::half_width(std::size_t k) const {
  if (k + 1 == d_) return 200.0;
  if (k + 2 == d_) return 7.0;
  return 2.0;
}

std::vector<double> Rosenbrock::lower() const {
  std::vector<double> lo(d_);
  for (std::size_t k = 0; k < d_; ++k) lo[k] = -half_width(k);
  return lo;
}

std::vector<double> Rosenbrock::upper() const {
  std::vector<double> hi(d_);
  for (std::size_t k = 0; k < d_; ++k) hi[k] = half_width(k);
  return hi;
}

double Rosenbrock::log_density(std::span<const double> x) const {
  if (x.size() != d_) throw DomainError("Rosenbrock point has wrong dimension");
  return -0.5 * rosenbrock_r(x);
}

Matrix Rosenbrock::reference_points(std::size_t count, std::mt19937_64& rng) const {
  Matrix x(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d_));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double prev = 0.0;
    for (std::size_t k = 0; k < d_; ++k) {
      double mean = k == 0 ? 0.0 : -5.0 * (prev * prev + 1.0);
      // Interior coordinates also carry their own theta_k^2 term.
      double sd = 1.0;
      if (k > 0 && k + 1 < d_) {
        mean *= 0.5;
        sd = std::sqrt(0.5);
      }
      double h = half_width(k);
      double v = std::clamp(mean + sd * detail::standard_normal(rng), -h, h);
      x(i, static_cast<Eigen::Index>(k)) = v;
      prev = v;
    }
  }
  return x;
}

}  // namespace ttpdf
