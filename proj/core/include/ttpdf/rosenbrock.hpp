#pragma once

#include "ttpdf/target.hpp"

namespace ttpdf {

/// pi(theta) = exp(-r(theta)/2) with
/// r = sum_{k<d} theta_k^2 + (theta_{k+1} + 5 (theta_k^2 + 1))^2,
/// on the box with half-widths 2, ..., 2, 7, 200.
class Rosenbrock final : public TargetDensity {
 public:
  explicit Rosenbrock(std::size_t d);

  std::string name() const override { return "rosenbrock"; }
  std::size_t dimension() const override { return d_; }
  std::vector<double> lower() const override;
  std::vector<double> upper() const override;
  double log_density(std::span<const double> x) const override;
  /// Ancestral draws along the ridge, clipped to the box.
  Matrix reference_points(std::size_t count, std::mt19937_64& rng) const override;

  /// Half-width of the box in dimension k (0-based).
  double half_width(std::size_t k) const;

 private:
  std::size_t d_;
};

double rosenbrock_r(std::span<const double> x);

/// Node counts 128, ..., 128, 512, 4096.
std::vector<std::size_t> rosenbrock_grid_sizes(std::size_t d);

}  // namespace ttpdf
