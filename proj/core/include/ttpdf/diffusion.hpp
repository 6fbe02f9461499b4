#pragma once

#include "ttpdf/fem.hpp"
#include "ttpdf/target.hpp"

#include <cstdint>
#include <memory>

namespace ttpdf {

struct DiffusionParameters {
  double nu = 2.0;
  double noise_variance = 0.01;
  double theta0 = 1.5;
  std::size_t observations = 9;  // m0, a perfect square
  std::size_t cells_per_side = 64;
  std::size_t dimension = 11;
  std::uint64_t noise_seed = 7;
  bool add_noise = true;
};

/// Frequencies (rho_1, rho_2) of term k >= 1 in diagonal order: (0,1), (1,0), (0,2), ...
std::array<int, 2> kle_frequencies(std::size_t k);
/// Term variances eta_k = k^-(nu+1) / K, k = 1..d, summing to one.
std::vector<double> kle_variances(std::size_t d, double nu);
/// kappa(theta, x) = exp(sum_k theta_k sqrt(eta_k) cos(2 pi rho_1 x1) cos(2 pi rho_2 x2)).
double kle_field(std::span<const double> theta, double nu, double x1, double x2);

/// Posterior of the log-diffusion coefficient parameters given noisy local averages
/// of the FEM solution; uniform prior on [-sqrt 3, sqrt 3]^d. QoIs: the flux F
/// through x1 = 1 and the indicator F > 1.5.
class Diffusion final : public TargetDensity {
 public:
  explicit Diffusion(DiffusionParameters params = {});

  std::string name() const override { return "diffusion"; }
  std::size_t dimension() const override { return p_.dimension; }
  std::vector<double> lower() const override;
  std::vector<double> upper() const override;
  double log_density(std::span<const double> x) const override;
  std::vector<std::string> qoi_names() const override { return {"flux", "flux_exceeds_1.5"}; }
  double evaluate(std::span<const double> x, std::span<double> qoi) const override;

  const DiffusionParameters& parameters() const { return p_; }
  const BilinearFem& fem() const { return fem_; }
  const std::vector<double>& data() const { return y_; }

  /// Cellwise kappa at the cell midpoints.
  std::vector<double> kappa_cells(std::span<const double> theta) const;
  /// Observation operator Q applied to a FEM solution.
  std::vector<double> observe(const Vector& u) const;
  /// Centres of the observation squares and their side length.
  const std::vector<std::array<double, 2>>& observation_centres() const { return centres_; }
  double observation_side() const { return side_; }

 private:
  DiffusionParameters p_;
  BilinearFem fem_;
  std::vector<double> eta_;
  std::vector<std::array<int, 2>> freq_;
  // cos(2 pi rho x) tables at cell midpoints, per term: [k][i] and [k][j].
  std::vector<std::vector<double>> cos1_, cos2_;
  std::vector<std::array<double, 2>> centres_;
  double side_ = 0.0;
  std::vector<double> y_;
};

}  // namespace ttpdf
