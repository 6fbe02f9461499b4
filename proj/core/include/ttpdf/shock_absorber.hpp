#pragma once

#include "ttpdf/target.hpp"

#include <array>
#include <cstdint>
#include <span>

namespace ttpdf {

struct FailureRecord {
  double time;  // kilometres
  bool censored;
};

/// The 38 shock absorber failure distances; censored records are lower bounds.
const std::array<FailureRecord, 38>& shock_absorber_data();

/// Weibull regression posterior over (beta_0, ..., beta_D, theta_2) with right
/// censoring and an s-Normal-Gamma prior. Covariates are synthetic standard normals
/// drawn from covariate_seed. QoI "mean_quantile" is theta_1 ln(20)^(1/theta_2)
/// with theta_1 = exp(beta_0).
class ShockAbsorber final : public TargetDensity {
 public:
  static constexpr double kGamma = 2.2932;
  static constexpr double kAlpha = 6.8757;
  static constexpr double kSigma0Squared = 0.1563;
  static constexpr double kTheta2Max = 13.0;
  static constexpr std::uint64_t kDefaultCovariateSeed = 38;

  explicit ShockAbsorber(std::size_t covariates = 2,
                         std::uint64_t covariate_seed = kDefaultCovariateSeed);

  static double m0();

  std::string name() const override { return "shock"; }
  std::size_t dimension() const override { return covariates_ + 2; }
  std::vector<double> lower() const override;
  std::vector<double> upper() const override;
  /// Uniform nodes in beta; theta_2 nodes from 13/(2n) to 13 since pi vanishes at theta_2 = 0.
  Grid make_grid(std::span<const std::size_t> sizes) const override;

  double log_density(std::span<const double> x) const override;
  std::vector<std::string> qoi_names() const override { return {"mean_quantile"}; }
  double evaluate(std::span<const double> x, std::span<double> qoi) const override;

  std::size_t covariates() const { return covariates_; }
  /// 38 x D covariate matrix.
  const Matrix& covariate_matrix() const { return x_; }

 private:
  std::size_t covariates_;
  Matrix x_;
};

/// Weibull log density and log survival function.
double weibull_log_pdf(double t, double theta1, double theta2);
double weibull_log_survival(double t, double theta1, double theta2);

/// Right 95% quantile theta_1 ln(1/0.05)^(1/theta_2) of one Weibull law.
double weibull_quantile95(double theta1, double theta2);

/// Solves sum_i w_i F(t; theta1_i, theta2_i) = 0.95 (weights normalized internally,
/// empty weights mean equal weights) by Newton's method in log t with bisection
/// safeguards. Throws NumericError if no root is bracketed.
double quantile_of_mean(std::span<const double> theta1, std::span<const double> theta2,
                        std::span<const double> weights = {});

}  // namespace ttpdf
