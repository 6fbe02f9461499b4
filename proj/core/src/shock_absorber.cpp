#include "ttpdf/shock_absorber.hpp"

#include "portable_random.hpp"
#include "ttpdf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ttpdf {

const std::array<FailureRecord, 38>& shock_absorber_data() {
  // Distance to failure (km) of 38 vehicle shock absorbers; true marks a censored record.
  static const std::array<FailureRecord, 38> data{{
      {6700, false},  {6950, true},   {7820, true},   {8790, true},   {9120, false},
      {9660, true},   {9820, true},   {11310, true},  {11690, true},  {11850, true},
      {11880, true},  {12140, true},  {12200, false}, {12870, true},  {13150, false},
      {13330, true},  {13470, true},  {14040, true},  {14300, false}, {17520, false},
      {17540, true},  {17890, true},  {18420, true},  {18960, true},  {18980, true},
      {19410, true},  {20100, false}, {20100, true},  {20150, true},  {20320, true},
      {20900, false}, {22700, false}, {23490, true},  {26510, false}, {27410, true},
      {27490, false}, {27890, true},  {28100, true},
  }};
  return data;
}

double weibull_log_pdf(double t, double theta1, double theta2) {
  double z = std::log(t) - std::log(theta1);
  return std::log(theta2) - std::log(theta1) + (theta2 - 1.0) * z - std::exp(theta2 * z);
}

double weibull_log_survival(double t, double theta1, double theta2) {
  return -std::exp(theta2 * (std::log(t) - std::log(theta1)));
}

double weibull_quantile95(double theta1, double theta2) {
  return theta1 * std::pow(std::log(20.0), 1.0 / theta2);
}

ShockAbsorber::ShockAbsorber(std::size_t covariates, std::uint64_t covariate_seed)
    : covariates_(covariates), x_(38, static_cast<Eigen::Index>(covariates)) {
  std::mt19937_64 rng(covariate_seed);
  for (Eigen::Index i = 0; i < x_.rows(); ++i)
    for (Eigen::Index k = 0; k < x_.cols(); ++k) x_(i, k) = detail::standard_normal(rng);
}

double ShockAbsorber::m0() { return std::log(30796.0); }

std::vector<double> ShockAbsorber::lower() const {
  std::vector<double> lo(dimension(), -3.0);
  lo[0] = m0() - 3.0 * std::sqrt(kSigma0Squared);
  lo.back() = 0.0;
  return lo;
}

std::vector<double> ShockAbsorber::upper() const {
  std::vector<double> hi(dimension(), 3.0);
  hi[0] = m0() + 3.0 * std::sqrt(kSigma0Squared);
  hi.back() = kTheta2Max;
  return hi;
}

Grid ShockAbsorber::make_grid(std::span<const std::size_t> sizes) const {
  if (sizes.size() != dimension()) throw DomainError("grid sizes do not match the target dimension");
  auto lo = lower(), hi = upper();
  const double n = static_cast<double>(sizes.back());
  lo.back() = kTheta2Max / (2.0 * n);
  return Grid::uniform(lo, hi, sizes);
}

double ShockAbsorber::log_density(std::span<const double> x) const {
  if (x.size() != dimension()) throw DomainError("shock absorber point has wrong dimension");
  const double theta2 = x.back();
  if (!(theta2 > 0.0)) return -std::numeric_limits<double>::infinity();
  double lp = (kAlpha - 0.5) * std::log(theta2) - kGamma * theta2;
  for (std::size_t k = 0; k <= covariates_; ++k) {
    double m = k == 0 ? m0() : 0.0;
    double s2 = k == 0 ? kSigma0Squared : 1.0;
    lp -= theta2 * (x[k] - m) * (x[k] - m) / (2.0 * s2);
  }
  const auto& data = shock_absorber_data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    double log_theta1 = x[0];
    for (std::size_t k = 0; k < covariates_; ++k)
      log_theta1 += x[k + 1] * x_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    double z = std::log(data[i].time) - log_theta1;
    double tail = std::exp(theta2 * z);
    if (data[i].censored)
      lp -= tail;
    else
      lp += std::log(theta2) - log_theta1 + (theta2 - 1.0) * z - tail;
  }
  return lp;
}

double ShockAbsorber::evaluate(std::span<const double> x, std::span<double> qoi) const {
  if (qoi.size() != 1) throw DomainError("shock absorber has one QoI");
  qoi[0] = weibull_quantile95(std::exp(x[0]), x.back());
  return log_density(x);
}

double quantile_of_mean(std::span<const double> theta1, std::span<const double> theta2,
                        std::span<const double> weights) {
  const std::size_t n = theta1.size();
  if (n == 0 || theta2.size() != n || (!weights.empty() && weights.size() != n))
    throw DomainError("quantile_of_mean needs matching, non-empty inputs");
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(theta1[i] > 0.0 && theta2[i] > 0.0)) throw DomainError("Weibull parameters must be positive");
    wsum += weights.empty() ? 1.0 : weights[i];
  }
  if (!(wsum > 0.0)) throw DomainError("weights must have positive sum");
  auto weight = [&](std::size_t i) { return (weights.empty() ? 1.0 : weights[i]) / wsum; };
  // G(s) = sum_i w_i F_i(e^s) - 0.95 and its derivative in s.
  auto eval = [&](double s, double& deriv) {
    double g = 0.0;
    deriv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double a = std::exp(theta2[i] * (s - std::log(theta1[i])));
      double surv = std::exp(-a);
      g += weight(i) * (1.0 - surv);
      deriv += weight(i) * theta2[i] * a * surv;
    }
    return g - 0.95;
  };
  double start = 0.0;
  for (std::size_t i = 0; i < n; ++i) start += weight(i) * std::log(weibull_quantile95(theta1[i], theta2[i]));
  double deriv;
  double lo = start - 1.0, hi = start + 1.0;
  for (int i = 0; i < 200 && eval(lo, deriv) > 0.0; ++i) lo -= 2.0 * (i + 1);
  for (int i = 0; i < 200 && eval(hi, deriv) < 0.0; ++i) hi += 2.0 * (i + 1);
  if (!(eval(lo, deriv) <= 0.0 && eval(hi, deriv) >= 0.0))
    throw NumericError("quantile of the mean is not bracketed");
  double s = std::clamp(start, lo, hi);
  for (int it = 0; it < 200; ++it) {
    double g = eval(s, deriv);
    if (g == 0.0) break;
    if (g < 0.0) lo = s; else hi = s;
    double next = deriv > 0.0 ? s - g / deriv : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-15 * std::max(1.0, std::abs(s))) {
      s = next;
      break;
    }
    s = next;
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(s))) break;
  }
  return std::exp(s);
}

}  // namespace ttpdf
