#include "ttpdf/diffusion.hpp"

#include "portable_random.hpp"
#include "ttpdf/errors.hpp"

#include <cmath>
#include <numbers>

namespace ttpdf {

std::array<int, 2> kle_frequencies(std::size_t k) {
  if (k < 1) throw DomainError("KLE terms are numbered from 1");
  // tau = floor(-1/2 + sqrt(1/4 + 2k)), corrected against rounding.
  auto tau = static_cast<std::size_t>(std::floor(-0.5 + std::sqrt(0.25 + 2.0 * static_cast<double>(k))));
  while (tau * (tau + 1) / 2 > k) --tau;
  while ((tau + 1) * (tau + 2) / 2 <= k) ++tau;
  auto rho1 = static_cast<int>(k - tau * (tau + 1) / 2);
  return {rho1, static_cast<int>(tau) - rho1};
}

std::vector<double> kle_variances(std::size_t d, double nu) {
  std::vector<double> eta(d);
  double total = 0.0;
  for (std::size_t k = 1; k <= d; ++k) {
    eta[k - 1] = std::pow(static_cast<double>(k), -(nu + 1.0));
    total += eta[k - 1];
  }
  for (double& e : eta) e /= total;
  return eta;
}

double kle_field(std::span<const double> theta, double nu, double x1, double x2) {
  auto eta = kle_variances(theta.size(), nu);
  double s = 0.0;
  for (std::size_t k = 1; k <= theta.size(); ++k) {
    auto [r1, r2] = kle_frequencies(k);
    s += theta[k - 1] * std::sqrt(eta[k - 1]) * std::cos(2.0 * std::numbers::pi * r1 * x1) *
         std::cos(2.0 * std::numbers::pi * r2 * x2);
  }
  return std::exp(s);
}

Diffusion::Diffusion(DiffusionParameters params) : p_(params), fem_(params.cells_per_side) {
  if (p_.dimension < 1) throw DomainError("diffusion dimension must be positive");
  if (!(p_.noise_variance > 0.0)) throw DomainError("noise variance must be positive");
  auto root = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(p_.observations))));
  if (root < 1 || root * root != p_.observations) throw DomainError("observation count must be a perfect square");

  eta_ = kle_variances(p_.dimension, p_.nu);
  const std::size_t m = p_.cells_per_side;
  const double h = 1.0 / static_cast<double>(m);
  cos1_.resize(p_.dimension);
  cos2_.resize(p_.dimension);
  for (std::size_t k = 1; k <= p_.dimension; ++k) {
    auto f = kle_frequencies(k);
    freq_.push_back(f);
    for (std::size_t i = 0; i < m; ++i) {
      double x = (static_cast<double>(i) + 0.5) * h;
      cos1_[k - 1].push_back(std::cos(2.0 * std::numbers::pi * f[0] * x));
      cos2_[k - 1].push_back(std::cos(2.0 * std::numbers::pi * f[1] * x));
    }
  }

  const double spacing = 1.0 / static_cast<double>(root + 1);
  side_ = 2.0 * spacing;
  for (std::size_t b = 1; b <= root; ++b)
    for (std::size_t a = 1; a <= root; ++a)
      centres_.push_back({static_cast<double>(a) * spacing, static_cast<double>(b) * spacing});

  std::vector<double> truth(p_.dimension, p_.theta0);
  auto kappa = kappa_cells(truth);
  y_ = observe(fem_.solve(kappa));
  if (p_.add_noise) {
    std::mt19937_64 rng(p_.noise_seed);
    for (double& v : y_) v += std::sqrt(p_.noise_variance) * detail::standard_normal(rng);
  }
}

std::vector<double> Diffusion::lower() const { return std::vector<double>(p_.dimension, -std::sqrt(3.0)); }
std::vector<double> Diffusion::upper() const { return std::vector<double>(p_.dimension, std::sqrt(3.0)); }

std::vector<double> Diffusion::kappa_cells(std::span<const double> theta) const {
  if (theta.size() != p_.dimension) throw DomainError("diffusion parameter has wrong dimension");
  const std::size_t m = p_.cells_per_side;
  std::vector<double> logk(m * m, 0.0);
  for (std::size_t k = 0; k < p_.dimension; ++k) {
    double a = theta[k] * std::sqrt(eta_[k]);
    for (std::size_t j = 0; j < m; ++j) {
      double aj = a * cos2_[k][j];
      for (std::size_t i = 0; i < m; ++i) logk[i + m * j] += aj * cos1_[k][i];
    }
  }
  for (double& v : logk) v = std::exp(v);
  return logk;
}

std::vector<double> Diffusion::observe(const Vector& u) const {
  std::vector<double> q;
  for (const auto& c : centres_) q.push_back(fem_.square_average(u, c[0], c[1], side_));
  return q;
}

double Diffusion::log_density(std::span<const double> x) const {
  auto u = fem_.solve(kappa_cells(x));
  auto q = observe(u);
  double misfit = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) misfit += (q[i] - y_[i]) * (q[i] - y_[i]);
  return -misfit / (2.0 * p_.noise_variance);
}

double Diffusion::evaluate(std::span<const double> x, std::span<double> qoi) const {
  if (qoi.size() != 2) throw DomainError("diffusion has two QoIs");
  auto kappa = kappa_cells(x);
  auto u = fem_.solve(kappa);
  auto q = observe(u);
  double misfit = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) misfit += (q[i] - y_[i]) * (q[i] - y_[i]);
  qoi[0] = fem_.flux(u, kappa);
  qoi[1] = qoi[0] > 1.5 ? 1.0 : 0.0;
  return -misfit / (2.0 * p_.noise_variance);
}

}  // namespace ttpdf
