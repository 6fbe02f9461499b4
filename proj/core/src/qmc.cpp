#include "ttpdf/qmc.hpp"

#include "ttpdf/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <bit>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <numbers>

namespace ttpdf {

namespace {

double omega(double x) { return 2.0 * std::numbers::pi * std::numbers::pi * (x * x - x + 1.0 / 6.0); }

void check_limits(std::size_t d, std::size_t points) {
  if (d == 0 || d > kMaxLatticeDimension)
    throw ConfigError("lattice dimension must be in 1.." + std::to_string(kMaxLatticeDimension));
  if (points < 2 || points > kMaxLatticePoints || !std::has_single_bit(points))
    throw ConfigError("lattice point count must be a power of two between 2 and 2^20");
}

}  // namespace

std::vector<double> default_lattice_weights(std::size_t d) {
  std::vector<double> w(d);
  for (std::size_t k = 0; k < d; ++k) w[k] = 1.0 / static_cast<double>((k + 1) * (k + 1));
  return w;
}

double lattice_criterion(std::span<const std::uint64_t> z, std::size_t points,
                         std::span<const double> weights) {
  if (weights.size() < z.size()) throw DomainError("too few lattice weights");
  double sum = 0.0;
  for (std::size_t l = 0; l < points; ++l) {
    double prod = 1.0;
    for (std::size_t k = 0; k < z.size(); ++k)
      prod *= 1.0 + weights[k] * omega(static_cast<double>((l * z[k]) % points) / static_cast<double>(points));
    sum += prod;
  }
  return sum / static_cast<double>(points) - 1.0;
}

GeneratingVector build_generating_vector(std::size_t d, std::size_t points,
                                         std::span<const double> weights) {
  check_limits(d, points);
  if (weights.size() < d) throw ConfigError("too few lattice weights");
  const std::size_t n = points;
  const int m = std::countr_zero(n);
  GeneratingVector g;
  g.points = n;

  std::vector<double> prod(n, 1.0);
  auto update = [&](std::uint64_t z, double gamma) {
    for (std::size_t l = 0; l < n; ++l)
      prod[l] *= 1.0 + gamma * omega(static_cast<double>((l * z) % n) / static_cast<double>(n));
  };
  g.z.push_back(1);
  update(1, weights[0]);

  // Discrete logarithm base 3 of +-z modulo N, for odd z.
  std::vector<std::size_t> dlog(n, 0);
  if (n >= 8) {
    std::uint64_t p = 1;
    for (std::size_t b = 0; b < n / 4; ++b) {
      dlog[p] = b;
      dlog[n - p] = b;
      p = (p * 3) % n;
    }
  }

  Eigen::FFT<double> fft;
  for (std::size_t s = 1; s < d; ++s) {
    std::vector<double> cost(n, 0.0);
    if (n >= 8) {
      // Each l = 2^v u (u odd) contributes through u z mod M_v with M_v = N / 2^v.
      // Levels with M_v <= 4 are constant in z.
      for (int v = 0; m - v >= 3; ++v) {
        const std::size_t mv = n >> v, len = mv / 4;
        std::vector<double> q(len), w(len);
        std::uint64_t p = 1;
        for (std::size_t a = 0; a < len; ++a) {
          q[a] = prod[(p << v)] + prod[((mv - p) << v)];
          w[a] = omega(static_cast<double>(p) / static_cast<double>(mv));
          p = (p * 3) % mv;
        }
        std::vector<std::complex<double>> fq, fw;
        fft.fwd(fq, q);
        fft.fwd(fw, w);
        for (std::size_t f = 0; f < len; ++f) fw[f] *= std::conj(fq[f]);
        std::vector<double> corr;
        fft.inv(corr, fw);
        for (std::size_t z = 1; z < n; z += 2) cost[z] += corr[dlog[z] % len];
      }
    }
    std::uint64_t best = 1;
    double best_cost = cost[1];
    for (std::size_t z = 3; z < n; z += 2)
      if (cost[z] < best_cost) {
        best_cost = cost[z];
        best = z;
      }
    g.z.push_back(best);
    update(best, weights[s]);
  }
  double sum = 0.0;
  for (double p : prod) sum += p;
  g.criterion = sum / static_cast<double>(n) - 1.0;
  return g;
}

GeneratingVector build_generating_vector(std::size_t d, std::size_t points) {
  check_limits(d, points);
  auto w = default_lattice_weights(d);
  return build_generating_vector(d, points, w);
}

void save_generating_vector(const std::filesystem::path& path, const GeneratingVector& g) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << g.z.size() << ' ' << g.points << '\n' << std::setprecision(17) << g.criterion << '\n';
  for (auto z : g.z) out << z << '\n';
}

GeneratingVector load_generating_vector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  GeneratingVector g;
  std::size_t d = 0;
  if (!(in >> d >> g.points >> g.criterion)) throw ConfigError("malformed lattice file " + path.string());
  check_limits(d, g.points);
  g.z.resize(d);
  for (auto& z : g.z)
    if (!(in >> z) || z == 0 || z >= g.points) throw ConfigError("malformed lattice file " + path.string());
  return g;
}

GeneratingVector cached_generating_vector(const std::filesystem::path& dir, std::size_t d,
                                          std::size_t points) {
  auto path = dir / ("lattice-" + std::to_string(d) + "-" + std::to_string(points) + ".txt");
  if (std::filesystem::exists(path)) {
    auto g = load_generating_vector(path);
    if (g.z.size() == d && g.points == points) return g;
  }
  auto g = build_generating_vector(d, points);
  std::filesystem::create_directories(dir);
  save_generating_vector(path, g);
  return g;
}

LatticeRule randomize(const GeneratingVector& g, std::mt19937_64& rng) {
  LatticeRule rule{g.points, g.z, {}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < g.z.size(); ++k) rule.shift.push_back(u(rng));
  return rule;
}

Matrix lattice_points(const LatticeRule& rule) {
  const std::size_t n = rule.points, d = rule.dimension();
  if (rule.shift.size() != d) throw DomainError("lattice shift has wrong dimension");
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t k = 0; k < d; ++k) {
      double v = static_cast<double>((l * rule.z[k]) % n) / static_cast<double>(n) + rule.shift[k];
      if (v >= 1.0) v -= 1.0;
      x(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = v;
    }
  return x;
}

}  // namespace ttpdf
