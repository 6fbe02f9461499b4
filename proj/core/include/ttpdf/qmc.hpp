#pragma once

#include "ttpdf/tt_tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

namespace ttpdf {

inline constexpr std::size_t kMaxLatticeDimension = 64;
inline constexpr std::size_t kMaxLatticePoints = std::size_t{1} << 20;

struct GeneratingVector {
  std::size_t points = 0;
  std::vector<std::uint64_t> z;
  /// Squared shift-averaged worst-case error of the full vector.
  double criterion = 0.0;
};

/// Randomly shifted rank-1 lattice: point l is frac(l z / N + shift).
struct LatticeRule {
  std::size_t points = 0;
  std::vector<std::uint64_t> z;
  std::vector<double> shift;

  std::size_t dimension() const { return z.size(); }
};

/// Product weights 1/k^2, k = 1..d.
std::vector<double> default_lattice_weights(std::size_t d);

/// Squared shift-averaged worst-case error for the weighted Korobov space with
/// smoothness 2 (kernel 2 pi^2 B_2):
///   -1 + (1/N) sum_l prod_k (1 + gamma_k 2 pi^2 B_2({l z_k / N})).
double lattice_criterion(std::span<const std::uint64_t> z, std::size_t points,
                         std::span<const double> weights);

/// Component-by-component construction for N a power of two, O(d N log N).
/// Throws ConfigError for d > 64, N not a power of two, or N > 2^20.
GeneratingVector build_generating_vector(std::size_t d, std::size_t points,
                                         std::span<const double> weights);
GeneratingVector build_generating_vector(std::size_t d, std::size_t points);

/// Text cache: "d N", the criterion, then one component per line.
void save_generating_vector(const std::filesystem::path& path, const GeneratingVector& g);
GeneratingVector load_generating_vector(const std::filesystem::path& path);
/// Loads dir/lattice-<d>-<N>.txt if present, otherwise builds and stores it.
GeneratingVector cached_generating_vector(const std::filesystem::path& dir, std::size_t d,
                                          std::size_t points);

LatticeRule randomize(const GeneratingVector& g, std::mt19937_64& rng);

/// N x d points in [0,1).
Matrix lattice_points(const LatticeRule& rule);

}  // namespace ttpdf
