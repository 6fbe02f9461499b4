#pragma once

#include "ttpdf/tt_tensor.hpp"

#include <functional>
#include <random>
#include <vector>

namespace ttpdf::test {

inline Grid unit_grid(std::size_t d, std::size_t n) { return Grid::uniform(d, 0.0, 1.0, n); }

/// Random TT with entries N(0,1) (or U(0.1,1) when positive) and given interface ranks.
inline TTTensor random_tt(const Grid& grid, std::vector<std::size_t> ranks, std::mt19937_64& rng,
                          bool positive = false) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  std::vector<std::vector<double>> blocks(grid.dimension());
  for (std::size_t k = 0; k < grid.dimension(); ++k) {
    blocks[k].resize(ranks[k] * grid.size(k) * ranks[k + 1]);
    for (double& v : blocks[k]) v = positive ? unif(rng) : normal(rng);
  }
  return TTTensor(grid, std::move(ranks), std::move(blocks));
}

/// Element (a, i, b) of block k read straight from storage.
inline double block_entry(const TTTensor& tt, std::size_t k, std::size_t a, std::size_t i, std::size_t b) {
  return tt.block(k)[a + tt.rank(k) * (i + tt.grid().size(k) * b)];
}

/// Brute-force contraction: explicit sum over all rank indices, first index fastest.
inline std::vector<double> brute_force_full(const TTTensor& tt) {
  const std::size_t d = tt.dimension();
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= tt.grid().size(k);
  std::vector<double> out(total);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    for (std::size_t k = 0; k < d; ++k) {
      idx[k] = rem % tt.grid().size(k);
      rem /= tt.grid().size(k);
    }
    // Recursive sum over alpha_1 .. alpha_{d-1}.
    std::function<double(std::size_t, std::size_t)> rec = [&](std::size_t k, std::size_t a) -> double {
      if (k == d) return 1.0;
      double s = 0.0;
      for (std::size_t b = 0; b < tt.rank(k + 1); ++b) s += block_entry(tt, k, a, idx[k], b) * rec(k + 1, b);
      return s;
    };
    out[lin] = rec(0, 0);
  }
  return out;
}

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace ttpdf::test
