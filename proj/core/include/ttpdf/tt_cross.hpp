#pragma once

#include "ttpdf/maxvol.hpp"
#include "ttpdf/target.hpp"
#include "ttpdf/tt_tensor.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

namespace ttpdf {

/// Values of a grid-indexed function at a batch of multi-indices.
/// indices holds values.size() rows of d entries each, row-major, 0-based.
using GridFunction =
    std::function<void(std::span<const std::size_t> indices, std::span<double> values)>;

/// Wraps a pointwise function of grid coordinates; evaluates in parallel and
/// reports the multi-index of any non-finite value or thrown exception.
GridFunction point_function_on_grid(const Grid& grid,
                                    std::function<double(std::span<const double>)> f);
/// exp(log pi(x) - log_offset) on the grid nodes of a target.
GridFunction density_on_grid(const TargetDensity& target, const Grid& grid, double log_offset);
/// Coordinate ascent of log pi over grid nodes starting from `index`, which is
/// updated in place. Returns the best log density found.
double grid_mode_search(const TargetDensity& target, const Grid& grid, MultiIndex& index,
                        std::size_t passes = 2);

/// Ordered set of equal-length index tuples stored row-major.
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(std::size_t width) : width_(width) {}

  std::size_t width() const { return width_; }
  std::size_t size() const { return count_; }
  std::span<const std::size_t> tuple(std::size_t i) const {
    return {data_.data() + i * width_, width_};
  }
  void push_back(std::span<const std::size_t> t);
  bool contains(std::span<const std::size_t> t) const;

 private:
  std::size_t width_ = 0;
  std::size_t count_ = 0;
  std::vector<std::size_t> data_;
};

/// left[k] indexes dimensions 0..k-1, right[k] indexes dimensions k+1..d-1.
struct CrossIndexSets {
  std::vector<IndexSet> left;
  std::vector<IndexSet> right;
};

enum class RankMode { grow, fixed };

struct CrossConfig {
  /// Stopping tolerance on the relative change between sweeps.
  double delta = 1e-5;
  /// SVD truncation tolerance; 0 uses delta.
  double truncation = 0.0;
  /// Enrichment tuples added per interface and sweep (grow mode only).
  std::size_t rho = 2;
  std::size_t iter_max = 20;
  /// Initial interface rank, or per-interface ranks r_0..r_d when given.
  std::size_t initial_rank = 2;
  std::vector<std::size_t> initial_ranks;
  /// Grid multi-indices whose suffixes seed the initial right sets.
  std::vector<MultiIndex> initial_points;
  std::size_t max_rank = 0;         // 0: unbounded
  std::size_t max_evaluations = 0;  // 0: unbounded
  RankMode mode = RankMode::grow;
  std::uint64_t seed = 1;
  MaxvolOptions maxvol;
};

struct CrossSweep {
  std::size_t iteration = 0;
  bool forward = true;
  std::size_t max_rank = 0;
  std::size_t evaluations = 0;
  /// Relative Frobenius change against the previous iteration; NaN when not computed.
  double relative_change = 0.0;
};

struct CrossResult {
  TTTensor tt;
  std::vector<CrossSweep> sweeps;
  CrossIndexSets index_sets;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Unfolding with entry (a + r*i, b) = f(left[a], i, right[b]); one call to f.
Matrix evaluate_unfolding(const GridFunction& f, const Grid& grid, const IndexSet& left,
                          std::size_t k, const IndexSet& right);

/// Appends up to rho distinct uniformly drawn tuples over the given dimension sizes.
/// When fewer than rho unused tuples exist, appends all of them and warns.
IndexSet enrich_indices(const IndexSet& set, std::span<const std::size_t> sizes, std::size_t rho,
                        std::mt19937_64& rng);

CrossResult cross_approximate(const GridFunction& f, const Grid& grid, const CrossConfig& config);

/// Grid multi-indices nearest to the reference rows, followed by the result of a
/// grid mode search started from the most probable of them. log_shift is set to
/// the largest log density seen. Throws NumericError if none is finite.
std::vector<MultiIndex> seed_points(const TargetDensity& target, const Grid& grid,
                                    const Matrix& reference, double& log_shift);

/// Cross approximation of exp(log pi - log_shift). When a value would exceed
/// exp(overflow_margin), the run is restarted with log_shift raised to the
/// largest log density seen. log_shift is updated in place; evaluations of
/// abandoned runs are included in the count.
CrossResult cross_approximate_density(const TargetDensity& target, const Grid& grid,
                                      const CrossConfig& config, double& log_shift,
                                      double overflow_margin = 150.0);

void write_cross_csv(std::ostream& out, const CrossResult& result);

}  // namespace ttpdf
