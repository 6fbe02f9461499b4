#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace ttpdf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using MultiIndex = std::vector<std::size_t>;

/// Tensor-product grid of strictly increasing univariate node arrays.
///
/// The box of dimension k is [nodes(k).front(), nodes(k).back()]. Every
/// dimension carries at least two nodes so that a piecewise-linear CDF
/// exists along each coordinate.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<std::vector<double>> nodes);

  static Grid uniform(std::span<const double> lower, std::span<const double> upper,
                      std::span<const std::size_t> sizes);
  static Grid uniform(std::size_t dimension, double lower, double upper, std::size_t size);

  std::size_t dimension() const { return nodes_.size(); }
  std::size_t size(std::size_t k) const { return nodes_[k].size(); }
  const std::vector<double>& nodes(std::size_t k) const { return nodes_[k]; }
  double lower(std::size_t k) const { return nodes_[k].front(); }
  double upper(std::size_t k) const { return nodes_[k].back(); }

  /// Trapezoidal weights of dimension k; integrate the piecewise-linear interpolant exactly.
  const std::vector<double>& weights(std::size_t k) const { return weights_[k]; }

  /// Cell containing x along dimension k and the local coordinate t in [0, 1].
  /// The last cell is closed on the right. Throws DomainError outside the box.
  std::pair<std::size_t, double> locate(std::size_t k, double x) const;

  bool contains(std::span<const double> x) const;

  /// Node coordinates of a multi-index.
  std::vector<double> point(std::span<const std::size_t> index) const;

  friend bool operator==(const Grid& a, const Grid& b) { return a.nodes_ == b.nodes_; }

 private:
  std::vector<std::vector<double>> nodes_;
  std::vector<std::vector<double>> weights_;
};

/// Interpolated tensor-train decomposition on a Grid.
///
/// Block k is an r_k x n_k x r_{k+1} array stored contiguously with element
/// (a, i, b) at offset a + r_k * (i + n_k * b). With this layout the left
/// unfolding (r_k n_k) x r_{k+1} and the right unfolding r_k x (n_k r_{k+1})
/// are both plain column-major views of the same buffer.
///
/// Instances are immutable after construction.
class TTTensor {
 public:
  using ConstMap = Eigen::Map<const Matrix>;
  using SliceMap = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;

  TTTensor() = default;
  TTTensor(Grid grid, std::vector<std::size_t> ranks, std::vector<std::vector<double>> blocks);

  /// Rank-1 tensor from per-dimension nodal vectors.
  static TTTensor rank_one(Grid grid, const std::vector<std::vector<double>>& factors);
  static TTTensor constant(Grid grid, double value);

  const Grid& grid() const { return grid_; }
  std::size_t dimension() const { return grid_.dimension(); }
  /// Interface ranks r_0 .. r_d with r_0 = r_d = 1.
  const std::vector<std::size_t>& ranks() const { return ranks_; }
  std::size_t rank(std::size_t k) const { return ranks_[k]; }
  std::size_t max_rank() const;
  std::size_t storage_size() const;

  std::span<const double> block(std::size_t k) const { return blocks_[k]; }
  ConstMap left_unfolding(std::size_t k) const;
  ConstMap right_unfolding(std::size_t k) const;
  /// r_k x r_{k+1} slice of block k at node i.
  SliceMap slice(std::size_t k, std::size_t i) const;
  /// r_k x r_{k+1} slice of block k linearly interpolated at coordinate x.
  Matrix interpolated_slice(std::size_t k, double x) const;
  /// Trapezoidal integral of block k over its coordinate, an r_k x r_{k+1} matrix.
  Matrix block_integral(std::size_t k) const;

 private:
  Grid grid_;
  std::vector<std::size_t> ranks_;
  std::vector<std::vector<double>> blocks_;
};

/// Value at grid multi-index (0-based).
double eval_index(const TTTensor& tt, std::span<const std::size_t> index);
/// Multilinear interpolant at a point of the box.
double eval_point(const TTTensor& tt, std::span<const double> x);
/// Integral of the multilinear interpolant over the box.
double integrate(const TTTensor& tt);

/// Right partial integrals: entry k (k = 0..d) has length r_k, entry d is [1] and
/// entry k is block_integral(k) * entry k+1. Entry 0 holds the total integral.
std::vector<Vector> partial_integrals(const TTTensor& tt);

/// Sum over all nodal values of a*b.
double inner_product(const TTTensor& a, const TTTensor& b);
/// Frobenius norm of nodal values, computed by orthogonalization.
double frobenius_norm(const TTTensor& tt);
/// Frobenius norm of the nodal difference a - b. Grids must match.
double frobenius_distance(const TTTensor& a, const TTTensor& b);

TTTensor scale(const TTTensor& tt, double alpha);
/// alpha*a + beta*b by block concatenation (ranks add).
TTTensor add(const TTTensor& a, const TTTensor& b, double alpha = 1.0, double beta = 1.0);
/// Truncated-SVD recompression with relative Frobenius accuracy delta.
TTTensor round(const TTTensor& tt, double delta);

/// Dense nodal values with the first index running fastest. Only for small tensors.
std::vector<double> full(const TTTensor& tt);

}  // namespace ttpdf
