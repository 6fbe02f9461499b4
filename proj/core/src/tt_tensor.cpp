#include "ttpdf/tt_tensor.hpp"

#include "svd.hpp"
#include "ttpdf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ttpdf {

Grid::Grid(std::vector<std::vector<double>> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw DomainError("grid must have at least one dimension");
  weights_.resize(nodes_.size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto& x = nodes_[k];
    if (x.size() < 2)
      throw DomainError("grid dimension " + std::to_string(k) + " needs at least two nodes");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i])) throw DomainError("non-finite grid node");
      if (i > 0 && !(x[i] > x[i - 1]))
        throw DomainError("grid nodes of dimension " + std::to_string(k) +
                          " are not strictly increasing");
    }
    auto& w = weights_[k];
    w.assign(x.size(), 0.0);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      double h = x[i + 1] - x[i];
      w[i] += 0.5 * h;
      w[i + 1] += 0.5 * h;
    }
  }
}

Grid Grid::uniform(std::span<const double> lower, std::span<const double> upper,
                   std::span<const std::size_t> sizes) {
  if (lower.size() != upper.size() || lower.size() != sizes.size())
    throw DomainError("grid bounds and sizes differ in length");
  std::vector<std::vector<double>> nodes(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 2) throw DomainError("grid size must be at least 2");
    if (!(upper[k] > lower[k])) throw DomainError("grid upper bound must exceed lower bound");
    nodes[k].resize(sizes[k]);
    double h = (upper[k] - lower[k]) / static_cast<double>(sizes[k] - 1);
    for (std::size_t i = 0; i < sizes[k]; ++i) nodes[k][i] = lower[k] + h * static_cast<double>(i);
    nodes[k].back() = upper[k];
  }
  return Grid(std::move(nodes));
}

Grid Grid::uniform(std::size_t dimension, double lower, double upper, std::size_t size) {
  std::vector<double> lo(dimension, lower), hi(dimension, upper);
  std::vector<std::size_t> n(dimension, size);
  return uniform(lo, hi, n);
}

std::pair<std::size_t, double> Grid::locate(std::size_t k, double x) const {
  const auto& nodes = nodes_[k];
  if (!(x >= nodes.front() && x <= nodes.back()))
    throw DomainError("coordinate " + std::to_string(x) + " outside box in dimension " +
                      std::to_string(k));
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  std::size_t i = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
  if (i >= nodes.size() - 1) i = nodes.size() - 2;
  double t = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
  return {i, std::clamp(t, 0.0, 1.0)};
}

bool Grid::contains(std::span<const double> x) const {
  if (x.size() != dimension()) return false;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (!(x[k] >= lower(k) && x[k] <= upper(k))) return false;
  return true;
}

std::vector<double> Grid::point(std::span<const std::size_t> index) const {
  if (index.size() != dimension()) throw DomainError("multi-index has wrong length");
  std::vector<double> x(index.size());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= size(k)) throw DomainError("multi-index out of range");
    x[k] = nodes_[k][index[k]];
  }
  return x;
}

TTTensor::TTTensor(Grid grid, std::vector<std::size_t> ranks,
                   std::vector<std::vector<double>> blocks)
    : grid_(std::move(grid)), ranks_(std::move(ranks)), blocks_(std::move(blocks)) {
  std::size_t d = grid_.dimension();
  if (ranks_.size() != d + 1) throw DomainError("rank vector must have length d + 1");
  if (ranks_.front() != 1 || ranks_.back() != 1) throw DomainError("boundary ranks must be 1");
  if (blocks_.size() != d) throw DomainError("block count must equal dimension");
  for (std::size_t k = 0; k < d; ++k) {
    if (ranks_[k] == 0) throw DomainError("ranks must be positive");
    if (blocks_[k].size() != ranks_[k] * grid_.size(k) * ranks_[k + 1])
      throw DomainError("block " + std::to_string(k) + " has wrong size");
  }
}

TTTensor TTTensor::rank_one(Grid grid, const std::vector<std::vector<double>>& factors) {
  std::size_t d = grid.dimension();
  if (factors.size() != d) throw DomainError("factor count must equal dimension");
  std::vector<std::vector<double>> blocks(d);
  for (std::size_t k = 0; k < d; ++k) {
    if (factors[k].size() != grid.size(k)) throw DomainError("factor length mismatch");
    blocks[k] = factors[k];
  }
  return TTTensor(std::move(grid), std::vector<std::size_t>(d + 1, 1), std::move(blocks));
}

TTTensor TTTensor::constant(Grid grid, double value) {
  std::vector<std::vector<double>> f(grid.dimension());
  for (std::size_t k = 0; k < f.size(); ++k) f[k].assign(grid.size(k), k == 0 ? value : 1.0);
  return rank_one(std::move(grid), f);
}

std::size_t TTTensor::max_rank() const { return *std::max_element(ranks_.begin(), ranks_.end()); }

std::size_t TTTensor::storage_size() const {
  std::size_t s = 0;
  for (const auto& b : blocks_) s += b.size();
  return s;
}

TTTensor::ConstMap TTTensor::left_unfolding(std::size_t k) const {
  return ConstMap(blocks_[k].data(), static_cast<Eigen::Index>(ranks_[k] * grid_.size(k)),
                  static_cast<Eigen::Index>(ranks_[k + 1]));
}

TTTensor::ConstMap TTTensor::right_unfolding(std::size_t k) const {
  return ConstMap(blocks_[k].data(), static_cast<Eigen::Index>(ranks_[k]),
                  static_cast<Eigen::Index>(grid_.size(k) * ranks_[k + 1]));
}

TTTensor::SliceMap TTTensor::slice(std::size_t k, std::size_t i) const {
  auto r = static_cast<Eigen::Index>(ranks_[k]);
  auto n = static_cast<Eigen::Index>(grid_.size(k));
  return SliceMap(blocks_[k].data() + r * static_cast<Eigen::Index>(i), r,
                  static_cast<Eigen::Index>(ranks_[k + 1]), Eigen::OuterStride<>(r * n));
}

Matrix TTTensor::interpolated_slice(std::size_t k, double x) const {
  auto [i, t] = grid_.locate(k, x);
  if (t == 0.0) return slice(k, i);
  if (t == 1.0) return slice(k, i + 1);
  return (1.0 - t) * slice(k, i) + t * slice(k, i + 1);
}

Matrix TTTensor::block_integral(std::size_t k) const {
  const auto& w = grid_.weights(k);
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(ranks_[k]),
                          static_cast<Eigen::Index>(ranks_[k + 1]));
  for (std::size_t i = 0; i < w.size(); ++i) m += w[i] * slice(k, i);
  return m;
}

double eval_index(const TTTensor& tt, std::span<const std::size_t> index) {
  std::size_t d = tt.dimension();
  if (index.size() != d) throw DomainError("multi-index has wrong length");
  RowVector phi = RowVector::Ones(1);
  for (std::size_t k = 0; k < d; ++k) {
    if (index[k] >= tt.grid().size(k))
      throw DomainError("index " + std::to_string(index[k]) + " out of range in dimension " +
                        std::to_string(k));
    phi = phi * tt.slice(k, index[k]);
  }
  return phi(0);
}

double eval_point(const TTTensor& tt, std::span<const double> x) {
  std::size_t d = tt.dimension();
  if (x.size() != d) throw DomainError("point has wrong dimension");
  RowVector phi = RowVector::Ones(1);
  for (std::size_t k = 0; k < d; ++k) phi = phi * tt.interpolated_slice(k, x[k]);
  return phi(0);
}

std::vector<Vector> partial_integrals(const TTTensor& tt) {
  std::size_t d = tt.dimension();
  std::vector<Vector> p(d + 1);
  p[d] = Vector::Ones(1);
  for (std::size_t k = d; k-- > 0;) p[k] = tt.block_integral(k) * p[k + 1];
  return p;
}

double integrate(const TTTensor& tt) { return partial_integrals(tt)[0](0); }

double inner_product(const TTTensor& a, const TTTensor& b) {
  if (!(a.grid() == b.grid())) throw DomainError("inner product of tensors on different grids");
  Matrix g = Matrix::Ones(1, 1);
  for (std::size_t k = 0; k < a.dimension(); ++k) {
    Matrix next = Matrix::Zero(static_cast<Eigen::Index>(a.rank(k + 1)),
                               static_cast<Eigen::Index>(b.rank(k + 1)));
    for (std::size_t i = 0; i < a.grid().size(k); ++i)
      next.noalias() += a.slice(k, i).transpose() * g * b.slice(k, i);
    g = std::move(next);
  }
  return g(0, 0);
}

namespace {

// Blocks as mutable copies, used by the orthogonalization routines.
struct Blocks {
  std::vector<std::size_t> n;
  std::vector<std::size_t> r;
  std::vector<std::vector<double>> data;

  explicit Blocks(const TTTensor& tt) : r(tt.ranks()) {
    for (std::size_t k = 0; k < tt.dimension(); ++k) {
      n.push_back(tt.grid().size(k));
      auto b = tt.block(k);
      data.emplace_back(b.begin(), b.end());
    }
  }
  Eigen::Map<Matrix> left(std::size_t k) {
    return {data[k].data(), static_cast<Eigen::Index>(r[k] * n[k]),
            static_cast<Eigen::Index>(r[k + 1])};
  }
  Eigen::Map<Matrix> right(std::size_t k) {
    return {data[k].data(), static_cast<Eigen::Index>(r[k]),
            static_cast<Eigen::Index>(n[k] * r[k + 1])};
  }
};

// Makes blocks 0..d-2 left-orthogonal; the norm ends up in the last block.
void orthogonalize_left(Blocks& b) {
  std::size_t d = b.n.size();
  for (std::size_t k = 0; k + 1 < d; ++k) {
    Matrix a = b.left(k);
    Eigen::HouseholderQR<Matrix> qr(a);
    auto m = std::min<Eigen::Index>(a.rows(), a.cols());
    Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), m);
    Matrix rr = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    Matrix next = rr * b.right(k + 1);
    b.r[k + 1] = static_cast<std::size_t>(m);
    b.data[k].assign(q.data(), q.data() + q.size());
    b.data[k + 1].assign(next.data(), next.data() + next.size());
  }
}

// Makes blocks 1..d-1 right-orthogonal.
void orthogonalize_right(Blocks& b) {
  std::size_t d = b.n.size();
  for (std::size_t k = d - 1; k > 0; --k) {
    Matrix at = b.right(k).transpose();
    Eigen::HouseholderQR<Matrix> qr(at);
    auto m = std::min<Eigen::Index>(at.rows(), at.cols());
    Matrix q = qr.householderQ() * Matrix::Identity(at.rows(), m);
    Matrix rr = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    Matrix qt = q.transpose();
    Matrix prev = b.left(k - 1) * rr.transpose();
    b.r[k] = static_cast<std::size_t>(m);
    b.data[k].assign(qt.data(), qt.data() + qt.size());
    b.data[k - 1].assign(prev.data(), prev.data() + prev.size());
  }
}

}  // namespace

double frobenius_norm(const TTTensor& tt) {
  Blocks b(tt);
  orthogonalize_left(b);
  return b.left(b.n.size() - 1).norm();
}

TTTensor scale(const TTTensor& tt, double alpha) {
  std::vector<std::vector<double>> blocks;
  for (std::size_t k = 0; k < tt.dimension(); ++k) {
    auto b = tt.block(k);
    blocks.emplace_back(b.begin(), b.end());
  }
  for (double& v : blocks.back()) v *= alpha;
  return TTTensor(tt.grid(), tt.ranks(), std::move(blocks));
}

TTTensor add(const TTTensor& a, const TTTensor& b, double alpha, double beta) {
  if (!(a.grid() == b.grid())) throw DomainError("sum of tensors on different grids");
  std::size_t d = a.dimension();
  if (d == 1) {
    std::vector<double> v(a.grid().size(0));
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = alpha * a.block(0)[i] + beta * b.block(0)[i];
    return TTTensor(a.grid(), {1, 1}, {v});
  }
  std::vector<std::size_t> r(d + 1, 1);
  for (std::size_t k = 1; k < d; ++k) r[k] = a.rank(k) + b.rank(k);
  std::vector<std::vector<double>> blocks(d);
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t n = a.grid().size(k);
    blocks[k].assign(r[k] * n * r[k + 1], 0.0);
    std::size_t ra = a.rank(k), ra1 = a.rank(k + 1), rb = b.rank(k), rb1 = b.rank(k + 1);
    std::size_t row_off = k == 0 ? 0 : ra;
    std::size_t col_off = k + 1 == d ? 0 : ra1;
    double sa = k + 1 == d ? alpha : 1.0;
    double sb = k + 1 == d ? beta : 1.0;
    auto at = [&](std::size_t x, std::size_t i, std::size_t y) -> double& {
      return blocks[k][x + r[k] * (i + n * y)];
    };
    for (std::size_t y = 0; y < ra1; ++y)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t x = 0; x < ra; ++x) at(x, i, y) = sa * a.block(k)[x + ra * (i + n * y)];
    for (std::size_t y = 0; y < rb1; ++y)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t x = 0; x < rb; ++x)
          at(row_off + x, i, col_off + y) = sb * b.block(k)[x + rb * (i + n * y)];
  }
  return TTTensor(a.grid(), std::move(r), std::move(blocks));
}

double frobenius_distance(const TTTensor& a, const TTTensor& b) {
  return frobenius_norm(add(a, b, 1.0, -1.0));
}

TTTensor round(const TTTensor& tt, double delta) {
  if (!(delta >= 0.0)) throw DomainError("rounding accuracy must be non-negative");
  Blocks b(tt);
  std::size_t d = b.n.size();
  if (d == 1) return tt;
  orthogonalize_right(b);
  double norm = b.left(0).norm();
  double threshold = delta * norm / std::sqrt(static_cast<double>(d - 1));
  for (std::size_t k = 0; k + 1 < d; ++k) {
    Matrix a = b.left(k);
    auto svd = detail::thin_svd(a, true);
    const Vector& s = svd.s;
    Eigen::Index keep = s.size();
    double tail = 0.0;
    while (keep > 1) {
      double t = tail + s(keep - 1) * s(keep - 1);
      if (std::sqrt(t) > threshold) break;
      tail = t;
      --keep;
    }
    Matrix u = svd.u.leftCols(keep);
    Matrix sv = s.head(keep).asDiagonal() * svd.v.leftCols(keep).transpose();
    Matrix next = sv * b.right(k + 1);
    b.r[k + 1] = static_cast<std::size_t>(keep);
    b.data[k].assign(u.data(), u.data() + u.size());
    b.data[k + 1].assign(next.data(), next.data() + next.size());
  }
  return TTTensor(tt.grid(), b.r, std::move(b.data));
}

std::vector<double> full(const TTTensor& tt) {
  std::size_t d = tt.dimension();
  // Left-to-right contraction; rows of the running matrix are multi-indices, first fastest.
  Matrix m = Matrix::Ones(1, 1);
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t n = tt.grid().size(k);
    Matrix next(m.rows() * static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(tt.rank(k + 1)));
    for (std::size_t i = 0; i < n; ++i)
      next.middleRows(static_cast<Eigen::Index>(i) * m.rows(), m.rows()) = m * tt.slice(k, i);
    m = std::move(next);
  }
  return std::vector<double>(m.data(), m.data() + m.size());
}

}  // namespace ttpdf
