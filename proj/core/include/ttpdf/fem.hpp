#pragma once

#include "ttpdf/tt_tensor.hpp"

#include <Eigen/Sparse>

#include <array>
#include <span>
#include <vector>

namespace ttpdf {

/// Bilinear finite elements on the uniform m x m grid of (0,1)^2 for
/// -div(kappa grad u) = 0 with u = 1 at x1 = 0, u = 0 at x1 = 1 and
/// homogeneous Neumann conditions on x2 = 0, 1.
///
/// Node (i, j) sits at (i h, j h) and has index i + (m + 1) j. Cell (i, j) spans
/// [i h, (i+1) h] x [j h, (j+1) h] and has index i + m j; kappa is constant per cell.
class BilinearFem {
 public:
  explicit BilinearFem(std::size_t cells_per_side);

  std::size_t cells_per_side() const { return m_; }
  double h() const { return 1.0 / static_cast<double>(m_); }
  std::size_t node_count() const { return (m_ + 1) * (m_ + 1); }
  double node_x1(std::size_t node) const { return static_cast<double>(node % (m_ + 1)) * h(); }
  double node_x2(std::size_t node) const { return static_cast<double>(node / (m_ + 1)) * h(); }

  /// Nodal values of u_h. Sparse direct solve up to m = 128, preconditioned CG
  /// (relative residual 1e-10) beyond. Throws NumericError on solver failure.
  Vector solve(std::span<const double> kappa) const;

  /// Average flux through x1 = 1 in volume form: integral of kappa grad w . grad u
  /// with w = 1 - x1. Equals 1 for kappa = 1.
  double flux(const Vector& u, std::span<const double> kappa) const;
  /// Same flux from the outward normal derivative on the last column of cells.
  double boundary_flux(const Vector& u, std::span<const double> kappa) const;

  /// Mean of u_h over the axis-aligned square of the given side centred at (c1, c2),
  /// integrated exactly (the square is clipped to the domain).
  double square_average(const Vector& u, double c1, double c2, double side) const;

 private:
  std::size_t m_;
  Eigen::SparseMatrix<double> pattern_;
  // Per cell: positions of the 16 local stiffness entries in pattern_ values (-1: Dirichlet).
  std::vector<std::array<int, 16>> scatter_;
  std::vector<int> unknown_;  // node -> unknown index or -1
};

/// Cell midpoints of a uniform m x m grid, cell index i + m j: (x1, x2) pairs.
std::vector<std::array<double, 2>> cell_midpoints(std::size_t m);

}  // namespace ttpdf
