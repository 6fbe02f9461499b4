#include "ttpdf/fem.hpp"

#include "ttpdf/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace ttpdf {

namespace {

// Local stiffness for unit kappa, nodes counter-clockwise from the lower-left corner.
constexpr double kLocal[4][4] = {{4, -1, -2, -1}, {-1, 4, -1, -2}, {-2, -1, 4, -1}, {-1, -2, -1, 4}};

}  // namespace

std::vector<std::array<double, 2>> cell_midpoints(std::size_t m) {
  std::vector<std::array<double, 2>> c(m * m);
  double h = 1.0 / static_cast<double>(m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i)
      c[i + m * j] = {(static_cast<double>(i) + 0.5) * h, (static_cast<double>(j) + 0.5) * h};
  return c;
}

BilinearFem::BilinearFem(std::size_t m) : m_(m) {
  if (m < 1) throw DomainError("FEM grid needs at least one cell per side");
  const std::size_t nx = m + 1;
  unknown_.assign(nx * nx, -1);
  int count = 0;
  for (std::size_t j = 0; j < nx; ++j)
    for (std::size_t i = 1; i < m; ++i) unknown_[i + nx * j] = count++;

  std::vector<Eigen::Triplet<double>> triplets;
  auto corners = [&](std::size_t i, std::size_t j) {
    return std::array<std::size_t, 4>{i + nx * j, i + 1 + nx * j, i + 1 + nx * (j + 1), i + nx * (j + 1)};
  };
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      auto c = corners(i, j);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          int ua = unknown_[c[a]], ub = unknown_[c[b]];
          if (ua >= 0 && ub >= 0) triplets.emplace_back(ua, ub, 1.0);
        }
    }
  pattern_.resize(count, count);
  pattern_.setFromTriplets(triplets.begin(), triplets.end());
  pattern_.makeCompressed();

  scatter_.resize(m * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      auto c = corners(i, j);
      auto& s = scatter_[i + m * j];
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          int ua = unknown_[c[a]], ub = unknown_[c[b]];
          s[a * 4 + b] = -1;
          if (ua < 0 || ub < 0) continue;
          // Column-major compressed storage: search row ua in column ub.
          auto begin = pattern_.outerIndexPtr()[ub], end = pattern_.outerIndexPtr()[ub + 1];
          auto* rows = pattern_.innerIndexPtr();
          auto* it = std::lower_bound(rows + begin, rows + end, ua);
          s[a * 4 + b] = static_cast<int>(it - rows);
        }
    }
}

Vector BilinearFem::solve(std::span<const double> kappa) const {
  const std::size_t m = m_, nx = m + 1;
  if (kappa.size() != m * m) throw DomainError("kappa must have one value per cell");
  Eigen::SparseMatrix<double> a = pattern_;
  std::fill(a.valuePtr(), a.valuePtr() + a.nonZeros(), 0.0);
  Vector rhs = Vector::Zero(a.rows());
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      double k = kappa[i + m * j];
      if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("kappa must be positive and finite");
      std::array<std::size_t, 4> c{i + nx * j, i + 1 + nx * j, i + 1 + nx * (j + 1), i + nx * (j + 1)};
      const auto& s = scatter_[i + m * j];
      for (int p = 0; p < 4; ++p) {
        int up = unknown_[c[p]];
        if (up < 0) continue;
        for (int q = 0; q < 4; ++q) {
          double v = k * kLocal[p][q] / 6.0;
          int uq = unknown_[c[q]];
          if (uq >= 0)
            a.valuePtr()[s[p * 4 + q]] += v;
          else if (c[q] % nx == 0)
            rhs(up) -= v;  // u = 1 on x1 = 0
        }
      }
    }

  Vector x;
  if (m <= 128) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
    if (solver.info() != Eigen::Success) throw NumericError("FEM factorization failed");
    x = solver.solve(rhs);
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        solver;
    solver.setTolerance(1e-10);
    solver.setMaxIterations(20 * a.rows());
    solver.compute(a);
    x = solver.solve(rhs);
    if (solver.info() != Eigen::Success)
      throw NumericError("FEM iterative solve failed, relative residual " + std::to_string(solver.error()));
  }
  double res = (a * x - rhs).norm();
  if (!std::isfinite(res) || res > 1e-10 * std::max(1.0, rhs.norm()) * 10.0)
    throw NumericError("FEM solve residual " + std::to_string(res) + " too large");

  Vector u(static_cast<Eigen::Index>(nx * nx));
  for (std::size_t node = 0; node < nx * nx; ++node) {
    int k = unknown_[node];
    if (k >= 0)
      u(static_cast<Eigen::Index>(node)) = x(k);
    else
      u(static_cast<Eigen::Index>(node)) = node % nx == 0 ? 1.0 : 0.0;
  }
  return u;
}

double BilinearFem::flux(const Vector& u, std::span<const double> kappa) const {
  const std::size_t m = m_, nx = m + 1;
  double f = 0.0;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      std::array<std::size_t, 4> c{i + nx * j, i + 1 + nx * j, i + 1 + nx * (j + 1), i + nx * (j + 1)};
      double w[4], uu[4];
      for (int p = 0; p < 4; ++p) {
        w[p] = 1.0 - node_x1(c[p]);
        uu[p] = u(static_cast<Eigen::Index>(c[p]));
      }
      double e = 0.0;
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) e += w[p] * kLocal[p][q] * uu[q];
      f += kappa[i + m * j] * e / 6.0;
    }
  return f;
}

double BilinearFem::boundary_flux(const Vector& u, std::span<const double> kappa) const {
  const std::size_t m = m_, nx = m + 1, i = m - 1;
  double f = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    auto at = [&](std::size_t ii, std::size_t jj) { return u(static_cast<Eigen::Index>(ii + nx * jj)); };
    double du = (at(i + 1, j) - at(i, j)) + (at(i + 1, j + 1) - at(i, j + 1));
    f -= kappa[i + m * j] * 0.5 * du;
  }
  return f;
}

double BilinearFem::square_average(const Vector& u, double c1, double c2, double side) const {
  const std::size_t m = m_, nx = m + 1;
  const double hh = h();
  double a1 = std::max(0.0, c1 - side / 2), b1 = std::min(1.0, c1 + side / 2);
  double a2 = std::max(0.0, c2 - side / 2), b2 = std::min(1.0, c2 + side / 2);
  if (!(b1 > a1 && b2 > a2)) throw DomainError("observation square misses the domain");
  // Two-point Gauss is exact for the bilinear integrand on each clipped cell.
  const double g = 0.5 / std::sqrt(3.0);
  double total = 0.0;
  auto i0 = static_cast<std::size_t>(std::floor(a1 / hh)), i1 = std::min(m, static_cast<std::size_t>(std::ceil(b1 / hh)));
  auto j0 = static_cast<std::size_t>(std::floor(a2 / hh)), j1 = std::min(m, static_cast<std::size_t>(std::ceil(b2 / hh)));
  for (std::size_t j = j0; j < j1; ++j)
    for (std::size_t i = i0; i < i1; ++i) {
      double x0 = std::max(a1, static_cast<double>(i) * hh), x1 = std::min(b1, static_cast<double>(i + 1) * hh);
      double y0 = std::max(a2, static_cast<double>(j) * hh), y1 = std::min(b2, static_cast<double>(j + 1) * hh);
      if (!(x1 > x0 && y1 > y0)) continue;
      double u00 = u(static_cast<Eigen::Index>(i + nx * j)), u10 = u(static_cast<Eigen::Index>(i + 1 + nx * j));
      double u11 = u(static_cast<Eigen::Index>(i + 1 + nx * (j + 1))), u01 = u(static_cast<Eigen::Index>(i + nx * (j + 1)));
      double s = 0.0;
      for (double gx : {0.5 - g, 0.5 + g})
        for (double gy : {0.5 - g, 0.5 + g}) {
          double s1 = (x0 + gx * (x1 - x0)) / hh - static_cast<double>(i);
          double s2 = (y0 + gy * (y1 - y0)) / hh - static_cast<double>(j);
          s += (1 - s1) * (1 - s2) * u00 + s1 * (1 - s2) * u10 + s1 * s2 * u11 + (1 - s1) * s2 * u01;
        }
      total += 0.25 * s * (x1 - x0) * (y1 - y0);
    }
  return total / ((b1 - a1) * (b2 - a2));
}

}  // namespace ttpdf
