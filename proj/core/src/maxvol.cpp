#include "ttpdf/maxvol.hpp"

#include "ttpdf/errors.hpp"

#include <cmath>
#include <limits>

namespace ttpdf {

std::vector<std::size_t> maxvol(const Matrix& a, const MaxvolOptions& options) {
  const Eigen::Index m = a.rows(), r = a.cols();
  if (m < r) throw DomainError("maxvol needs at least as many rows as columns");
  if (r == 0) return {};
  if (!a.allFinite()) throw NumericError("maxvol input contains non-finite entries");

  // Initial rows from column-pivoted QR of the transpose.
  Eigen::ColPivHouseholderQR<Matrix> qr(a.transpose());
  const auto& rdiag = qr.matrixQR();
  double scale = std::abs(rdiag(0, 0));
  if (scale == 0.0 ||
      std::abs(rdiag(r - 1, r - 1)) <= scale * 1e3 * std::numeric_limits<double>::epsilon() *
                                           static_cast<double>(std::max(m, r)))
    throw NumericError("maxvol input is rank-deficient");
  std::vector<std::size_t> rows(static_cast<std::size_t>(r));
  for (Eigen::Index j = 0; j < r; ++j)
    rows[static_cast<std::size_t>(j)] =
        static_cast<std::size_t>(qr.colsPermutation().indices()(j));

  Matrix sub(r, r);
  for (Eigen::Index j = 0; j < r; ++j) sub.row(j) = a.row(static_cast<Eigen::Index>(rows[j]));
  // B = A * sub^{-1}, via sub^T B^T = A^T.
  Matrix b = sub.transpose().partialPivLu().solve(a.transpose()).transpose();

  for (std::size_t swap = 0; swap < options.max_swaps; ++swap) {
    Eigen::Index i = 0, j = 0;
    double big = b.cwiseAbs().maxCoeff(&i, &j);
    if (!(big > 1.0 + options.tolerance)) break;
    rows[static_cast<std::size_t>(j)] = static_cast<std::size_t>(i);
    Vector col = b.col(j);
    RowVector row = b.row(i);
    row(j) -= 1.0;
    b.noalias() -= col * row / col(i);
  }
  return rows;
}

}  // namespace ttpdf
