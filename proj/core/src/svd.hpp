#pragma once

#include "ttpdf/tt_tensor.hpp"

#include <Eigen/SVD>

namespace ttpdf::detail {

struct ThinSvd {
  Matrix u;
  Vector s;
  Matrix v;
};

// BDCSVD occasionally returns NaNs on finite, rank-deficient input; redo those with Jacobi.
inline ThinSvd thin_svd(const Matrix& a, bool with_v) {
  const unsigned opts = Eigen::ComputeThinU | (with_v ? static_cast<unsigned>(Eigen::ComputeThinV) : 0u);
  Eigen::BDCSVD<Matrix> bdc(a, opts);
  ThinSvd out{bdc.matrixU(), bdc.singularValues(), with_v ? Matrix(bdc.matrixV()) : Matrix()};
  if (out.u.allFinite() && out.s.allFinite() && out.v.allFinite()) return out;
  Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner> jac(a, opts);
  return {jac.matrixU(), jac.singularValues(), with_v ? Matrix(jac.matrixV()) : Matrix()};
}

}  // namespace ttpdf::detail
