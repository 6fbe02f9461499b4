#pragma once

#include "ttpdf/tt_tensor.hpp"

#include <cstddef>
#include <vector>

namespace ttpdf {

struct MaxvolOptions {
  double tolerance = 5e-2;
  std::size_t max_swaps = 100;
};

/// Rows of a tall M x r matrix spanning a quasi-dominant r x r submatrix:
/// every entry of A * A(I,:)^{-1} is bounded by 1 + tolerance in magnitude,
/// unless the swap cap is reached first. Throws NumericError when A is
/// rank-deficient and DomainError when M < r.
std::vector<std::size_t> maxvol(const Matrix& a, const MaxvolOptions& options = {});

}  // namespace ttpdf
