#pragma once

#include <span>

namespace ttpdf {

/// Integrated autocorrelation time 1 + 2 sum_t rho(t), windowed by Geyer's initial
/// positive sequence over FFT autocovariances. A constant series gives 1 with a warning.
/// Throws DomainError for fewer than 100 values.
double iact(std::span<const double> series);

}  // namespace ttpdf
