#pragma once

#include "ttpdf/estimators.hpp"
#include "ttpdf/target.hpp"

#include <random>

namespace ttpdf {

/// Adaptive random-walk Metropolis with one delayed-rejection stage.
struct AMConfig {
  /// Proposal covariance before adaptation; identity when empty.
  Matrix initial_covariance;
  /// Starting point; the box centre when empty.
  Vector initial_state;
  std::size_t adapt_start = 100;
  std::size_t adapt_interval = 1;
  /// Covariance scale; 2.38^2 / d when not positive.
  double scale = 0.0;
  /// Second-stage proposal covariance = shrink * first-stage covariance.
  double dr_shrink = 0.2;
  double burn_in_fraction = 0.25;
  double epsilon = 1e-8;
  bool adapt = true;
  bool delayed_rejection = true;
};

struct AMResult {
  /// Post burn-in chain with rejection rate, IACTs and QoI means.
  ChainResult chain;
  std::size_t evaluations = 0;
  /// QoIs along the post burn-in chain.
  Matrix qoi;
  /// Adapted first-stage proposal covariance at the end of the run.
  Matrix covariance;
};

/// Runs n steps (burn-in included); proposals outside the box are rejected
/// without evaluating the target.
AMResult am_run(const TargetDensity& target, const AMConfig& config, std::size_t n,
                std::mt19937_64& rng);

}  // namespace ttpdf
