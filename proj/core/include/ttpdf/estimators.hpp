#pragma once

#include "ttpdf/tt_cd.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ttpdf {

struct ChainResult {
  /// Chain state at every step (N x d).
  Matrix states;
  /// Batch row of the chain state at every step (independence sampler only).
  std::vector<std::size_t> state_index;
  std::vector<std::uint8_t> accepted;
  std::size_t rejections = 0;
  double rejection_rate = 0.0;
  /// IACT per coordinate, then per QoI; empty when the chain is shorter than 100.
  std::vector<double> tau;
  /// Chain averages of the QoIs (empty without QoIs).
  Vector qoi_mean;

  double max_tau() const;
};

/// Independence Metropolis-Hastings over the batch in seed order, proposals from
/// the surrogate. The first sample is accepted unconditionally. Requires target
/// densities; throws DomainError for lattice-seeded batches.
ChainResult mh_correct(const SampleBatch& batch, std::mt19937_64& rng);

struct WeightedEstimate {
  /// Ratio estimates of E_pi g, one per column of g.
  Vector estimate;
  /// log of the mean importance weight (pi unnormalized, pistar normalized).
  double log_z = 0.0;
  /// Largest weight divided by the mean weight.
  double max_weight = 0.0;
  /// mean |w / Z - 1| with the weights normalized by their mean.
  double el1 = 0.0;
};

/// Self-normalized importance estimator; g is N x m. Throws NumericError when
/// every weight vanishes.
WeightedEstimate importance_estimate(const SampleBatch& batch, const Matrix& g);

/// Importance weights w / mean(w) of a batch.
Vector normalized_weights(const SampleBatch& batch);

struct TwoLevelEstimate {
  double estimate = 0.0;
  double coarse = 0.0;
  double correction = 0.0;
  /// Sample variance of the correction summands.
  double correction_variance = 0.0;
};

/// coarse_gt: g~ at N0 surrogate samples. g, gt: g and g~ at the N1 batch rows
/// that fed the chain. Correction summand l is g(chain state l) - g~(proposal l).
TwoLevelEstimate two_level_mh(std::span<const double> coarse_gt, std::span<const double> g,
                              std::span<const double> gt, const ChainResult& chain);

/// Correction summand l is g(x_l) w(x_l) / Z - g~(x_l) with Z the mean weight.
TwoLevelEstimate two_level_iw(std::span<const double> coarse_gt, std::span<const double> g,
                              std::span<const double> gt, std::span<const double> log_weights);

struct LemmaDiagnostics {
  double el1 = 0.0;
  double max_weight = 0.0;
  double rejection_rate = 0.0;
  /// 1 - 1/max_weight and the IACT bound (1 + a)/(1 - a).
  double a = 0.0;
  double tau_bound = 1.0;
};

LemmaDiagnostics lemma_diagnostics(const SampleBatch& batch, const ChainResult& chain);

struct EstimateRecord {
  std::string method;  // TT-MH, TT-rIW, TT-qIW, TT-MH-2L, TT-qIW-2L, AM
  std::size_t n = 0;
  std::vector<std::string> names;
  std::vector<double> estimate;
  std::vector<double> standard_error;  // empty or NaN entries when unavailable
  std::optional<double> tau;
  std::optional<double> rejection_rate;
  std::optional<double> el1;
};

/// One-line JSON object; NaN and absent values become null.
std::string to_json_line(const EstimateRecord& record);

}  // namespace ttpdf
