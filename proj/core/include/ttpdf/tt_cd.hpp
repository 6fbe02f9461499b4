#pragma once

#include "ttpdf/target.hpp"
#include "ttpdf/tt_tensor.hpp"

#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ttpdf {

enum class SeedKind { iid, lattice };

/// Surrogate samples with their seeds and densities, one row per sample.
/// log_pistar is the log of the normalized surrogate density at each point.
/// log_pi, when present, is the unnormalized target log density.
struct SampleBatch {
  Matrix seeds;
  Matrix points;
  Vector log_pistar;
  Vector log_pi;
  Matrix qoi;
  std::vector<std::string> qoi_names;
  SeedKind kind = SeedKind::iid;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(points.cols()); }
  bool has_target() const { return log_pi.size() == points.rows() && points.rows() > 0; }
  /// log(pi / pistar) per sample; requires has_target().
  Vector log_weights() const;
};

/// TT-CD sampler: a TT surrogate plus its right partial integrals.
class CDSampler {
 public:
  /// Throws NumericError when the surrogate integrates to (numerically) zero.
  explicit CDSampler(TTTensor tt);

  const TTTensor& tt() const { return tt_; }
  std::size_t dimension() const { return tt_.dimension(); }
  /// P_0 .. P_d as in partial_integrals.
  const std::vector<Vector>& partial_integrals() const { return p_; }

  /// Nodal values |phi * block_k(node) * P_{k+1}| for a left product phi of length r_k.
  Vector marginal_pdf(std::size_t k, const RowVector& phi) const;

  /// Maps seeds in [0,1)^d (rows) to surrogate samples. Seeds equal to 1 are clamped
  /// to the largest double below 1. Output does not depend on the worker count.
  SampleBatch transform(const Matrix& seeds, SeedKind kind = SeedKind::iid) const;

  /// i.i.d. uniform seeds pushed through transform.
  SampleBatch sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  TTTensor tt_;
  std::vector<Vector> p_;
  // psi_[k] is r_k x n_k with column j = block_k(node j) * P_{k+1}.
  std::vector<Matrix> psi_;
};

/// Inverse CDF of the piecewise-linear density with nodal values p on nodes.
/// Throws DomainError unless 0 <= q < 1, NumericError when p has no mass.
double invert_cdf(std::span<const double> p, std::span<const double> nodes, double q);

/// CDF of the normalized piecewise-linear density at x (for tests and diagnostics).
double piecewise_linear_cdf(std::span<const double> p, std::span<const double> nodes, double x);

/// Evaluates log pi and QoIs of the target at the batch points.
void attach_target(SampleBatch& batch, const TargetDensity& target);

/// Columns q_1..q_d, x_1..x_d, pistar and, with a target, pi and w (w = pi/pistar).
void write_batch_csv(std::ostream& out, const SampleBatch& batch);

}  // namespace ttpdf
