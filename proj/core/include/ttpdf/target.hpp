#pragma once

#include "ttpdf/tt_tensor.hpp"

#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ttpdf {

/// Unnormalized density on a box, optionally with quantities of interest.
/// Implementations must be reentrant: evaluate is called from several threads.
class TargetDensity {
 public:
  virtual ~TargetDensity() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> lower() const = 0;
  virtual std::vector<double> upper() const = 0;

  /// log pi(x); -infinity outside the support.
  virtual double log_density(std::span<const double> x) const = 0;

  /// Tensor grid with the given number of nodes per dimension; uniform over the box by default.
  virtual Grid make_grid(std::span<const std::size_t> sizes) const;

  /// Points spread over the appreciable support, used to seed cross index sets and
  /// to probe the density scale. Uniform over the box by default.
  virtual Matrix reference_points(std::size_t count, std::mt19937_64& rng) const;

  virtual std::vector<std::string> qoi_names() const { return {}; }
  /// log pi(x), writing the QoIs at x into qoi (length qoi_names().size()).
  virtual double evaluate(std::span<const double> x, std::span<double> qoi) const {
    (void)qoi;
    return log_density(x);
  }
};

/// Row-wise evaluation of an N x d point matrix. qoi may be null; otherwise it
/// is resized to N x m. Rows are distributed over workers; results do not
/// depend on the worker count.
Vector evaluate_batch(const TargetDensity& target, const Matrix& points, Matrix* qoi = nullptr);

/// Largest log density over the given rows; used to shift evaluations away from
/// under/overflow before exponentiating.
double max_log_density(const TargetDensity& target, const Matrix& points);

/// Target loaded from a shared library exporting the C symbols
///   int    ttpdf_plugin_dimension(void);
///   void   ttpdf_plugin_bounds(double* lower, double* upper);
///   double ttpdf_plugin_log_density(const double* x);
std::unique_ptr<TargetDensity> load_plugin_target(const std::filesystem::path& library);

}  // namespace ttpdf
