#include "ttpdf/tt_cd.hpp"

#include "ttpdf/errors.hpp"
#include "ttpdf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace ttpdf {

Vector SampleBatch::log_weights() const {
  if (!has_target()) throw DomainError("sample batch has no target densities");
  return log_pi - log_pistar;
}

CDSampler::CDSampler(TTTensor tt) : tt_(std::move(tt)) {
  p_ = ttpdf::partial_integrals(tt_);
  double total = p_[0](0);
  if (!std::isfinite(total) || std::abs(total) <= std::numeric_limits<double>::min())
    throw NumericError("surrogate density integrates to zero");
  const std::size_t d = tt_.dimension();
  psi_.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t n = tt_.grid().size(k);
    psi_[k].resize(static_cast<Eigen::Index>(tt_.rank(k)), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j)
      psi_[k].col(static_cast<Eigen::Index>(j)) = tt_.slice(k, j) * p_[k + 1];
  }
}

Vector CDSampler::marginal_pdf(std::size_t k, const RowVector& phi) const {
  if (k >= dimension()) throw DomainError("dimension out of range");
  if (phi.size() != psi_[k].rows()) throw DomainError("left product has wrong length");
  Vector p = (phi * psi_[k]).transpose().cwiseAbs();
  if (!(p.maxCoeff() > 0.0))
    throw NumericError("marginal density vanishes in dimension " + std::to_string(k));
  return p;
}

namespace {

// Cumulative trapezoid masses c[0] = 0, c[j+1] = c[j] + h_j (p_j + p_{j+1}) / 2.
void cumulative(std::span<const double> p, std::span<const double> x, std::vector<double>& c) {
  c.resize(p.size());
  c[0] = 0.0;
  for (std::size_t j = 0; j + 1 < p.size(); ++j) c[j + 1] = c[j] + 0.5 * (x[j + 1] - x[j]) * (p[j] + p[j + 1]);
}

// Solves the cell-local quadratic for mass u measured from the left of the cell.
double invert_cell(double pl, double pr, double h, double r) {
  if (r <= 0.0) return 0.0;
  double a = (pr - pl) / (2.0 * h);
  double disc = std::max(0.0, pl * pl + 4.0 * a * r);
  double den = pl + std::sqrt(disc);
  if (!(den > 0.0)) return 0.0;
  return std::clamp(2.0 * r / den, 0.0, h);
}

double invert_with(std::span<const double> p, std::span<const double> x,
                   const std::vector<double>& c, double q) {
  const std::size_t n = p.size();
  double u = q * c[n - 1];
  auto it = std::upper_bound(c.begin(), c.end(), u);
  std::size_t j = it == c.begin() ? 0 : static_cast<std::size_t>(it - c.begin()) - 1;
  j = std::min(j, n - 2);
  double s = invert_cell(p[j], p[j + 1], x[j + 1] - x[j], u - c[j]);
  return std::min(x[j] + s, x[n - 1]);
}

void check_density(std::span<const double> p, std::span<const double> nodes) {
  if (p.size() != nodes.size() || p.size() < 2)
    throw DomainError("density and node arrays must match and have at least two entries");
  for (double v : p)
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("nodal density must be finite and non-negative");
}

}  // namespace

double invert_cdf(std::span<const double> p, std::span<const double> nodes, double q) {
  if (!(q >= 0.0 && q < 1.0)) throw DomainError("seed outside [0, 1)");
  check_density(p, nodes);
  std::vector<double> c;
  cumulative(p, nodes, c);
  if (!(c.back() > 0.0)) throw NumericError("density has no mass");
  return invert_with(p, nodes, c, q);
}

double piecewise_linear_cdf(std::span<const double> p, std::span<const double> nodes, double x) {
  check_density(p, nodes);
  std::vector<double> c;
  cumulative(p, nodes, c);
  if (!(c.back() > 0.0)) throw NumericError("density has no mass");
  if (x <= nodes.front()) return 0.0;
  if (x >= nodes.back()) return 1.0;
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  std::size_t j = static_cast<std::size_t>(it - nodes.begin()) - 1;
  double h = nodes[j + 1] - nodes[j], s = x - nodes[j];
  double mass = p[j] * s + 0.5 * (p[j + 1] - p[j]) * s * s / h;
  return (c[j] + mass) / c.back();
}

SampleBatch CDSampler::transform(const Matrix& seeds, SeedKind kind) const {
  const std::size_t d = dimension();
  if (seeds.cols() != static_cast<Eigen::Index>(d)) throw DomainError("seed matrix has wrong number of columns");
  const Eigen::Index count = seeds.rows();
  SampleBatch batch;
  batch.kind = kind;
  batch.seeds = seeds;
  batch.points.resize(count, static_cast<Eigen::Index>(d));
  batch.log_pistar.resize(count);
  const double below_one = std::nextafter(1.0, 0.0);
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(d); ++k) {
      double q = seeds(i, k);
      if (!(q >= 0.0 && q <= 1.0)) throw DomainError("seed outside [0, 1)");
      batch.seeds(i, k) = std::min(q, below_one);
    }

  constexpr Eigen::Index chunk = 2048;
  const auto chunks = static_cast<std::size_t>((count + chunk - 1) / chunk);
  parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
    std::vector<double> c, p;
    for (std::size_t ch = cb; ch < ce; ++ch) {
      const Eigen::Index begin = static_cast<Eigen::Index>(ch) * chunk;
      const Eigen::Index rows = std::min(chunk, count - begin);
      Matrix phi = Matrix::Ones(rows, 1);
      Vector logp = Vector::Zero(rows);
      for (std::size_t k = 0; k < d; ++k) {
        const auto& nodes = tt_.grid().nodes(k);
        const std::size_t n = nodes.size();
        Matrix marg = (phi * psi_[k]).cwiseAbs();
        Matrix next(rows, static_cast<Eigen::Index>(tt_.rank(k + 1)));
        p.resize(n);
        for (Eigen::Index i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < n; ++j) p[j] = marg(i, static_cast<Eigen::Index>(j));
          cumulative(p, nodes, c);
          double z = c.back();
          if (!(z > 0.0) || !std::isfinite(z))
            throw NumericError("marginal density vanishes in dimension " + std::to_string(k));
          double x = invert_with(p, nodes, c, batch.seeds(begin + i, static_cast<Eigen::Index>(k)));
          auto [cell, t] = tt_.grid().locate(k, x);
          double px = (1.0 - t) * p[cell] + t * p[cell + 1];
          logp(i) += std::log(px / z);
          batch.points(begin + i, static_cast<Eigen::Index>(k)) = x;
          next.row(i) = ((1.0 - t) * (phi.row(i) * tt_.slice(k, cell)) +
                         t * (phi.row(i) * tt_.slice(k, cell + 1))) / z;
        }
        phi = std::move(next);
      }
      batch.log_pistar.segment(begin, rows) = logp;
    }
  });
  return batch;
}

SampleBatch CDSampler::sample(std::size_t count, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix seeds(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dimension()));
  for (Eigen::Index i = 0; i < seeds.rows(); ++i)
    for (Eigen::Index k = 0; k < seeds.cols(); ++k) seeds(i, k) = u(rng);
  return transform(seeds, SeedKind::iid);
}

void attach_target(SampleBatch& batch, const TargetDensity& target) {
  batch.qoi_names = target.qoi_names();
  batch.log_pi = evaluate_batch(target, batch.points, batch.qoi_names.empty() ? nullptr : &batch.qoi);
}

void write_batch_csv(std::ostream& out, const SampleBatch& batch) {
  const std::size_t d = batch.dimension();
  for (std::size_t k = 1; k <= d; ++k) out << 'q' << '_' << k << ',';
  for (std::size_t k = 1; k <= d; ++k) out << 'x' << '_' << k << ',';
  out << "pistar";
  bool target = batch.has_target();
  if (target) out << ",pi,w";
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index k = 0; k < batch.seeds.cols(); ++k) out << batch.seeds(r, k) << ',';
    for (Eigen::Index k = 0; k < batch.points.cols(); ++k) out << batch.points(r, k) << ',';
    out << std::exp(batch.log_pistar(r));
    if (target)
      out << ',' << std::exp(batch.log_pi(r)) << ',' << std::exp(batch.log_pi(r) - batch.log_pistar(r));
    out << '\n';
  }
}

}  // namespace ttpdf
