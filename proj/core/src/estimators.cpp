#include "ttpdf/estimators.hpp"

#include "ttpdf/errors.hpp"
#include "ttpdf/iact.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ttpdf {

double ChainResult::max_tau() const {
  if (tau.empty()) return std::numeric_limits<double>::quiet_NaN();
  return *std::max_element(tau.begin(), tau.end());
}

ChainResult mh_correct(const SampleBatch& batch, std::mt19937_64& rng) {
  if (batch.kind == SeedKind::lattice)
    throw DomainError("Metropolis-Hastings correction needs i.i.d. seeds, not a lattice batch");
  if (!batch.has_target()) throw DomainError("batch has no target densities");
  const std::size_t n = batch.size();
  Vector logw = batch.log_weights();
  for (Eigen::Index i = 0; i < logw.size(); ++i)
    if (std::isnan(logw(i)) || logw(i) == std::numeric_limits<double>::infinity())
      throw NumericError("invalid importance weight at sample " + std::to_string(i));

  ChainResult r;
  r.state_index.resize(n);
  r.accepted.assign(n, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t s = 0;
  if (n > 0) r.accepted[0] = 1;
  for (std::size_t l = 1; l < n; ++l) {
    double cur = logw(static_cast<Eigen::Index>(s));
    double prop = logw(static_cast<Eigen::Index>(l));
    bool accept;
    if (cur == -std::numeric_limits<double>::infinity())
      accept = true;
    else {
      double log_h = prop - cur;
      accept = log_h >= 0.0 || std::log(u(rng)) < log_h;
    }
    if (accept) {
      s = l;
      r.accepted[l] = 1;
    } else {
      ++r.rejections;
    }
    r.state_index[l] = s;
  }
  r.rejection_rate = n > 0 ? static_cast<double>(r.rejections) / static_cast<double>(n) : 0.0;

  const auto d = batch.points.cols();
  r.states.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t l = 0; l < n; ++l)
    r.states.row(static_cast<Eigen::Index>(l)) = batch.points.row(static_cast<Eigen::Index>(r.state_index[l]));
  const auto m = batch.qoi.cols();
  Matrix q(static_cast<Eigen::Index>(n), m);
  if (m > 0) {
    for (std::size_t l = 0; l < n; ++l)
      q.row(static_cast<Eigen::Index>(l)) = batch.qoi.row(static_cast<Eigen::Index>(r.state_index[l]));
    r.qoi_mean = q.colwise().mean().transpose();
  }
  if (n >= 100) {
    std::vector<double> series(n);
    for (Eigen::Index k = 0; k < d; ++k) {
      for (std::size_t l = 0; l < n; ++l) series[l] = r.states(static_cast<Eigen::Index>(l), k);
      r.tau.push_back(iact(series));
    }
    for (Eigen::Index k = 0; k < m; ++k) {
      for (std::size_t l = 0; l < n; ++l) series[l] = q(static_cast<Eigen::Index>(l), k);
      r.tau.push_back(iact(series));
    }
  }
  return r;
}

namespace {

// Weights scaled by their maximum; returns the log of that scale.
double scaled_weights(std::span<const double> logw, std::vector<double>& w) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : logw) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw NumericError("invalid importance weight");
    top = std::max(top, v);
  }
  if (top == -std::numeric_limits<double>::infinity()) throw NumericError("all importance weights are zero");
  w.resize(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) w[i] = std::exp(logw[i] - top);
  return top;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double mu = mean(v), s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

Vector normalized_weights(const SampleBatch& batch) {
  Vector logw = batch.log_weights();
  std::vector<double> w;
  scaled_weights(std::span<const double>(logw.data(), static_cast<std::size_t>(logw.size())), w);
  double z = mean(w);
  Vector out(logw.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = w[static_cast<std::size_t>(i)] / z;
  return out;
}

WeightedEstimate importance_estimate(const SampleBatch& batch, const Matrix& g) {
  const std::size_t n = batch.size();
  if (n == 0) throw DomainError("importance estimate needs at least one sample");
  if (g.rows() != static_cast<Eigen::Index>(n)) throw DomainError("g has wrong number of rows");
  Vector logw = batch.log_weights();
  std::vector<double> w;
  double top = scaled_weights(std::span<const double>(logw.data(), n), w);
  double z = mean(w);
  WeightedEstimate e;
  e.log_z = top + std::log(z);
  e.estimate = Vector::Zero(g.cols());
  double el1 = 0.0, wmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double wi = w[i] / z;
    e.estimate += wi * g.row(static_cast<Eigen::Index>(i)).transpose();
    el1 += std::abs(wi - 1.0);
    wmax = std::max(wmax, wi);
  }
  e.estimate /= static_cast<double>(n);
  e.el1 = el1 / static_cast<double>(n);
  e.max_weight = wmax;
  return e;
}

TwoLevelEstimate two_level_mh(std::span<const double> coarse_gt, std::span<const double> g,
                              std::span<const double> gt, const ChainResult& chain) {
  const std::size_t n = chain.state_index.size();
  if (g.size() != n || gt.size() != n) throw DomainError("fine-level values must match the chain length");
  if (coarse_gt.empty()) throw DomainError("coarse level needs at least one sample");
  std::vector<double> diff(n);
  for (std::size_t l = 0; l < n; ++l) diff[l] = g[chain.state_index[l]] - gt[l];
  TwoLevelEstimate e;
  e.coarse = mean(coarse_gt);
  e.correction = mean(diff);
  e.correction_variance = variance(diff);
  e.estimate = e.coarse + e.correction;
  return e;
}

TwoLevelEstimate two_level_iw(std::span<const double> coarse_gt, std::span<const double> g,
                              std::span<const double> gt, std::span<const double> log_weights) {
  const std::size_t n = log_weights.size();
  if (g.size() != n || gt.size() != n) throw DomainError("fine-level values must match the weights");
  if (coarse_gt.empty() || n == 0) throw DomainError("both levels need at least one sample");
  std::vector<double> w;
  scaled_weights(log_weights, w);
  double z = mean(w);
  std::vector<double> diff(n);
  for (std::size_t l = 0; l < n; ++l) diff[l] = g[l] * (w[l] / z) - gt[l];
  TwoLevelEstimate e;
  e.coarse = mean(coarse_gt);
  e.correction = mean(diff);
  e.correction_variance = variance(diff);
  e.estimate = e.coarse + e.correction;
  return e;
}

LemmaDiagnostics lemma_diagnostics(const SampleBatch& batch, const ChainResult& chain) {
  Vector w = normalized_weights(batch);
  LemmaDiagnostics l;
  l.el1 = (w.array() - 1.0).abs().mean();
  l.max_weight = w.maxCoeff();
  l.rejection_rate = chain.rejection_rate;
  l.a = 1.0 - 1.0 / l.max_weight;
  l.tau_bound = l.a < 1.0 ? (1.0 + l.a) / (1.0 - l.a) : std::numeric_limits<double>::infinity();
  return l;
}

namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

std::string to_json_line(const EstimateRecord& record) {
  nlohmann::json j;
  j["method"] = record.method;
  j["N"] = record.n;
  auto est = nlohmann::json::object();
  auto se = nlohmann::json::object();
  for (std::size_t i = 0; i < record.estimate.size(); ++i) {
    std::string name = i < record.names.size() ? record.names[i] : "g" + std::to_string(i + 1);
    est[name] = number(record.estimate[i]);
    se[name] = i < record.standard_error.size() ? number(record.standard_error[i]) : nlohmann::json(nullptr);
  }
  j["estimate"] = est;
  j["standard_error"] = se;
  j["tau"] = record.tau ? number(*record.tau) : nlohmann::json(nullptr);
  j["rejection_rate"] = record.rejection_rate ? number(*record.rejection_rate) : nlohmann::json(nullptr);
  j["el1"] = record.el1 ? number(*record.el1) : nlohmann::json(nullptr);
  return j.dump();
}

}  // namespace ttpdf
