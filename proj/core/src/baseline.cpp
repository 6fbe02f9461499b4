#include "ttpdf/baseline.hpp"

#include "ttpdf/errors.hpp"
#include "ttpdf/iact.hpp"

#include <cmath>
#include <limits>

namespace ttpdf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool inside(const Vector& x, const std::vector<double>& lo, const std::vector<double>& hi) {
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    auto kk = static_cast<std::size_t>(k);
    if (!(x(k) >= lo[kk] && x(k) <= hi[kk])) return false;
  }
  return true;
}

Eigen::LLT<Matrix> factor(const Matrix& c, double epsilon) {
  Matrix reg = c;
  double eps = epsilon;
  for (int attempt = 0; attempt < 20; ++attempt) {
    Eigen::LLT<Matrix> llt(reg);
    if (llt.info() == Eigen::Success) return llt;
    reg = c + eps * Matrix::Identity(c.rows(), c.cols());
    eps *= 10.0;
  }
  throw NumericError("adaptive Metropolis covariance is not positive definite");
}

// log of the unnormalized Gaussian proposal density exp(-r^T C^{-1} r / 2).
double log_q(const Eigen::LLT<Matrix>& llt, const Vector& r) {
  Vector z = llt.matrixL().solve(r);
  return -0.5 * z.squaredNorm();
}

}  // namespace

AMResult am_run(const TargetDensity& target, const AMConfig& cfg, std::size_t n,
                std::mt19937_64& rng) {
  const std::size_t d = target.dimension();
  const auto di = static_cast<Eigen::Index>(d);
  if (!(cfg.dr_shrink > 0.0 && cfg.dr_shrink < 1.0)) throw ConfigError("dr_shrink must lie in (0, 1)");
  if (!(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0))
    throw ConfigError("burn_in_fraction must lie in [0, 1)");
  const auto lo = target.lower(), hi = target.upper();
  const double scale = cfg.scale > 0.0 ? cfg.scale : 2.38 * 2.38 / static_cast<double>(d);
  const std::size_t nq = target.qoi_names().size();

  Vector x(di);
  if (cfg.initial_state.size() == di)
    x = cfg.initial_state;
  else
    for (std::size_t k = 0; k < d; ++k) x(static_cast<Eigen::Index>(k)) = 0.5 * (lo[k] + hi[k]);
  std::vector<double> q(nq), q_try(nq);
  auto eval = [&](const Vector& y, std::vector<double>& qoi) {
    std::span<const double> s(y.data(), d);
    return nq ? target.evaluate(s, qoi) : target.log_density(s);
  };
  AMResult result;
  double lp = eval(x, q);
  ++result.evaluations;
  if (lp == kNegInf || std::isnan(lp)) throw DomainError("adaptive Metropolis starts outside the support");

  Matrix c1 = cfg.initial_covariance.size() == di * di ? cfg.initial_covariance : Matrix::Identity(di, di);
  auto llt1 = factor(c1, cfg.epsilon);
  auto llt2 = factor(cfg.dr_shrink * c1, cfg.epsilon);

  Vector mean = x;
  Matrix m2 = Matrix::Zero(di, di);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](const Eigen::LLT<Matrix>& llt) {
    Vector z(di);
    for (Eigen::Index k = 0; k < di; ++k) z(k) = normal(rng);
    return Vector(llt.matrixL() * z);
  };

  const auto burn = static_cast<std::size_t>(std::floor(cfg.burn_in_fraction * static_cast<double>(n)));
  const std::size_t kept = n - burn;
  ChainResult& chain = result.chain;
  chain.states.resize(static_cast<Eigen::Index>(kept), di);
  chain.accepted.assign(kept, 0);
  Matrix qoi(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(nq));

  for (std::size_t t = 0; t < n; ++t) {
    bool moved = false;
    Vector y1 = x + draw(llt1);
    double lp1 = kNegInf;
    if (inside(y1, lo, hi)) {
      lp1 = eval(y1, q_try);
      ++result.evaluations;
    }
    double log_a1 = std::min(0.0, lp1 - lp);
    if (lp1 != kNegInf && std::log(unif(rng)) < log_a1) {
      x = y1;
      lp = lp1;
      q = q_try;
      moved = true;
    } else if (cfg.delayed_rejection) {
      Vector y2 = x + draw(llt2);
      if (inside(y2, lo, hi)) {
        std::vector<double> q2(nq);
        double lp2 = eval(y2, q2);
        ++result.evaluations;
        if (lp2 != kNegInf) {
          // 1 - alpha_1(y2, y1) against 1 - alpha_1(x, y1).
          double a_rev = lp1 == kNegInf ? 0.0 : std::min(1.0, std::exp(lp1 - lp2));
          double a_fwd = std::exp(log_a1);
          double num = lp2 + log_q(llt1, y1 - y2) + std::log1p(-a_rev);
          double den = lp + log_q(llt1, y1 - x) + std::log1p(-a_fwd);
          double log_a2 = a_rev >= 1.0 ? kNegInf : std::min(0.0, num - den);
          if (std::log(unif(rng)) < log_a2) {
            x = y2;
            lp = lp2;
            q = q2;
            moved = true;
          }
        }
      }
    }

    // Running mean and covariance of the chain (Welford).
    double cnt = static_cast<double>(t + 2);
    Vector delta = x - mean;
    mean += delta / cnt;
    m2 += delta * (x - mean).transpose();
    if (cfg.adapt && t + 1 >= cfg.adapt_start && (t + 1) % std::max<std::size_t>(cfg.adapt_interval, 1) == 0) {
      Matrix cov = m2 / (cnt - 1.0);
      c1 = scale * (cov + cfg.epsilon * Matrix::Identity(di, di));
      llt1 = factor(c1, cfg.epsilon);
      llt2 = factor(cfg.dr_shrink * c1, cfg.epsilon);
    }

    if (t >= burn) {
      auto row = static_cast<Eigen::Index>(t - burn);
      chain.states.row(row) = x.transpose();
      chain.accepted[t - burn] = moved ? 1 : 0;
      if (!moved) ++chain.rejections;
      for (std::size_t j = 0; j < nq; ++j) qoi(row, static_cast<Eigen::Index>(j)) = q[j];
    }
  }
  chain.rejection_rate = kept ? static_cast<double>(chain.rejections) / static_cast<double>(kept) : 0.0;
  if (nq && kept) chain.qoi_mean = qoi.colwise().mean().transpose();
  if (kept >= 100) {
    std::vector<double> series(kept);
    for (Eigen::Index k = 0; k < di; ++k) {
      for (std::size_t l = 0; l < kept; ++l) series[l] = chain.states(static_cast<Eigen::Index>(l), k);
      chain.tau.push_back(iact(series));
    }
    for (std::size_t j = 0; j < nq; ++j) {
      for (std::size_t l = 0; l < kept; ++l) series[l] = qoi(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j));
      chain.tau.push_back(iact(series));
    }
  }
  result.covariance = c1;
  result.qoi = std::move(qoi);
  return result;
}

}  // namespace ttpdf
