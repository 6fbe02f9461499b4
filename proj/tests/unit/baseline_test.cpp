#include "ttpdf/baseline.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ttpdf;

namespace {

class CorrelatedGaussian final : public TargetDensity {
 public:
  std::string name() const override { return "gauss"; }
  std::size_t dimension() const override { return 2; }
  std::vector<double> lower() const override { return {-8.0, -8.0}; }
  std::vector<double> upper() const override { return {8.0, 8.0}; }
  double log_density(std::span<const double> x) const override {
    // Covariance [[1, 0.9], [0.9, 1]] shifted to mean (1, -1).
    double a = x[0] - 1.0, b = x[1] + 1.0;
    return -0.5 * (a * a - 1.8 * a * b + b * b) / 0.19;
  }
  std::vector<std::string> qoi_names() const override { return {"x1"}; }
  double evaluate(std::span<const double> x, std::span<double> q) const override {
    q[0] = x[0];
    return log_density(x);
  }
};

}  // namespace

TEST(AdaptiveMetropolis, RecoversMomentsAndCovariance) {
  CorrelatedGaussian t;
  std::mt19937_64 rng(1);
  auto res = am_run(t, {}, 80000, rng);
  EXPECT_EQ(res.chain.states.rows(), 60000);
  Vector mean = res.chain.states.colwise().mean();
  EXPECT_NEAR(mean(0), 1.0, 0.08);
  EXPECT_NEAR(mean(1), -1.0, 0.08);
  ASSERT_EQ(res.chain.qoi_mean.size(), 1);
  EXPECT_NEAR(res.chain.qoi_mean(0), mean(0), 1e-12);
  // Adapted covariance is the scaled target covariance plus a small ridge.
  double s = 2.38 * 2.38 / 2.0;
  EXPECT_NEAR(res.covariance(0, 1) / s, 0.9, 0.1);
  Eigen::LLT<Matrix> llt(res.covariance);
  EXPECT_EQ(llt.info(), Eigen::Success);
  EXPECT_GT(res.chain.rejection_rate, 0.2);
  EXPECT_LT(res.chain.rejection_rate, 0.9);
  EXPECT_GT(res.evaluations, 80000u);
}

TEST(AdaptiveMetropolis, TinyStepsAlmostAlwaysAccepted) {
  CorrelatedGaussian t;
  AMConfig cfg;
  cfg.adapt = false;
  cfg.delayed_rejection = false;
  cfg.initial_covariance = 1e-8 * Matrix::Identity(2, 2);
  cfg.initial_state = Vector::Constant(2, 0.0);
  cfg.initial_state << 1.0, -1.0;
  std::mt19937_64 rng(2);
  auto res = am_run(t, cfg, 4000, rng);
  EXPECT_LT(res.chain.rejection_rate, 0.01);
  EXPECT_EQ(res.evaluations, 4001u);  // includes the initial state
}

TEST(AdaptiveMetropolis, ProposalsOutsideBoxAreRejectedWithoutEvaluation) {
  CorrelatedGaussian t;
  AMConfig cfg;
  cfg.adapt = false;
  cfg.delayed_rejection = false;
  cfg.initial_covariance = 1e6 * Matrix::Identity(2, 2);
  std::mt19937_64 rng(3);
  auto res = am_run(t, cfg, 2000, rng);
  EXPECT_GT(res.chain.rejection_rate, 0.99);
  EXPECT_LT(res.evaluations, 200u);
}

TEST(AdaptiveMetropolis, DelayedRejectionLowersRejection) {
  CorrelatedGaussian t;
  AMConfig plain;
  plain.adapt = false;
  plain.delayed_rejection = false;
  plain.initial_covariance = 4.0 * Matrix::Identity(2, 2);
  AMConfig dr = plain;
  dr.delayed_rejection = true;
  std::mt19937_64 r1(4), r2(4);
  auto a = am_run(t, plain, 20000, r1);
  auto b = am_run(t, dr, 20000, r2);
  EXPECT_LT(b.chain.rejection_rate, a.chain.rejection_rate - 0.05);
  Vector mean = b.chain.states.colwise().mean();
  EXPECT_NEAR(mean(0), 1.0, 0.1);
}
