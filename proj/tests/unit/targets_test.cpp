#include "ttpdf/diffusion.hpp"
#include "ttpdf/errors.hpp"
#include "ttpdf/fem.hpp"
#include "ttpdf/rosenbrock.hpp"
#include "ttpdf/shock_absorber.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace ttpdf;

namespace {

// Straight D = 0 posterior: prior density times Weibull pdf / survival factors.
double shock_oracle_d0(double beta0, double theta2) {
  const double alpha = 6.8757, gamma = 2.2932, m0 = std::log(30796.0), s0 = 0.1563;
  double log_prior = std::log(std::pow(theta2, alpha - 0.5)) -
                     theta2 * (beta0 - m0) * (beta0 - m0) / (2.0 * s0) - gamma * theta2;
  double theta1 = std::exp(beta0);
  double log_lik = 0.0;
  for (const auto& r : shock_absorber_data()) {
    double tail = std::exp(-std::pow(r.time / theta1, theta2));
    if (r.censored)
      log_lik += std::log(tail);
    else
      log_lik += std::log(theta2 / theta1 * std::pow(r.time / theta1, theta2 - 1.0) * tail);
  }
  return log_prior + log_lik;
}

double mixture_cdf(double t, const std::vector<double>& th1, const std::vector<double>& th2) {
  double s = 0.0;
  for (std::size_t i = 0; i < th1.size(); ++i) s += 1.0 - std::exp(-std::pow(t / th1[i], th2[i]));
  return s / static_cast<double>(th1.size());
}

}  // namespace

TEST(ShockData, CensoringCounts) {
  const auto& d = shock_absorber_data();
  EXPECT_EQ(d.size(), 38u);
  auto censored = std::count_if(d.begin(), d.end(), [](const FailureRecord& r) { return r.censored; });
  EXPECT_EQ(censored, 27);
  EXPECT_TRUE(std::is_sorted(d.begin(), d.end(), [](auto& a, auto& b) { return a.time < b.time; }));
}

TEST(Weibull, TrivialFactors) {
  EXPECT_NEAR(weibull_log_pdf(2.5, 2.5, 3.0), std::log(3.0 / 2.5) - 1.0, 1e-14);
  EXPECT_NEAR(weibull_log_survival(2.5, 2.5, 3.0), -1.0, 1e-14);
  EXPECT_NEAR(weibull_quantile95(1.0, 1.0), std::log(20.0), 1e-14);
}

TEST(ShockAbsorber, NoCovariatesMatchesOracle) {
  ShockAbsorber s(0);
  ASSERT_EQ(s.dimension(), 2u);
  for (auto [b0, t2] : std::vector<std::pair<double, double>>{{10.3, 3.0}, {10.0, 1.5}, {10.6, 6.0}}) {
    double x[2] = {b0, t2};
    EXPECT_NEAR(s.log_density(x), shock_oracle_d0(b0, t2), 1e-9 * std::abs(shock_oracle_d0(b0, t2)));
  }
  double zero[2] = {10.3, 0.0};
  EXPECT_EQ(s.log_density(zero), -INFINITY);
}

TEST(ShockAbsorber, BoxGridAndCovariates) {
  ShockAbsorber s(2);
  EXPECT_EQ(s.dimension(), 4u);
  EXPECT_NEAR(s.lower()[0], std::log(30796.0) - 3.0 * std::sqrt(0.1563), 1e-14);
  EXPECT_EQ(s.upper()[1], 3.0);
  EXPECT_EQ(s.upper()[3], 13.0);
  std::vector<std::size_t> sizes{8, 8, 8, 4};
  Grid g = s.make_grid(sizes);
  EXPECT_DOUBLE_EQ(g.lower(3), 13.0 / 8.0);
  EXPECT_DOUBLE_EQ(g.upper(3), 13.0);
  EXPECT_EQ(s.covariate_matrix().rows(), 38);
  EXPECT_EQ(s.covariate_matrix().cols(), 2);
  ShockAbsorber again(2);
  EXPECT_EQ(again.covariate_matrix(), s.covariate_matrix());
  EXPECT_NE(ShockAbsorber(2, 39).covariate_matrix(), s.covariate_matrix());
}

TEST(ShockAbsorber, CovariatesEnterThroughTheLink) {
  ShockAbsorber s(1);
  ShockAbsorber s0(0);
  // beta_1 = 0 removes covariates from the likelihood; only the prior term beta_1^2 remains.
  double x[3] = {10.2, 0.0, 2.0}, y[2] = {10.2, 2.0};
  EXPECT_NEAR(s.log_density(x), s0.log_density(y), 1e-10);
}

TEST(ShockQoi, MeanQuantile) {
  ShockAbsorber s(0);
  double x[2] = {std::log(2.0), 0.5}, q[1];
  double lp = s.evaluate(x, q);
  EXPECT_DOUBLE_EQ(lp, s.log_density(x));
  EXPECT_NEAR(q[0], 2.0 * std::pow(std::log(20.0), 2.0), 1e-12);
}

TEST(ShockQoi, QuantileOfMean) {
  std::vector<double> one{1.0};
  EXPECT_NEAR(quantile_of_mean(one, one), std::log(20.0), 1e-12);
  std::vector<double> t1(5, 3.0e4), t2(5, 2.5);
  EXPECT_NEAR(quantile_of_mean(t1, t2), weibull_quantile95(3.0e4, 2.5), 1e-8);
  // Bisection-only oracle on a two-sample mixture.
  std::vector<double> a{1.0e4, 4.0e4}, b{1.5, 6.0};
  double lo = 1.0, hi = 1.0e7;
  for (int i = 0; i < 200; ++i) {
    double mid = std::sqrt(lo * hi);
    (mixture_cdf(mid, a, b) < 0.95 ? lo : hi) = mid;
  }
  EXPECT_NEAR(quantile_of_mean(a, b), lo, 1e-10 * lo);
  std::vector<double> w{1.0, 0.0};
  EXPECT_NEAR(quantile_of_mean(a, b, w), weibull_quantile95(1.0e4, 1.5), 1e-8);
  std::vector<double> bad{-1.0};
  EXPECT_THROW(quantile_of_mean(bad, one), DomainError);
}

TEST(Rosenbrock, Examples) {
  Rosenbrock r(2);
  double x0[2] = {0.0, 0.0}, x1[2] = {0.0, -5.0};
  EXPECT_DOUBLE_EQ(rosenbrock_r(x0), 25.0);
  EXPECT_DOUBLE_EQ(r.log_density(x0), -12.5);
  EXPECT_DOUBLE_EQ(rosenbrock_r(x1), 0.0);
  EXPECT_EQ(r.upper()[0], 7.0);
  EXPECT_EQ(r.upper()[1], 200.0);
  Rosenbrock r4(4);
  EXPECT_EQ(r4.upper()[0], 2.0);
  EXPECT_EQ(r4.upper()[2], 7.0);
  EXPECT_EQ(r4.lower()[3], -200.0);
  EXPECT_EQ(rosenbrock_grid_sizes(4), (std::vector<std::size_t>{128, 128, 512, 4096}));
  EXPECT_THROW(Rosenbrock(1), DomainError);
}

TEST(RosenbrockProperty, TermByTerm) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Rosenbrock r(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(4);
    for (std::size_t k = 0; k < 4; ++k) x[k] = u(rng) * r.half_width(k);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < 4; ++k) {
      double t = x[k + 1] + 5.0 * (x[k] * x[k] + 1.0);
      sum += x[k] * x[k] + t * t;
    }
    EXPECT_NEAR(r.log_density(x), -0.5 * sum, 1e-12 * sum);
  }
}

TEST(Rosenbrock, ReferencePointsInsideBox) {
  Rosenbrock r(5);
  std::mt19937_64 rng(2);
  Matrix p = r.reference_points(200, rng);
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (std::size_t k = 0; k < 5; ++k) EXPECT_LE(std::abs(p(i, static_cast<Eigen::Index>(k))), r.half_width(k));
}

TEST(Fem, ConstantCoefficientIsLinear) {
  BilinearFem fem(8);
  for (double c : {1.0, 2.0, 0.3}) {
    std::vector<double> kappa(64, c);
    Vector u = fem.solve(kappa);
    for (std::size_t n = 0; n < fem.node_count(); ++n)
      EXPECT_NEAR(u(static_cast<Eigen::Index>(n)), 1.0 - fem.node_x1(n), 1e-12);
    EXPECT_NEAR(fem.flux(u, kappa), c, 1e-12);
    EXPECT_NEAR(fem.boundary_flux(u, kappa), c, 1e-12);
  }
}

TEST(Fem, LayeredCoefficientMatchesHarmonicOracle) {
  for (std::size_t m : {6, 150}) {
    BilinearFem fem(m);
    std::vector<double> col(m), kappa(m * m);
    for (std::size_t i = 0; i < m; ++i) col[i] = std::exp(std::sin(3.0 * static_cast<double>(i)));
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < m; ++i) kappa[i + m * j] = col[i];
    Vector u = fem.solve(kappa);
    double resistance = 0.0;
    for (double k : col) resistance += fem.h() / k;
    double tol = m > 128 ? 1e-7 : 1e-12;
    for (std::size_t n = 0; n < fem.node_count(); ++n) {
      std::size_t i = n % (m + 1);
      double partial = 0.0;
      for (std::size_t c = 0; c < i; ++c) partial += fem.h() / col[c];
      EXPECT_NEAR(u(static_cast<Eigen::Index>(n)), 1.0 - partial / resistance, tol);
    }
    EXPECT_NEAR(fem.flux(u, kappa), 1.0 / resistance, tol);
  }
}

TEST(Fem, FluxFormsAgreeOnRandomField) {
  BilinearFem fem(32);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<double> kappa(32 * 32);
  for (double& k : kappa) k = u(rng);
  Vector sol = fem.solve(kappa);
  EXPECT_NEAR(fem.flux(sol, kappa), fem.boundary_flux(sol, kappa), 1e-8);
}

TEST(Fem, FluxConvergesAtSecondOrder) {
  auto flux = [](std::size_t m) {
    BilinearFem fem(m);
    std::vector<double> kappa(m * m);
    auto mid = cell_midpoints(m);
    for (std::size_t c = 0; c < kappa.size(); ++c)
      kappa[c] = std::exp(0.8 * std::cos(M_PI * mid[c][0]) * std::cos(2.0 * M_PI * mid[c][1]));
    Vector u = fem.solve(kappa);
    return fem.flux(u, kappa);
  };
  double f8 = flux(8), f16 = flux(16), f32 = flux(32), f64 = flux(64);
  double r1 = (f8 - f16) / (f16 - f32), r2 = (f16 - f32) / (f32 - f64);
  EXPECT_NEAR(r1, 4.0, 0.6);
  EXPECT_NEAR(r2, 4.0, 0.4);
}

TEST(Fem, SquareAverageOfLinearSolution) {
  BilinearFem fem(16);
  Vector u = fem.solve(std::vector<double>(256, 1.0));
  EXPECT_NEAR(fem.square_average(u, 0.25, 0.5, 0.5), 0.75, 1e-12);
  EXPECT_NEAR(fem.square_average(u, 0.3, 0.7, 0.13), 0.7, 1e-12);
  // Clipped to [0, 0.1] x [0.4, 0.6].
  EXPECT_NEAR(fem.square_average(u, 0.0, 0.5, 0.2), 0.95, 1e-12);
}

TEST(Kle, FrequenciesAndVariances) {
  std::vector<std::array<int, 2>> expect{{0, 1}, {1, 0}, {0, 2}, {1, 1}, {2, 0}, {0, 3}};
  for (std::size_t k = 1; k <= 6; ++k) EXPECT_EQ(kle_frequencies(k), expect[k - 1]);
  std::set<std::array<int, 2>> seen;
  for (std::size_t k = 1; k <= 100; ++k) {
    auto f = kle_frequencies(k);
    EXPECT_TRUE(seen.insert(f).second);
    if (k > 1) {
      auto p = kle_frequencies(k - 1);
      EXPECT_GE(f[0] + f[1], p[0] + p[1]);
    }
  }
  for (std::size_t d : {1, 5, 11, 40}) {
    auto eta = kle_variances(d, 2.0);
    double s = 0.0;
    for (double e : eta) s += e;
    EXPECT_NEAR(s, 1.0, 1e-14);
    if (d > 1) EXPECT_NEAR(eta[0] / eta[1], 8.0, 1e-12);
  }
  std::vector<double> zero(11, 0.0);
  EXPECT_EQ(kle_field(zero, 2.0, 0.3, 0.8), 1.0);
  std::vector<double> e1{1.0};
  EXPECT_NEAR(kle_field(e1, 2.0, 0.3, 0.0), std::exp(1.0), 1e-14);
}

TEST(Diffusion, ObservationGeometry) {
  DiffusionParameters p;
  p.cells_per_side = 16;
  Diffusion t(p);
  ASSERT_EQ(t.observation_centres().size(), 9u);
  EXPECT_DOUBLE_EQ(t.observation_side(), 0.5);
  std::set<std::array<double, 2>> centres(t.observation_centres().begin(), t.observation_centres().end());
  for (double a : {0.25, 0.5, 0.75})
    for (double b : {0.25, 0.5, 0.75}) EXPECT_TRUE(centres.count({a, b}));
}

TEST(Diffusion, NoiseFreeTruthHasZeroMisfit) {
  DiffusionParameters p;
  p.cells_per_side = 16;
  p.add_noise = false;
  Diffusion t(p);
  std::vector<double> truth(11, 1.5);
  EXPECT_NEAR(t.log_density(truth), 0.0, 1e-20);
  std::vector<double> other(11, 0.5);
  double lp = t.log_density(other);
  EXPECT_LT(lp, 0.0);
  p.noise_variance *= 2.0;
  EXPECT_NEAR(Diffusion(p).log_density(other), lp / 2.0, 1e-12 * std::abs(lp));
}

TEST(Diffusion, QoisAtZero) {
  DiffusionParameters p;
  p.cells_per_side = 16;
  Diffusion t(p);
  std::vector<double> zero(11, 0.0);
  double q[2];
  double lp = t.evaluate(zero, q);
  EXPECT_NEAR(q[0], 1.0, 1e-12);
  EXPECT_EQ(q[1], 0.0);
  EXPECT_DOUBLE_EQ(lp, t.log_density(zero));
  auto kappa = t.kappa_cells(zero);
  EXPECT_EQ(kappa.size(), 256u);
  EXPECT_TRUE(std::all_of(kappa.begin(), kappa.end(), [](double k) { return k == 1.0; }));
  EXPECT_EQ(t.lower()[0], -std::sqrt(3.0));
}

TEST(TargetProperty, BatchEqualsPointwise) {
  DiffusionParameters p;
  p.cells_per_side = 8;
  Diffusion diffusion(p);
  ShockAbsorber shock(2);
  Rosenbrock rosen(3);
  std::mt19937_64 rng(4);
  for (const TargetDensity* t : std::vector<const TargetDensity*>{&diffusion, &shock, &rosen}) {
    Matrix pts = t->reference_points(37, rng);
    Matrix qoi;
    Vector lp = evaluate_batch(*t, pts, &qoi);
    ASSERT_EQ(qoi.cols(), static_cast<Eigen::Index>(t->qoi_names().size()));
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      std::vector<double> x(pts.row(i).data(), pts.row(i).data() + 0);
      x.assign(t->dimension(), 0.0);
      for (std::size_t k = 0; k < t->dimension(); ++k) x[k] = pts(i, static_cast<Eigen::Index>(k));
      std::vector<double> q(t->qoi_names().size());
      EXPECT_EQ(lp(i), t->evaluate(x, q));
      EXPECT_TRUE(std::isfinite(lp(i)));
      for (std::size_t c = 0; c < q.size(); ++c) EXPECT_EQ(qoi(i, static_cast<Eigen::Index>(c)), q[c]);
    }
    EXPECT_EQ(max_log_density(*t, pts), lp.maxCoeff());
  }
}

#ifdef TTPDF_TEST_PLUGIN
TEST(PluginTarget, LoadsSharedLibrary) {
  auto t = load_plugin_target(TTPDF_TEST_PLUGIN);
  EXPECT_EQ(t->dimension(), 2u);
  EXPECT_EQ(t->lower()[0], -5.0);
  double x[2] = {1.0, 2.0};
  EXPECT_DOUBLE_EQ(t->log_density(x), -2.5);
  EXPECT_THROW(load_plugin_target("/nonexistent/libnothing.so"), ConfigError);
}
#endif
