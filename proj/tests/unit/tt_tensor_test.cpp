#include "test_support.hpp"
#include "ttpdf/errors.hpp"
#include "ttpdf/maxvol.hpp"
#include "ttpdf/tt_io.hpp"
#include "ttpdf/tt_tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace ttpdf;
using ttpdf::test::brute_force_full;
using ttpdf::test::random_tt;

TEST(Grid, RejectsDegenerateAndUnsortedNodes) {
  EXPECT_THROW(Grid(std::vector<std::vector<double>>{{0.0}}), DomainError);
  EXPECT_THROW(Grid(std::vector<std::vector<double>>{{0.0, 0.0, 1.0}}), DomainError);
  EXPECT_THROW(Grid(std::vector<std::vector<double>>{{1.0, 0.0}}), DomainError);
  EXPECT_NO_THROW(Grid(std::vector<std::vector<double>>{{0.0, 1.0}}));
}

TEST(Grid, LocateFindsCellAndLocalCoordinate) {
  Grid g(std::vector<std::vector<double>>{{0.0, 1.0, 3.0}});
  auto [i, t] = g.locate(0, 2.0);
  EXPECT_EQ(i, 1u);
  EXPECT_DOUBLE_EQ(t, 0.5);
  auto [j, s] = g.locate(0, 3.0);
  EXPECT_EQ(j, 1u);
  EXPECT_DOUBLE_EQ(s, 1.0);
  EXPECT_THROW(g.locate(0, 3.5), DomainError);
}

TEST(TTTensor, ConstructorChecksRankChain) {
  Grid g = test::unit_grid(2, 3);
  EXPECT_THROW(TTTensor(g, {1, 2, 2}, {std::vector<double>(6), std::vector<double>(6)}), DomainError);
  EXPECT_THROW(TTTensor(g, {1, 2, 1}, {std::vector<double>(6), std::vector<double>(5)}), DomainError);
  TTTensor tt(g, {1, 2, 1}, {std::vector<double>(6), std::vector<double>(6)});
  EXPECT_EQ(tt.storage_size(), 12u);
}

TEST(EvalIndex, OuterProductOfRankOneBlocks) {
  Grid g(std::vector<std::vector<double>>{{0.0, 1.0}, {0.0, 1.0}});
  auto tt = TTTensor::rank_one(g, {{1.0, 2.0}, {3.0, 4.0}});
  std::vector<std::size_t> idx{1, 0};
  EXPECT_DOUBLE_EQ(eval_index(tt, idx), 6.0);
}

TEST(EvalIndex, UnitConstantIsOne) {
  auto tt = TTTensor::constant(test::unit_grid(4, 3), 1.0);
  std::vector<std::size_t> idx{2, 0, 1, 2};
  EXPECT_DOUBLE_EQ(eval_index(tt, idx), 1.0);
}

TEST(EvalIndex, MatchesBruteForceContractionOnAllIndices) {
  std::mt19937_64 rng(11);
  auto tt = random_tt(test::unit_grid(3, 4), {1, 2, 3, 1}, rng);
  auto full_values = brute_force_full(tt);
  ASSERT_EQ(full_values.size(), 64u);
  for (std::size_t lin = 0; lin < 64; ++lin) {
    std::vector<std::size_t> idx{lin % 4, (lin / 4) % 4, lin / 16};
    EXPECT_NEAR(eval_index(tt, idx), full_values[lin], 1e-13);
  }
}

TEST(EvalIndex, OutOfRangeThrows) {
  auto tt = TTTensor::constant(test::unit_grid(2, 3), 1.0);
  std::vector<std::size_t> idx{0, 3};
  EXPECT_THROW(eval_index(tt, idx), DomainError);
}

TEST(EvalIndexProperty, RandomSmallTensors) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> dim(1, 3), size(2, 5), rank(1, 4);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t d = dim(rng);
    std::vector<std::vector<double>> nodes;
    for (std::size_t k = 0; k < d; ++k) {
      std::size_t n = size(rng);
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) + 0.1 * static_cast<double>(k);
      nodes.push_back(x);
    }
    Grid g(nodes);
    std::vector<std::size_t> ranks(d + 1, 1);
    for (std::size_t k = 1; k < d; ++k) ranks[k] = rank(rng);
    auto tt = random_tt(g, ranks, rng);
    auto ref = brute_force_full(tt);
    auto fast = full(tt);
    ASSERT_EQ(ref.size(), fast.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(fast[i], ref[i], 1e-12);
  }
}

TEST(EvalPoint, LinearInterpolationInOneDimension) {
  Grid g(std::vector<std::vector<double>>{{0.0, 1.0}});
  TTTensor tt(g, {1, 1}, {{0.0, 2.0}});
  std::vector<double> x{0.25};
  EXPECT_DOUBLE_EQ(eval_point(tt, x), 0.5);
}

TEST(EvalPoint, BilinearProductAtCentre) {
  Grid g(std::vector<std::vector<double>>{{0.0, 1.0}, {0.0, 1.0}});
  auto tt = TTTensor::rank_one(g, {{0.0, 1.0}, {0.0, 1.0}});
  std::vector<double> x{0.5, 0.5};
  // Hand evaluation: f = x*y is bilinear, so the interpolant is exact.
  EXPECT_DOUBLE_EQ(eval_point(tt, x), 0.25);
}

TEST(EvalPoint, ReproducesNodesAndRejectsOutside) {
  std::mt19937_64 rng(3);
  Grid g = test::unit_grid(3, 5);
  auto tt = random_tt(g, {1, 2, 2, 1}, rng);
  std::vector<std::size_t> idx{1, 4, 2};
  auto x = g.point(idx);
  EXPECT_NEAR(eval_point(tt, x), eval_index(tt, idx), 1e-14);
  std::vector<double> bad{0.5, 1.5, 0.5};
  EXPECT_THROW(eval_point(tt, bad), DomainError);
}

TEST(Integrate, UnitConstantOnUnitBox) {
  EXPECT_NEAR(integrate(TTTensor::constant(test::unit_grid(5, 7), 1.0)), 1.0, 1e-14);
}

TEST(Integrate, TriangleArea) {
  Grid g(std::vector<std::vector<double>>{{0.0, 1.0}});
  EXPECT_DOUBLE_EQ(integrate(TTTensor(g, {1, 1}, {{0.0, 2.0}})), 1.0);
}

TEST(Integrate, SeparableRampsMatchPerDimensionTrapezoid) {
  Grid g(std::vector<std::vector<double>>{{0.0, 0.5, 2.0}, {-1.0, 0.0, 1.0, 3.0}, {1.0, 2.0}});
  std::vector<std::vector<double>> f{{1.0, 2.0, 5.0}, {0.5, 1.5, 2.5, 4.0}, {3.0, 1.0}};
  double expected = 1.0;
  for (std::size_t k = 0; k < 3; ++k) {
    double s = 0.0;
    const auto& x = g.nodes(k);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (x[i + 1] - x[i]) * (f[k][i] + f[k][i + 1]);
    expected *= s;
  }
  EXPECT_NEAR(integrate(TTTensor::rank_one(g, f)), expected, 1e-13);
}

TEST(Integrate, LinearUnderBlockConcatenation) {
  std::mt19937_64 rng(9);
  Grid g = test::unit_grid(3, 6);
  auto a = random_tt(g, {1, 2, 3, 1}, rng);
  auto b = random_tt(g, {1, 3, 2, 1}, rng);
  double alpha = 0.7, beta = -1.3;
  EXPECT_NEAR(integrate(add(a, b, alpha, beta)), alpha * integrate(a) + beta * integrate(b), 1e-12);
}

TEST(PartialIntegrals, NormalizedFactorsGiveOnes) {
  Grid g = test::unit_grid(3, 3);
  std::vector<double> f{1.0, 1.0, 1.0};
  auto tt = TTTensor::rank_one(g, {f, f, f});
  auto p = partial_integrals(tt);
  ASSERT_EQ(p.size(), 4u);
  for (const auto& v : p) {
    ASSERT_EQ(v.size(), 1);
    EXPECT_NEAR(v(0), 1.0, 1e-15);
  }
}

TEST(PartialIntegrals, SmallRankTwoCaseByHand) {
  Grid g(std::vector<std::vector<double>>{{0.0, 1.0}, {0.0, 1.0}});
  // Block 2 is 2 x 2 x 1: rows alpha, columns node.
  std::vector<double> b1{1.0, 2.0, 3.0, 4.0};  // (0,i,a): a + 1*(i + 2a)
  std::vector<double> b2{1.0, 2.0, 3.0, 5.0};  // (a,i,0): a + 2*i
  TTTensor tt(g, {1, 2, 1}, {b1, b2});
  auto p = partial_integrals(tt);
  // P_2 entry a = 0.5*(B2(a,0) + B2(a,1)).
  EXPECT_DOUBLE_EQ(p[1](0), 0.5 * (1.0 + 3.0));
  EXPECT_DOUBLE_EQ(p[1](1), 0.5 * (2.0 + 5.0));
  double direct = 0.5 * (b1[0] + b1[1]) * p[1](0) + 0.5 * (b1[2] + b1[3]) * p[1](1);
  EXPECT_DOUBLE_EQ(p[0](0), direct);
  EXPECT_DOUBLE_EQ(integrate(tt), direct);
}

TEST(FrobeniusDistance, IdentitiesAndBruteForce) {
  std::mt19937_64 rng(21);
  Grid g = test::unit_grid(3, 4);
  auto a = random_tt(g, {1, 2, 3, 1}, rng);
  auto b = random_tt(g, {1, 3, 2, 1}, rng);
  EXPECT_NEAR(frobenius_distance(a, a), 0.0, 1e-12 * frobenius_norm(a));
  EXPECT_NEAR(frobenius_distance(a, scale(a, 2.0)), frobenius_norm(a), 1e-12 * frobenius_norm(a));
  auto fa = brute_force_full(a), fb = brute_force_full(b);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] -= fb[i];
  double ref = test::norm2(fa);
  EXPECT_NEAR(frobenius_distance(a, b), ref, 1e-12 * ref);
  EXPECT_NEAR(inner_product(a, a), frobenius_norm(a) * frobenius_norm(a), 1e-10 * inner_product(a, a));
}

TEST(FrobeniusDistance, GridMismatchThrows) {
  auto a = TTTensor::constant(test::unit_grid(2, 3), 1.0);
  auto b = TTTensor::constant(test::unit_grid(2, 4), 1.0);
  EXPECT_THROW(frobenius_distance(a, b), DomainError);
}

TEST(Round, RedundantRankThreeBecomesRankOne) {
  std::mt19937_64 rng(4);
  Grid g = test::unit_grid(4, 5);
  auto one = random_tt(g, {1, 1, 1, 1, 1}, rng);
  auto three = add(add(one, one, 1.0, 2.0), one, 1.0, -0.5);  // 2.5 * one with ranks 3
  ASSERT_EQ(three.max_rank(), 3u);
  auto r = round(three, 1e-10);
  for (auto k : r.ranks()) EXPECT_EQ(k, 1u);
  EXPECT_NEAR(frobenius_distance(r, scale(one, 2.5)), 0.0, 1e-10 * frobenius_norm(r));
}

TEST(Round, ZeroToleranceKeepsValues) {
  std::mt19937_64 rng(6);
  auto tt = random_tt(test::unit_grid(3, 4), {1, 3, 3, 1}, rng);
  auto r = round(tt, 0.0);
  for (std::size_t k = 0; k <= 3; ++k) EXPECT_LE(r.rank(k), tt.rank(k));
  EXPECT_LT(frobenius_distance(r, tt), 1e-12 * frobenius_norm(tt));
}

TEST(RoundProperty, ErrorBoundHolds) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> rank(1, 5);
  for (int trial = 0; trial < 30; ++trial) {
    Grid g = test::unit_grid(4, 5);
    std::vector<std::size_t> ranks{1, rank(rng), rank(rng), rank(rng), 1};
    auto tt = random_tt(g, ranks, rng);
    for (double delta : {0.0, 1e-3, 0.1, 0.5}) {
      auto r = round(tt, delta);
      for (std::size_t k = 0; k <= 4; ++k) EXPECT_LE(r.rank(k), tt.rank(k));
      EXPECT_LE(frobenius_distance(r, tt), delta * frobenius_norm(tt) + 1e-12 * frobenius_norm(tt));
    }
  }
}

namespace {

double det(const Matrix& m) { return m.determinant(); }

}  // namespace

TEST(Maxvol, SmallExampleMatchesExhaustiveSearch) {
  Matrix m(3, 2);
  m << 1, 2, 3, 4, 5, 10;
  auto rows = maxvol(m);
  std::sort(rows.begin(), rows.end());
  // Exhaustive: |det| of row pairs {0,1}=2, {0,2}=0, {1,2}=10.
  double best = 0.0;
  std::vector<std::size_t> best_rows;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) {
      Matrix s(2, 2);
      s.row(0) = m.row(static_cast<Eigen::Index>(i));
      s.row(1) = m.row(static_cast<Eigen::Index>(j));
      if (std::abs(det(s)) > best) {
        best = std::abs(det(s));
        best_rows = {i, j};
      }
    }
  EXPECT_EQ(rows, best_rows);
  EXPECT_EQ(rows, (std::vector<std::size_t>{1, 2}));
}

TEST(Maxvol, SquareReturnsAllRows) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  Matrix m(4, 4);
  for (Eigen::Index i = 0; i < 16; ++i) m.data()[i] = normal(rng);
  auto rows = maxvol(m);
  std::sort(rows.begin(), rows.end());
  EXPECT_EQ(rows, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Maxvol, RankDeficientThrows) {
  Matrix m(4, 2);
  m << 1, 2, 2, 4, 3, 6, 4, 8;
  EXPECT_THROW(maxvol(m), NumericError);
}

TEST(MaxvolProperty, EntryBoundAndLocalOptimality) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> rows_d(3, 40), cols_d(1, 6);
  for (int trial = 0; trial < 50; ++trial) {
    int r = cols_d(rng);
    int mrows = std::max(r, rows_d(rng));
    Matrix m(mrows, r);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    MaxvolOptions opt;
    auto rows = maxvol(m, opt);
    Matrix sub(r, r);
    for (int j = 0; j < r; ++j) sub.row(j) = m.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(j)]));
    Matrix b = m * sub.inverse();
    EXPECT_LE(b.cwiseAbs().maxCoeff(), 1.0 + opt.tolerance + 1e-10);
    double base = std::abs(sub.determinant());
    // Any single swap multiplies |det| by |b(i,j)| <= 1 + tol.
    for (int i = 0; i < mrows; ++i)
      for (int j = 0; j < r; ++j) {
        Matrix s = sub;
        s.row(j) = m.row(i);
        EXPECT_LE(std::abs(s.determinant()), base * (1.0 + opt.tolerance) * (1.0 + 1e-9));
      }
  }
}

TEST(MaxvolProperty, MatchesBruteForceDeterminantOnSmallMatrices) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal;
  int agree = 0;
  for (int trial = 0; trial < 40; ++trial) {
    Matrix m(6, 2);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    auto rows = maxvol(m, {0.0, 100});
    Matrix s(2, 2);
    s.row(0) = m.row(static_cast<Eigen::Index>(rows[0]));
    s.row(1) = m.row(static_cast<Eigen::Index>(rows[1]));
    double got = std::abs(s.determinant()), best = 0.0;
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j) {
        Matrix t(2, 2);
        t.row(0) = m.row(i);
        t.row(1) = m.row(j);
        best = std::max(best, std::abs(t.determinant()));
      }
    // With tol = 0 the result is locally optimal; for r = 2 it is within a factor of the optimum.
    EXPECT_GE(got, best / 2.0 - 1e-12);
    if (std::abs(got - best) <= 1e-12 * best) ++agree;
  }
  EXPECT_GE(agree, 30);
}

TEST(TTIO, RoundTripIsBitwise) {
  std::mt19937_64 rng(31);
  Grid g(std::vector<std::vector<double>>{{0.0, 0.3, 1.0}, {-2.0, -1.0, 0.0, 4.0}, {5.0, 6.0}});
  auto tt = random_tt(g, {1, 2, 3, 1}, rng);
  std::stringstream s;
  write_tt(s, tt);
  std::string bytes = s.str();
  EXPECT_EQ(bytes.substr(0, 7), "TTPDF1\n");
  auto back = read_tt(s);
  EXPECT_TRUE(back.grid() == tt.grid());
  EXPECT_EQ(back.ranks(), tt.ranks());
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < tt.block(k).size(); ++i) EXPECT_EQ(back.block(k)[i], tt.block(k)[i]);
}

TEST(TTIO, RejectsBadMagicAndTruncation) {
  std::stringstream bad("NOTATT\n");
  EXPECT_THROW(read_tt(bad), DomainError);
  std::mt19937_64 rng(1);
  auto tt = random_tt(test::unit_grid(2, 3), {1, 2, 1}, rng);
  std::stringstream s;
  write_tt(s, tt);
  std::string cut = s.str().substr(0, s.str().size() - 4);
  std::stringstream t(cut);
  EXPECT_THROW(read_tt(t), DomainError);
}
