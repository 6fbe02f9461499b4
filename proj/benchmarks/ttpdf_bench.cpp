#include "ttpdf/fem.hpp"
#include "ttpdf/qmc.hpp"
#include "ttpdf/shock_absorber.hpp"
#include "ttpdf/tt_cd.hpp"
#include "ttpdf/tt_cross.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace ttpdf;

namespace {

TTTensor random_tt(std::size_t d, std::size_t n, std::size_t r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Grid grid = Grid::uniform(d, 0.0, 1.0, n);
  std::vector<std::size_t> ranks(d + 1, r);
  ranks.front() = ranks.back() = 1;
  std::vector<std::vector<double>> blocks;
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> b(ranks[k] * n * ranks[k + 1]);
    for (auto& v : b) v = u(rng);
    blocks.push_back(std::move(b));
  }
  return TTTensor(grid, ranks, std::move(blocks));
}

void BM_EvalPoint(benchmark::State& state) {
  auto tt = random_tt(8, 32, static_cast<std::size_t>(state.range(0)), 1);
  std::vector<double> x(8, 0.37);
  for (auto _ : state) benchmark::DoNotOptimize(eval_point(tt, x));
}
BENCHMARK(BM_EvalPoint)->Arg(4)->Arg(16)->Arg(64);

void BM_CrossShock(benchmark::State& state) {
  ShockAbsorber target(2);
  auto n = static_cast<std::size_t>(state.range(0));
  Grid grid = target.make_grid(std::vector<std::size_t>(4, n));
  std::mt19937_64 rng(3);
  Matrix ref = target.reference_points(64, rng);
  for (auto _ : state) {
    CrossConfig cc;
    cc.delta = 1e-3;
    double shift = 0.0;
    cc.initial_points = seed_points(target, grid, ref, shift);
    benchmark::DoNotOptimize(cross_approximate_density(target, grid, cc, shift));
  }
}
BENCHMARK(BM_CrossShock)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Transform(benchmark::State& state) {
  CDSampler sampler(random_tt(8, 32, static_cast<std::size_t>(state.range(0)), 2));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix seeds = Matrix::NullaryExpr(4096, 8, [&]() { return u(rng); });
  for (auto _ : state) benchmark::DoNotOptimize(sampler.transform(seeds));
  state.SetItemsProcessed(state.iterations() * seeds.rows());
}
BENCHMARK(BM_Transform)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Cbc(benchmark::State& state) {
  auto n = std::size_t{1} << state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(build_generating_vector(11, n));
}
BENCHMARK(BM_Cbc)->Arg(10)->Arg(14)->Arg(18)->Unit(benchmark::kMillisecond);

void BM_FemSolve(benchmark::State& state) {
  BilinearFem fem(static_cast<std::size_t>(state.range(0)));
  std::vector<double> kappa(fem.cells_per_side() * fem.cells_per_side(), 1.0);
  for (std::size_t i = 0; i < kappa.size(); i += 3) kappa[i] = 2.0;
  for (auto _ : state) {
    auto u = fem.solve(kappa);
    benchmark::DoNotOptimize(fem.flux(u, kappa));
  }
}
BENCHMARK(BM_FemSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
