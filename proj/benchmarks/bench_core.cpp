#include <decrom/blackbox.hpp>
#include <decrom/deim.hpp>
#include <decrom/defect.hpp>
#include <decrom/imex.hpp>
#include <decrom/linalg.hpp>
#include <decrom/models.hpp>
#include <decrom/rbf.hpp>
#include <decrom/rom.hpp>
#include <decrom/sampling.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace decrom;

namespace {

Parameter scalar(double v) {
  Parameter p(1);
  p << v;
  return p;
}

Matrix random_matrix(Index rows, Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix M(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) M(i, j) = g(rng);
  return M;
}

}  // namespace

static void BM_BlackboxHeat(benchmark::State& state) {
  const auto heat = assemble("heat", state.range(0));
  const TimeGrid grid(0.0, 0.01, 100);
  SolverConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_blackbox(*heat, grid, cfg, scalar(0.06)).states.data());
  }
}
BENCHMARK(BM_BlackboxHeat)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_BlackboxBurgers(benchmark::State& state) {
  const auto burgers = assemble("burgers", 1000);
  const TimeGrid grid(0.0, 0.01, 200);
  SolverConfig cfg;
  cfg.method = static_cast<BlackboxMethod>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_blackbox(*burgers, grid, cfg, scalar(0.05)).states.data());
  }
}
BENCHMARK(BM_BlackboxBurgers)
    ->Arg(static_cast<int>(BlackboxMethod::rosenbrock23))
    ->Arg(static_cast<int>(BlackboxMethod::switching))
    ->Unit(benchmark::kMillisecond);

static void BM_ImexBurgers(benchmark::State& state) {
  const auto burgers = assemble("burgers", 1000);
  const TimeGrid grid(0.0, 0.01, 200);
  const ImexScheme scheme{static_cast<int>(state.range(0))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_imex(*burgers, grid, scheme, scalar(0.05)).states.data());
  }
}
BENCHMARK(BM_ImexBurgers)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_DefectTrajectory(benchmark::State& state) {
  const auto burgers = assemble("burgers", 1000);
  const TimeGrid grid(0.0, 0.01, 200);
  const Parameter p = scalar(0.05);
  const Trajectory traj = solve_imex(*burgers, grid, ImexScheme{2}, p);
  const ImexOperators ops(*burgers, p, grid.dt, ImexScheme{1});
  for (auto _ : state) benchmark::DoNotOptimize(compute_defect_trajectory(traj, ops).data());
}
BENCHMARK(BM_DefectTrajectory)->Unit(benchmark::kMillisecond);

static void BM_TwoStageSvd(benchmark::State& state) {
  DefectTensor tensor;
  tensor.grid = TimeGrid(0.0, 0.01, 100);
  tensor.scheme = ImexScheme{1};
  const Matrix modes = random_matrix(500, 10, 1);
  for (Index i = 0; i < state.range(0); ++i) {
    Matrix slice = modes * random_matrix(10, tensor.grid.size(), static_cast<unsigned>(i + 2));
    slice.col(0).setZero();
    tensor.slices.push_back(slice);
    tensor.params.push_back(scalar(0.1 + 0.01 * static_cast<double>(i)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(two_stage_svd(tensor, 1e-4, 1e-4).Vd.data());
}
BENCHMARK(BM_TwoStageSvd)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_RbfEvalAll(benchmark::State& state) {
  const auto burgers = assemble("burgers", 100);
  const auto params = line_samples(burgers->domain(), 16);
  std::vector<Matrix> reduced;
  for (std::size_t i = 0; i < params.size(); ++i) {
    reduced.push_back(random_matrix(state.range(0), 201, static_cast<unsigned>(i)));
  }
  const RbfInterpolant rbf = RbfInterpolant::fit(reduced, params, burgers->domain());
  const Parameter p = scalar(0.02);
  for (auto _ : state) benchmark::DoNotOptimize(rbf.eval_all(p).data());
}
BENCHMARK(BM_RbfEvalAll)->Arg(12)->Arg(48)->Unit(benchmark::kMicrosecond);

static void BM_RomSolve(benchmark::State& state) {
  const auto heat = assemble("heat", 256);
  const TimeGrid grid(0.0, 0.01, 100);
  const Parameter p = scalar(0.06);
  const Trajectory traj = solve_imex(*heat, grid, ImexScheme{1}, p);
  const Matrix V = left_svd(traj.states).U.leftCols(state.range(0));
  const Rom rom(*heat, V, p, grid.dt, ImexScheme{1});
  for (auto _ : state) benchmark::DoNotOptimize(rom.solve(grid).data());
}
BENCHMARK(BM_RomSolve)->Arg(6)->Arg(12)->Unit(benchmark::kMicrosecond);

static void BM_DeimIndices(benchmark::State& state) {
  const Matrix U = left_svd(random_matrix(1000, state.range(0), 7)).U;
  for (auto _ : state) benchmark::DoNotOptimize(deim_indices(U).data());
}
BENCHMARK(BM_DeimIndices)->Arg(10)->Arg(40)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
