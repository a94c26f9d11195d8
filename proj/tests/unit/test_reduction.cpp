#include <decrom/blackbox.hpp>
#include <decrom/deim.hpp>
#include <decrom/greedy.hpp>
#include <decrom/imex.hpp>
#include <decrom/linalg.hpp>
#include <decrom/rom.hpp>
#include <decrom/sampling.hpp>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace decrom;

namespace {

Parameter P1(double v) { return Parameter::Constant(1, v); }

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = g(rng);
  return M;
}

/// x' = x^2, x(0) = 1; blows up at t = 1.
class Riccati final : public ParametricSystem {
 public:
  Riccati() : C_(Matrix::Ones(1, 1)) { domain_ = ParameterDomain({{"a", 0.0, 1.0, AxisScale::linear}}); }
  std::string id() const override { return "riccati"; }
  Index dim() const override { return 1; }
  Index num_inputs() const override { return 1; }
  Index num_outputs() const override { return 1; }
  SparseMatrix A(const Parameter&) const override { return SparseMatrix(1, 1); }
  Matrix B(const Parameter&) const override { return Matrix::Zero(1, 1); }
  const Matrix& C() const override { return C_; }
  Vector x0(const Parameter&) const override { return Vector::Ones(1); }
  Vector input(double) const override { return Vector::Zero(1); }
  bool is_linear() const override { return false; }
  void nonlinearity(const Vector& x, const Parameter&, Vector& out) const override { out = x.array().square(); }
  void nonlinearity_rows(const Vector& x, const Parameter&, const std::vector<Index>& rows,
                         Vector& out) const override {
    out.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = x[rows[i]] * x[rows[i]];
  }
  std::vector<Index> stencil(Index row) const override { return {row}; }
  SparseMatrix nonlinearity_jacobian(const Vector& x, const Parameter&) const override {
    SparseMatrix J(1, 1);
    J.insert(0, 0) = 2.0 * x[0];
    return J;
  }

 private:
  Matrix C_;
};

/// Exhaustive DEIM index search.
std::vector<Index> deim_oracle(const Matrix& U) {
  std::vector<Index> idx;
  for (Index l = 0; l < U.cols(); ++l) {
    Vector res = U.col(l);
    if (l > 0) {
      Matrix PtU(l, l);
      Vector rhs(l);
      for (Index i = 0; i < l; ++i) {
        PtU.row(i) = U.row(idx[static_cast<std::size_t>(i)]).head(l);
        rhs[i] = U(idx[static_cast<std::size_t>(i)], l);
      }
      res -= U.leftCols(l) * PtU.fullPivLu().solve(rhs);
    }
    Index best = 0;
    for (Index i = 1; i < res.size(); ++i) {
      if (std::abs(res[i]) > std::abs(res[best])) best = i;
    }
    idx.push_back(best);
  }
  return idx;
}

}  // namespace

TEST(ReducedBasis, RankOneAndInSpanUpdates) {
  ReducedBasis basis(30);
  const Vector a = Vector::LinSpaced(30, 0.0, 1.0);
  const Matrix X = a * Vector::LinSpaced(8, 1.0, 2.0).transpose();
  EXPECT_EQ(basis.pod_update(X, 1), 1);
  EXPECT_EQ(basis.size(), 1);
  EXPECT_LE((a - basis.V() * (basis.V().transpose() * a)).norm(), 1e-12 * a.norm());
  EXPECT_EQ(basis.pod_update(2.0 * X, 1), 0);
  EXPECT_EQ(basis.size(), 1);
  EXPECT_EQ(basis.pod_update(X, 5), 0);
}

TEST(ReducedBasis, StaysOrthonormal) {
  ReducedBasis basis(80);
  for (int it = 0; it < 10; ++it) {
    basis.pod_update(random_matrix(80, 15, static_cast<std::uint64_t>(it)), 3);
    EXPECT_LE(orthonormality_error(basis.V()), 1e-12);
  }
  EXPECT_EQ(basis.size(), 30);
  EXPECT_EQ(basis.history().size(), 10u);
}

TEST(ReducedBasis, HeatTwelveModesReproduceOutput) {
  HeatModel heat(256);
  const Parameter p = P1(0.06);
  const TimeGrid grid(0.0, 0.01, 100);
  const Trajectory fom = solve_blackbox(heat, grid, SolverConfig{}, p);
  ReducedBasis basis(heat.dim());
  basis.pod_update(fom.states, 12);
  const Rom rom = galerkin_project(heat, basis.V(), p, grid, ImexScheme::imex1());
  const RomSolution sol = solve_rom_blackbox(rom, grid, SolverConfig{});
  const Matrix y = heat.C() * fom.states;
  EXPECT_LE((sol.outputs - y).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Deim, IndicesMatchBruteForceOracle) {
  const Matrix F = random_matrix(50, 20, 2024);
  const Matrix U = left_svd(F).U;
  EXPECT_EQ(deim_indices(U), deim_oracle(U));
  const DeimModel m = DeimModel::build(F, 20);
  const std::set<Index> distinct(m.indices().begin(), m.indices().end());
  EXPECT_EQ(distinct.size(), 20u);
}

TEST(Deim, ReproducesInSpanSnapshots) {
  const Matrix F = random_matrix(40, 6, 1) * random_matrix(6, 25, 2);
  const DeimModel m = DeimModel::build(F, 6);
  for (Index j = 0; j < F.cols(); ++j) {
    EXPECT_LE((m.project(F.col(j)) - F.col(j)).norm(), 1e-10 * F.col(j).norm());
  }
  EXPECT_THROW(DeimModel::build(F, 10), Error);
}

TEST(Deim, ExtendAppendsModes) {
  const Matrix F = random_matrix(40, 30, 3);
  DeimModel m = DeimModel::build(F.leftCols(10), 2);
  EXPECT_EQ(m.extend(F.rightCols(20), 3), 3);
  EXPECT_EQ(m.size(), 5);
  EXPECT_LE(orthonormality_error(m.U()), 1e-12);
}

TEST(Rom, IdentityBasisReproducesFom) {
  BurgersModel burgers(60, ConvectionStencil::central);
  const Parameter p = P1(0.05);
  const TimeGrid grid(0.0, 0.01, 50);
  const Matrix I = Matrix::Identity(60, 60);
  for (int order : {1, 2}) {
    const Trajectory fom = solve_imex(burgers, grid, ImexScheme{order}, p);
    const Rom rom = galerkin_project(burgers, I, p, grid, ImexScheme{order});
    EXPECT_LE((rom.solve(grid) - fom.states).norm(), 1e-10 * fom.states.norm());
  }
  SolverConfig cfg;
  cfg.method = BlackboxMethod::rosenbrock23;
  const Trajectory bb = solve_blackbox(burgers, grid, cfg, p);
  const Rom rom = galerkin_project(burgers, I, p, grid, ImexScheme::imex1());
  const RomSolution sol = solve_rom_blackbox(rom, grid, cfg);
  EXPECT_LE((sol.xhat - bb.states).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Rom, ProjectedOperatorsAndSymmetry) {
  HeatModel heat(64);
  const Parameter p = P1(0.03);
  const Matrix V = random_matrix(63, 5, 4).householderQr().householderQ() * Matrix::Identity(63, 5);
  const Rom rom = galerkin_project(heat, V, p, TimeGrid(0.0, 0.01, 10), ImexScheme::imex1());
  EXPECT_EQ(rom.Ahat().rows(), 5);
  EXPECT_EQ(rom.Ahat().cols(), 5);
  EXPECT_EQ(rom.Bhat().rows(), 5);
  EXPECT_EQ(rom.Chat().rows(), 1);
  EXPECT_EQ(rom.Chat().cols(), 5);
  EXPECT_EQ(rom.x0hat().size(), 5);
  EXPECT_LE((rom.Ahat() - rom.Ahat().transpose()).cwiseAbs().maxCoeff(), 1e-10 * rom.Ahat().cwiseAbs().maxCoeff());
  EXPECT_LE((rom.Ahat() - V.transpose() * Matrix(heat.A(p)) * V).norm(), 1e-10 * rom.Ahat().norm());
  EXPECT_LE((rom.x0hat() - V.transpose() * heat.x0(p)).norm(), 1e-14);
}

TEST(Rom, FullRankDeimMatchesExactProjection) {
  BurgersModel burgers(60, ConvectionStencil::central);
  const Parameter p = P1(0.02);
  const TimeGrid grid(0.0, 0.01, 100);
  const Trajectory fom = solve_imex(burgers, grid, ImexScheme::imex1(), p);
  const Matrix V = left_svd(fom.states).U.leftCols(8);
  const DeimModel deim(random_matrix(60, 60, 6).householderQr().householderQ());
  const Rom plain = galerkin_project(burgers, V, p, grid, ImexScheme::imex1());
  const Rom hyper = galerkin_project(burgers, V, p, grid, ImexScheme::imex1(), &deim);
  const Matrix y0 = plain.outputs(plain.solve(grid));
  const Matrix y1 = hyper.outputs(hyper.solve(grid));
  EXPECT_LE((y0 - y1).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Rom, CorrectedRomWithFullBasisRecoversBlackboxOutputs) {
  HeatModel heat(64);
  const Parameter p = P1(0.05);
  const TimeGrid grid(0.0, 0.01, 60);
  const Trajectory bb = solve_blackbox(heat, grid, SolverConfig{}, p);
  const ImexOperators ops(heat, p, grid.dt, ImexScheme::imex1());
  const Matrix D = compute_defect_trajectory(bb, ops);
  const Matrix I = Matrix::Identity(heat.dim(), heat.dim());
  const Rom rom = galerkin_project(heat, I, p, grid, ImexScheme::imex1());
  const Matrix xhat = rom.solve(grid, &D);
  const Matrix y = heat.C() * bb.states;
  EXPECT_LE((rom.outputs(xhat) - y).cwiseAbs().maxCoeff(), 1e-8 * y.cwiseAbs().maxCoeff());
}

namespace {

std::vector<Parameter> heat_train(Index n) {
  std::vector<Parameter> out;
  for (Index i = 0; i < n; ++i) out.push_back(P1(0.01 + 0.09 * static_cast<double>(i) / static_cast<double>(n - 1)));
  return out;
}

}  // namespace

TEST(Rom, BlowUpRaisesDivergence) {
  const Riccati sys;
  const Rom rom(sys, Matrix::Identity(1, 1), P1(0.5), 0.1, ImexScheme::imex1(), nullptr);
  try {
    solve_crom(rom, nullptr, TimeGrid(0.0, 0.1, 40));
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.kind(), "divergence");
  }
}

TEST(Greedy, StandardMatchedSchemeConvergesOnHeat) {
  HeatModel heat(64);
  const TimeGrid grid(0.0, 0.01, 50);
  GreedyOptions opt;
  opt.tol = 1e-6;
  opt.snapshots = SnapshotSource::imposed;
  opt.max_iterations = 20;
  const GreedyResult res = pod_greedy_standard(heat, heat_train(12), grid, opt);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(res.history.back().epsilon, opt.tol);
  EXPECT_LE(orthonormality_error(res.V), 1e-12);
  std::set<Index> chosen;
  for (const auto& it : res.history) EXPECT_TRUE(chosen.insert(it.selected_index).second);
}

TEST(Greedy, SingleTrainingParameter) {
  HeatModel heat(64);
  const TimeGrid grid(0.0, 0.01, 30);
  GreedyOptions opt;
  opt.tol = 1e-3;
  opt.snapshots = SnapshotSource::imposed;
  opt.r_c = 10;
  const GreedyResult res = pod_greedy_standard(heat, {P1(0.05)}, grid, opt);
  EXPECT_EQ(res.history.size(), 1u);
  EXPECT_TRUE(res.converged);
}

TEST(Greedy, DataEnhancedGreedyOnHeatIsDeterministic) {
  HeatModel heat(64);
  const TimeGrid grid(0.0, 0.01, 50);
  const auto train = heat_train(12);
  GreedyOptions opt;
  opt.tol = 1e-5;
  opt.max_iterations = 15;
  std::vector<GreedyIteration> seen;
  const GreedyResult a = pod_greedy_ode(heat, train, {0, 4, 8, 11}, grid, opt,
                                        [&](const GreedyIteration& it) { seen.push_back(it); });
  const GreedyResult b = pod_greedy_ode(heat, train, {0, 4, 8, 11}, grid, opt);
  EXPECT_TRUE(a.converged);
  ASSERT_EQ(a.history.size(), b.history.size());
  EXPECT_EQ(seen.size(), a.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].selected_index, b.history[i].selected_index);
    EXPECT_EQ(a.history[i].epsilon, b.history[i].epsilon);
  }
  EXPECT_EQ(a.history.front().selected_index, 0);
  EXPECT_LE(orthonormality_error(a.V), 1e-12);
  ASSERT_TRUE(a.closure.has_value());
  std::set<Index> chosen;
  for (const auto& it : a.history) EXPECT_TRUE(chosen.insert(it.selected_index).second);
}

TEST(Greedy, OptionsValidation) {
  GreedyOptions opt;
  opt.tol = -1.0;
  EXPECT_THROW(opt.validate(), ConfigError);
  GreedyOptions rc;
  rc.r_c = 0;
  EXPECT_THROW(rc.validate(), ConfigError);
  EXPECT_EQ(standard_estimator_from_string("calibrated"), StandardEstimator::calibrated);
  EXPECT_EQ(snapshot_source_from_string("imposed"), SnapshotSource::imposed);
}
