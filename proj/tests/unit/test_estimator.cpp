#include <decrom/blackbox.hpp>
#include <decrom/defect.hpp>
#include <decrom/estimator.hpp>
#include <decrom/imex.hpp>
#include <decrom/linalg.hpp>
#include <decrom/rom.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace decrom;

namespace {

Parameter P1(double v) { return Parameter::Constant(1, v); }

struct HeatCase {
  HeatModel heat{64};
  Parameter p = P1(0.05);
  TimeGrid grid{0.0, 0.01, 40};
  Trajectory fom;
  Matrix D;
  Matrix V;

  explicit HeatCase(Index n) {
    fom = solve_blackbox(heat, grid, SolverConfig{}, p);
    const ImexOperators ops(heat, p, grid.dt, ImexScheme::imex1());
    D = compute_defect_trajectory(fom, ops);
    V = left_svd(fom.states).U.leftCols(n);
  }
};

}  // namespace

TEST(Residual, FullBasisWithExactDefectVanishes) {
  HeatCase hc(1);
  const Matrix I = Matrix::Identity(hc.heat.dim(), hc.heat.dim());
  const ImexOperators ops(hc.heat, hc.p, hc.grid.dt, ImexScheme::imex1());
  const Rom rom(hc.heat, I, hc.p, hc.grid.dt, ImexScheme::imex1());
  const Matrix dhat = hc.D;
  const Matrix xhat = rom.solve(hc.grid, &dhat);
  const CorrectedResidual r = residual_corrected(ops, I, xhat, &hc.D, hc.grid);
  EXPECT_LE(r.norms.maxCoeff(), 1e-8);
  EXPECT_EQ(r.norms[0], 0.0);
}

TEST(Residual, MatchesTermwiseAssembly) {
  HeatCase hc(4);
  for (int order : {1, 2}) {
    const ImexOperators ops(hc.heat, hc.p, hc.grid.dt, ImexScheme{order});
    const Rom rom(hc.heat, hc.V, hc.p, hc.grid.dt, ImexScheme{order});
    const Matrix xhat = rom.solve(hc.grid);
    const Matrix Xt = hc.V * xhat;
    for (const Matrix* closure : std::initializer_list<const Matrix*>{nullptr, &hc.D}) {
      const CorrectedResidual r = residual_corrected(ops, hc.V, xhat, closure, hc.grid);
      const Matrix A = Matrix(hc.heat.A(hc.p));
      const Matrix I = Matrix::Identity(A.rows(), A.cols());
      const double dt = hc.grid.dt;
      for (Index k = 1; k < hc.grid.size(); ++k) {
        Vector expected;
        if (order == 1 || k == 1) {
          expected = Xt.col(k - 1) - (I - dt * A) * Xt.col(k);
        } else {
          expected = (I + 0.5 * dt * A) * Xt.col(k - 1) - (I - 0.5 * dt * A) * Xt.col(k);
        }
        if (closure) expected += closure->col(k);
        EXPECT_LE((r.r.col(k) - expected).norm(), 1e-12 * (1.0 + expected.norm())) << "k=" << k;
        EXPECT_NEAR(r.norms[k], expected.norm(), 1e-12 * (1.0 + expected.norm()));
      }
    }
  }
}

TEST(Residual, ZeroDefectEqualsNaiveResidualOfSchemeAtRomStates) {
  HeatCase hc(5);
  const ImexOperators ops(hc.heat, hc.p, hc.grid.dt, ImexScheme::imex1());
  const Rom rom(hc.heat, hc.V, hc.p, hc.grid.dt, ImexScheme::imex1());
  const Matrix xhat = rom.solve(hc.grid);
  const Matrix zero = Matrix::Zero(hc.heat.dim(), hc.grid.size());
  const CorrectedResidual a = residual_corrected(ops, hc.V, xhat, nullptr, hc.grid);
  const CorrectedResidual b = residual_corrected(ops, hc.V, xhat, &zero, hc.grid);
  const Matrix naive = scheme_residual(hc.V * xhat, ops, hc.grid);
  EXPECT_LE((a.r - naive).norm(), 1e-14 * (1.0 + naive.norm()));
  EXPECT_LE((b.r - naive).norm(), 1e-14 * (1.0 + naive.norm()));
  for (Index k = 1; k < hc.grid.size(); ++k) {
    EXPECT_NEAR(residual_corrected_at(ops, hc.V * xhat, nullptr, hc.grid, k).norm(), a.norms[k], 1e-14);
  }
}

TEST(AuxiliaryResidual, FormsAgreeAndVanishForFullBasis) {
  HeatCase hc(3);
  for (int order : {1, 2}) {
    const ImexOperators ops(hc.heat, hc.p, hc.grid.dt, ImexScheme{order});
    const Matrix D = compute_defect_trajectory(hc.fom, ops);
    const Rom rom(hc.heat, hc.V, hc.p, hc.grid.dt, ImexScheme{order});
    const Matrix dhat = hc.V.transpose() * D;
    const Matrix Xt = hc.V * rom.solve(hc.grid, &dhat);
    const Matrix a = auxiliary_residual(ops, hc.fom.states, Xt, &D, hc.grid);
    const Matrix b = auxiliary_residual_identity(ops, hc.fom.states, Xt, hc.grid);
    EXPECT_LE((a - b).norm(), 1e-10 * b.norm());
    for (Index k = 1; k < hc.grid.size(); ++k) {
      EXPECT_GT(a.col(k).norm(), 0.0);
      EXPECT_TRUE(a.col(k).allFinite());
    }
    EXPECT_LE(auxiliary_residual(ops, hc.fom.states, hc.fom.states, &D, hc.grid).norm(), 1e-12 * hc.fom.states.norm());
  }
}

TEST(RhoBar, DegenerateAndIdentityCases) {
  Vector zero = Vector::Zero(6);
  EXPECT_DOUBLE_EQ(rho_bar(zero, zero).value, 1.0);
  Vector r(6);
  r << 0.0, 1.0, 2.0, 3.0, 0.5, 0.1;
  EXPECT_DOUBLE_EQ(rho_bar(r, r).value, 1.0);
  Vector aux = r;
  aux[3] = 1.0;
  Vector bad = r;
  bad[2] = 0.0;
  EXPECT_THROW(rho_bar(aux, bad), EstimatorError);
}

TEST(RhoBar, MatchesLoopOracleOnHeat) {
  HeatCase hc(5);
  const ImexOperators ops(hc.heat, hc.p, hc.grid.dt, ImexScheme::imex1());
  const Rom rom(hc.heat, hc.V, hc.p, hc.grid.dt, ImexScheme::imex1());
  const Matrix dhat = hc.V.transpose() * hc.D;
  const Matrix xhat = rom.solve(hc.grid, &dhat);
  const CorrectedResidual r = residual_corrected(ops, hc.V, xhat, &hc.D, hc.grid);
  const Matrix aux = auxiliary_residual(ops, hc.fom.states, hc.V * xhat, &hc.D, hc.grid);
  Vector aux_norms(hc.grid.size());
  for (Index k = 0; k < hc.grid.size(); ++k) aux_norms[k] = aux.col(k).norm();
  double sum = 0.0;
  for (Index k = 1; k <= hc.grid.K; ++k) sum += aux.col(k).norm() / r.r.col(k).norm();
  EXPECT_NEAR(rho_bar(aux_norms, r.norms).value, sum / static_cast<double>(hc.grid.K), 1e-12 * sum);
}

TEST(Dual, FullSolveMatchesDenseOracle) {
  HeatModel heat(256);
  const Parameter p = P1(0.06);
  for (int order : {1, 2}) {
    const ImexOperators ops(heat, p, 0.01, ImexScheme{order});
    const DualSolution d = solve_dual(ops, heat.C());
    const Matrix E = Matrix(ops.E_im());
    const Matrix oracle = E.transpose().fullPivLu().solve(-heat.C().transpose());
    EXPECT_LE((d.x_du - oracle).norm(), 1e-10 * oracle.norm());
    EXPECT_LE(d.r_du.norm(), 1e-10 * oracle.norm());
    EXPECT_FALSE(d.reduced);
  }
}

TEST(Dual, IdentityLimitAndIdentityBasis) {
  HeatModel heat(32);
  const ImexOperators tiny(heat, P1(0.05), 1e-14, ImexScheme::imex1());
  const DualSolution d = solve_dual(tiny, heat.C());
  EXPECT_LE((d.x_du + heat.C().transpose()).norm(), 1e-9);

  const ImexOperators ops(heat, P1(0.05), 0.01, ImexScheme::imex1());
  const Matrix I = Matrix::Identity(heat.dim(), heat.dim());
  const DualSolution r = solve_dual(ops, heat.C(), &I);
  EXPECT_TRUE(r.reduced);
  EXPECT_LE(r.r_du.norm(), 1e-12);
}

TEST(OperatorNorms, PowerIterationAgainstDenseSvd) {
  HeatModel heat(64);
  for (int order : {1, 2}) {
    const ImexOperators ops(heat, P1(0.05), 0.01, ImexScheme{order});
    const OperatorNorms n = estimate_operator_norms(ops, 200, 1e-12);
    const Matrix Einv = Matrix(ops.E_im()).inverse();
    const double a = Einv.jacobiSvd().singularValues()[0];
    const double b = (Einv * Matrix(ops.A_im())).jacobiSvd().singularValues()[0];
    EXPECT_NEAR(n.Einv, a, 1e-6 * a);
    EXPECT_NEAR(n.Einv_Aim, b, 1e-6 * b);
  }
}

TEST(StateBound, RecurrenceMatchesClosedForm) {
  StateBoundConstants c{0.9, 1.05};
  Vector r(30);
  for (Index k = 0; k < r.size(); ++k) r[k] = 1e-3 * std::sin(0.3 * static_cast<double>(k)) + 2e-3;
  const double e0 = 0.01;
  const Vector closed = state_error_bound(r, c, e0);
  double delta = e0;
  EXPECT_NEAR(closed[0], e0, 1e-15);
  for (Index k = 1; k < r.size(); ++k) {
    delta = c.xi * delta + c.zeta * r[k];
    EXPECT_NEAR(closed[k], delta, 1e-12 * delta);
  }
  EXPECT_EQ(state_error_bound(Vector::Zero(10), c, 0.0).norm(), 0.0);
}

TEST(StateBound, RigorousOnLinearHeatWithMatchedScheme) {
  HeatModel heat(256);
  const Parameter p = P1(0.06);
  const TimeGrid grid(0.0, 0.01, 100);
  const ImexOperators ops(heat, p, grid.dt, ImexScheme::imex1());
  const Trajectory fom = solve_imex(ops, grid);
  const Matrix V = left_svd(fom.states).U.leftCols(6);
  const Rom rom(heat, V, p, grid.dt, ImexScheme::imex1());
  const Matrix Xt = V * rom.solve(grid);
  const CorrectedResidual r = residual_corrected(ops, V, V.transpose() * Xt, nullptr, grid);
  const OperatorNorms n = estimate_operator_norms(ops);
  const StateBoundConstants c = state_bound_constants(n, grid.dt, 0.0);
  const Vector delta = state_error_bound(r.norms, c, (fom.states.col(0) - Xt.col(0)).norm());
  for (Index k = 0; k < grid.size(); ++k) {
    EXPECT_GE(delta[k], (fom.states.col(k) - Xt.col(k)).norm()) << "k=" << k;
  }
}

TEST(OutputEstimate, BasicProperties) {
  Vector zero = Vector::Zero(5);
  OutputEstimateInputs in;
  in.residual_norms = &zero;
  in.Einv_norm = 2.0;
  in.x_du_norm = 3.0;
  in.r_du_norm = 0.1;
  in.rho_bar = 1.0;
  EXPECT_EQ(output_error_estimate(EstimatorVariant::b, in).per_step.norm(), 0.0);

  Vector r(5);
  r << 0.0, 1e-3, 2e-3, 5e-4, 1e-4;
  Vector gap(5);
  gap << 0.0, 1e-5, 0.0, 2e-5, 3e-6;
  in.residual_norms = &r;
  in.rho_bar = 3.5;
  in.output_gap = &gap;
  const ErrorEstimate b = output_error_estimate(EstimatorVariant::b, in);
  const ErrorEstimate a = output_error_estimate(EstimatorVariant::a, in);
  for (Index k = 0; k < 5; ++k) {
    EXPECT_GE(a.per_step[k], b.per_step[k]);
    EXPECT_GE(b.per_step[k], 0.0);
    const double expected = k == 0 ? 0.0 : (3.5 * 2.0 * 0.1 + 2.5 * 3.0) * r[k];
    EXPECT_NEAR(b.per_step[k], expected, 1e-15);
  }
  EXPECT_NEAR(b.mean, b.per_step.sum() / 5.0, 1e-18);
  EXPECT_NEAR(time_mean(r), r.sum() / 5.0, 1e-18);

  OutputEstimateInputs neg = in;
  neg.x_du_norm = -1.0;
  EXPECT_THROW(output_error_estimate(EstimatorVariant::b, neg), EstimatorError);
  OutputEstimateInputs nogap = in;
  nogap.output_gap = nullptr;
  EXPECT_THROW(output_error_estimate(EstimatorVariant::a, nogap), EstimatorError);
  EXPECT_EQ(variant_from_string(to_string(EstimatorVariant::a)), EstimatorVariant::a);
}

TEST(ModifiedOutput, ZeroResidualAndTermwiseOracle) {
  HeatModel heat(32);
  const ImexOperators ops(heat, P1(0.05), 0.01, ImexScheme::imex1());
  const DualSolution d = solve_dual(ops, heat.C());
  Matrix yhat(1, 4);
  yhat << 1.0, 2.0, 3.0, 4.0;
  EXPECT_TRUE((modified_output(yhat, d, Matrix::Zero(heat.dim(), 4)).array() == yhat.array()).all());
  Matrix R = Matrix::Zero(heat.dim(), 4);
  for (Index k = 0; k < 4; ++k) R.col(k) = Vector::LinSpaced(heat.dim(), 0.0, 1.0 + k);
  const Matrix ybar = modified_output(yhat, d, R);
  for (Index k = 0; k < 4; ++k) {
    double dot = 0.0;
    for (Index i = 0; i < heat.dim(); ++i) dot += d.x_du(i, 0) * R(i, k);
    EXPECT_NEAR(ybar(0, k), yhat(0, k) - dot, 1e-12);
  }
}

TEST(ModifiedOutput, DualCorrectionImprovesHeatOutput) {
  HeatCase hc(4);
  const ImexOperators ops(hc.heat, hc.p, hc.grid.dt, ImexScheme::imex1());
  const Rom rom(hc.heat, hc.V, hc.p, hc.grid.dt, ImexScheme::imex1());
  const Matrix dhat = hc.V.transpose() * hc.D;
  const Matrix xhat = rom.solve(hc.grid, &dhat);
  const CorrectedResidual r = residual_corrected(ops, hc.V, xhat, &hc.D, hc.grid);
  const DualSolution d = solve_dual(ops, hc.heat.C());
  const Matrix yhat = rom.outputs(xhat);
  const Matrix ybar = modified_output(yhat, d, r.r);
  const Matrix y = hc.heat.C() * hc.fom.states;
  EXPECT_LT((y - ybar).norm(), (y - yhat).norm());
}

TEST(Estimator, CorrectedRomBoundHoldsTermByTerm) {
  HeatCase hc(4);
  const ImexOperators ops(hc.heat, hc.p, hc.grid.dt, ImexScheme::imex1());
  const Rom rom(hc.heat, hc.V, hc.p, hc.grid.dt, ImexScheme::imex1());
  const Matrix dhat = hc.V.transpose() * hc.D;
  const Matrix xhat = rom.solve(hc.grid, &dhat);
  const Matrix Xt = hc.V * xhat;
  const CorrectedResidual r = residual_corrected(ops, hc.V, xhat, &hc.D, hc.grid);
  const Matrix aux = auxiliary_residual(ops, hc.fom.states, Xt, &hc.D, hc.grid);
  const DualSolution d = solve_dual(ops, hc.heat.C());
  const OperatorNorms n = estimate_operator_norms(ops);
  const Matrix ybar = modified_output(rom.outputs(xhat), d, r.r);
  const Matrix y = hc.heat.C() * hc.fom.states;
  for (Index k = 1; k < hc.grid.size(); ++k) {
    const double lhs = (y.col(k) - ybar.col(k)).norm();
    const double rhs = n.Einv * d.r_du_norm * aux.col(k).norm() + d.x_du_norm * (r.r.col(k) - aux.col(k)).norm();
    EXPECT_LE(lhs, rhs * (1.0 + 1e-9) + 1e-15) << "k=" << k;
  }
}

TEST(Estimator, LipschitzEstimate) {
  HeatModel heat(32);
  const Matrix X = Matrix::Random(heat.dim(), 10);
  EXPECT_EQ(lipschitz_estimate(heat, P1(0.05), X), 0.0);
  BurgersModel burgers(32, ConvectionStencil::central);
  const Trajectory tr = solve_imex(burgers, TimeGrid(0.0, 0.01, 20), ImexScheme::imex1(), P1(0.05));
  const double L = lipschitz_estimate(burgers, P1(0.05), tr.states);
  EXPECT_GT(L, 0.0);
  EXPECT_TRUE(std::isfinite(L));
}
