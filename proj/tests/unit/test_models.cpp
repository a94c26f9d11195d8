#include <decrom/models.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace decrom;

namespace {

Parameter P(std::initializer_list<double> v) {
  Parameter p(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

}  // namespace

TEST(Models, HeatDimensionsAndGrid) {
  HeatModel heat(256);
  EXPECT_EQ(heat.dim(), 255);
  EXPECT_DOUBLE_EQ(heat.h(), std::ldexp(1.0, -8));
  EXPECT_EQ(heat.C().rows(), 1);
  EXPECT_EQ(heat.C().cols(), 255);
  EXPECT_EQ(heat.C()(0, 254), 1.0);
  EXPECT_EQ(heat.x0(P({0.06})).size(), 255);
}

TEST(Models, HeatOperatorNegativeDefiniteAgainstDenseEigensolve) {
  HeatModel heat(256);
  const double mu = 0.06;
  const Matrix A = Matrix(heat.A(P({mu})));
  EXPECT_LE((A - A.transpose()).cwiseAbs().maxCoeff(), 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
  const double lmax = eig.eigenvalues().maxCoeff();
  EXPECT_LT(lmax, 0.0);
  // Dirichlet second difference: lambda_1 = -(4 mu / h^2) sin^2(pi h / 2).
  const double h = heat.h();
  const double expected = -4.0 * mu / (h * h) * std::pow(std::sin(std::numbers::pi * h / 2.0), 2);
  EXPECT_NEAR(lmax, expected, 1e-9 * std::abs(expected));
}

TEST(Models, HeatIsLinearAndHomogeneous) {
  HeatModel heat(64);
  const Parameter p = P({0.05});
  EXPECT_TRUE(heat.is_linear());
  const Vector zero = Vector::Zero(heat.dim());
  EXPECT_EQ(heat.nonlinearity(zero, p).norm(), 0.0);
  EXPECT_EQ(heat.evaluate_rhs(zero, 0.3, p).norm(), 0.0);
  Vector x = Vector::LinSpaced(heat.dim(), -1.0, 2.0);
  EXPECT_EQ(heat.nonlinearity(x, p).norm(), 0.0);
}

TEST(Models, BurgersZeroStateAndInitialState) {
  BurgersModel burgers(200, ConvectionStencil::central);
  const Parameter p = P({0.01});
  const Vector zero = Vector::Zero(burgers.dim());
  EXPECT_EQ(burgers.nonlinearity(zero, p).norm(), 0.0);
  EXPECT_EQ((burgers.evaluate_rhs(zero, 0.7, p) - burgers.B(p) * burgers.input(0.7)).norm(), 0.0);
  EXPECT_TRUE(burgers.nonlinearity(burgers.x0(p), p).allFinite());
}

TEST(Models, BurgersStencilMatchesHandArithmetic) {
  const Index n = 50;
  BurgersModel burgers(n, ConvectionStencil::central);
  const double mu = 0.02;
  const Parameter p = P({mu});
  const double dz = 1.0 / (n + 1);
  const Index j = 20;
  Vector x = Vector::Zero(n);
  x[j] = 1.0;
  x[j + 1] = 2.0;
  const Vector rhs = burgers.evaluate_rhs(x, 0.0, p);
  const double c = mu / (dz * dz);
  // viscous part: c (x_{i-1} - 2 x_i + x_{i+1}); convection: -x_i (x_{i+1} - x_{i-1}) / (2 dz)
  EXPECT_NEAR(rhs[j - 1], c * 1.0, 1e-9 * c);
  EXPECT_NEAR(rhs[j], c * (0.0 - 2.0 + 2.0) - 1.0 * (2.0 - 0.0) / (2 * dz), 1e-9 * c);
  EXPECT_NEAR(rhs[j + 1], c * (1.0 - 4.0) - 2.0 * (0.0 - 1.0) / (2 * dz), 1e-9 * c);
  EXPECT_NEAR(rhs[j + 2], c * 2.0, 1e-9 * c);
  EXPECT_EQ(rhs[j - 2], 0.0);
}

TEST(Models, FhnRightHandSideMatchesScalarEvaluation) {
  FhnModel fhn(64);
  const double eps = 0.02;
  const double c = 0.05;
  const Parameter p = P({eps, c});
  const double v = 0.001;
  const Vector x = Vector::Constant(fhn.dim(), v);
  const Vector rhs = fhn.evaluate_rhs(x, 0.0, p);
  const double f = v * (v - 0.1) * (1.0 - v);
  const double dv1 = (f - v + c) / eps;
  const double dv2 = FhnModel::b * v - FhnModel::gamma * v + c;
  for (Index i = 0; i < fhn.nodes(); ++i) {
    EXPECT_NEAR(rhs[i], dv1, 1e-12 * std::abs(dv1));
    EXPECT_NEAR(rhs[fhn.nodes() + i], dv2, 1e-12 * std::abs(dv2) + 1e-15);
  }
  EXPECT_EQ(fhn.C().rows(), 2);
}

TEST(Models, FhnStimulusEntersThroughLeftBoundary) {
  FhnModel fhn(64);
  const Parameter p = P({0.02, 0.05});
  const Vector x = Vector::Constant(fhn.dim(), 0.001);
  const Vector d = fhn.evaluate_rhs(x, 0.2, p) - fhn.evaluate_rhs(x, 0.0, p);
  EXPECT_GT(d[0], 0.0);
  EXPECT_EQ(d.tail(fhn.dim() - 1).norm(), 0.0);
}

TEST(Models, SparsityPatternIndependentOfParameter) {
  for (const std::string id : {"heat", "burgers", "fhn"}) {
    auto sys = assemble(id, 32);
    std::mt19937_64 rng(7);
    SparseMatrix ref;
    for (int draw = 0; draw < 10; ++draw) {
      const auto& axes = sys->domain().axes();
      Parameter p(static_cast<Index>(axes.size()));
      for (std::size_t a = 0; a < axes.size(); ++a) {
        p[static_cast<Index>(a)] = std::uniform_real_distribution<double>(axes[a].lo, axes[a].hi)(rng);
      }
      SparseMatrix A = sys->A(p);
      A.makeCompressed();
      if (draw == 0) {
        ref = A;
        continue;
      }
      ASSERT_EQ(A.nonZeros(), ref.nonZeros()) << id;
      for (Index k = 0; k <= A.outerSize(); ++k) EXPECT_EQ(A.outerIndexPtr()[k], ref.outerIndexPtr()[k]);
      for (Index k = 0; k < A.nonZeros(); ++k) EXPECT_EQ(A.innerIndexPtr()[k], ref.innerIndexPtr()[k]);
    }
  }
}

TEST(Models, DomainViolationAndUnknownModel) {
  HeatModel heat(32);
  EXPECT_THROW(heat.A(P({0.5})), DomainError);
  EXPECT_THROW(heat.A(P({0.05, 0.1})), DomainError);
  EXPECT_THROW(assemble("chromatography", 32), DomainError);
  EXPECT_THROW(assemble("heat", 4), Error);
}

TEST(Models, NonlinearityRowsMatchFullEvaluation) {
  for (const std::string id : {"burgers", "fhn"}) {
    auto sys = assemble(id, 40);
    const auto& axes = sys->domain().axes();
    Parameter p(static_cast<Index>(axes.size()));
    for (std::size_t a = 0; a < axes.size(); ++a) p[static_cast<Index>(a)] = 0.5 * (axes[a].lo + axes[a].hi);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Vector x(sys->dim());
    for (Index i = 0; i < x.size(); ++i) x[i] = 0.3 * g(rng);
    const Vector full = sys->nonlinearity(x, p);
    const std::vector<Index> rows{0, 5, 17, sys->dim() - 1};
    Vector sub;
    sys->nonlinearity_rows(x, p, rows, sub);
    ASSERT_EQ(sub.size(), static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) EXPECT_DOUBLE_EQ(sub[static_cast<Index>(r)], full[rows[r]]) << id;
  }
}

TEST(Models, NonlinearityJacobianMatchesFiniteDifferences) {
  for (const std::string id : {"burgers", "fhn"}) {
    auto sys = assemble(id, 24);
    const auto& axes = sys->domain().axes();
    Parameter p(static_cast<Index>(axes.size()));
    for (std::size_t a = 0; a < axes.size(); ++a) p[static_cast<Index>(a)] = 0.5 * (axes[a].lo + axes[a].hi);
    Vector x = Vector::LinSpaced(sys->dim(), -0.4, 0.7);
    const Matrix J = Matrix(sys->nonlinearity_jacobian(x, p));
    const double h = 1e-6;
    for (Index j = 0; j < sys->dim(); j += 5) {
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Vector fd = (sys->nonlinearity(xp, p) - sys->nonlinearity(xm, p)) / (2 * h);
      EXPECT_LE((fd - J.col(j)).norm(), 1e-6 * (1.0 + fd.norm())) << id << " col " << j;
    }
  }
}

TEST(Models, DomainNormalizationRoundTrip) {
  ParameterDomain d({{"mu", 0.005, 1.0, AxisScale::log}, {"c", 0.025, 0.075, AxisScale::linear}});
  const Parameter p = P({0.1, 0.05});
  const Vector u = d.normalize(p);
  EXPECT_NEAR(u[0], std::log(0.1 / 0.005) / std::log(1.0 / 0.005), 1e-14);
  EXPECT_NEAR(u[1], 0.5, 1e-14);
  EXPECT_LE((d.denormalize(u) - p).norm(), 1e-14);
}
