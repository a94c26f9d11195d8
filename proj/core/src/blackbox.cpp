#include "decrom/blackbox.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace decrom {

void OdeSystem::jacobian(double, const Vector&, SparseMatrix&) const {
  throw Error("this system provides no sparse Jacobian");
}

void OdeSystem::jacobian(double, const Vector&, Matrix&) const {
  throw Error("this system provides no dense Jacobian");
}

FomOde::FomOde(const ParametricSystem& sys, const Parameter& p)
    : sys_(sys), p_(p), A_(sys.A(p)), B_(sys.B(p)) {
  has_input_ = B_.size() > 0 && B_.cwiseAbs().maxCoeff() > 0.0;
}

void FomOde::rhs(double t, const Vector& x, Vector& dxdt) const {
  sys_.nonlinearity(x, p_, dxdt);
  dxdt.noalias() += A_ * x;
  if (has_input_) dxdt.noalias() += B_ * sys_.input(t);
}

void FomOde::jacobian(double, const Vector& x, SparseMatrix& J) const {
  if (sys_.is_linear()) {
    J = A_;
  } else {
    J = A_ + sys_.nonlinearity_jacobian(x, p_);
  }
}

void SolverConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) throw ConfigError("solver tolerances must be positive");
  if (max_steps <= 0) throw ConfigError("max_steps must be positive");
  if (initial_step && !(*initial_step > 0.0)) throw ConfigError("initial step must be positive");
}

namespace {

double weighted_rms(const Vector& e, const Vector& y0, const Vector& y1, double rtol, double atol) {
  double acc = 0.0;
  for (Index i = 0; i < e.size(); ++i) {
    const double sk = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = e[i] / sk;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(std::max<Index>(e.size(), 1)));
}

double initial_step_size(const OdeSystem& ode, double t, const Vector& y, const Vector& f0,
                         double hmax, int order, const SolverConfig& cfg) {
  const Index n = y.size();
  double dnf = 0.0, dny = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double sk = cfg.atol + cfg.rtol * std::abs(y[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (y[i] / sk) * (y[i] / sk);
  }
  dnf /= static_cast<double>(n);
  dny /= static_cast<double>(n);
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, hmax);
  Vector y1 = y + h * f0;
  Vector f1(n);
  ode.rhs(t + h, y1, f1);
  double der2 = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double sk = cfg.atol + cfg.rtol * std::abs(y[i]);
    const double d = (f1[i] - f0[i]) / sk;
    der2 += d * d;
  }
  der2 = std::sqrt(der2 / static_cast<double>(n)) / h;
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3)
                                   : std::pow(0.01 / der12, 1.0 / static_cast<double>(order));
  return std::min({100.0 * h, h1, hmax});
}

void check_finite(const Vector& y, double t_good) {
  if (!y.allFinite()) throw IntegrationError("non-finite state encountered", t_good);
}

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// Integration state shared by the integrators so that one can hand over to another.
struct Cursor {
  double t;
  Vector y;
  Index next = 1;  // first grid index not yet written
};

// Returns false when stiffness was detected before the end of the grid.
bool dopri5_span(const OdeSystem& ode, const TimeGrid& grid, const SolverConfig& cfg, SolveStats& st,
                 Cursor& cur, Matrix& out, bool detect_stiffness) {
  const Index n = cur.y.size();
  constexpr double beta = 0.04, safe = 0.9;
  constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
  const double expo1 = 0.2 - beta * 0.75;

  const double tend = grid.tK();
  const double hmax = tend - grid.t0;
  double& t = cur.t;
  Vector& y = cur.y;
  Index& next = cur.next;
  Vector y1(n), ytmp(n);
  int stiff_count = 0, nonstiff_count = 0;
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), err(n);
  Vector r2(n), r3(n), r4(n), r5(n);

  ode.rhs(t, y, k1);
  ++st.rhs_evals;
  double h = cfg.initial_step ? *cfg.initial_step
                              : initial_step_size(ode, t, y, k1, hmax, 5, cfg);
  double facold = 1e-4;
  bool last_rejected = false;

  while (next <= grid.K) {
    if (st.accepted + st.rejected >= cfg.max_steps) {
      throw IntegrationError("maximum number of steps exceeded", t);
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) throw IntegrationError("step size underflow", t);
    if (t + 1.01 * h >= tend) h = tend - t;

    ytmp = y + h * a21 * k1;
    ode.rhs(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    ode.rhs(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    ode.rhs(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    ode.rhs(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    const double tph = t + h;
    ode.rhs(tph, ytmp, k6);
    y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    ode.rhs(tph, y1, k7);
    st.rhs_evals += 6;
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double e = weighted_rms(err, y, y1, cfg.rtol, cfg.atol);
    if (!std::isfinite(e)) e = 1e10;
    const double fac11 = std::pow(e, expo1);

    if (e <= 1.0) {
      check_finite(y1, t);
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(facc2, std::min(facc1, fac / safe));
      double hnew = h / fac;
      facold = std::max(e, 1e-4);
      ++st.accepted;

      if (detect_stiffness) {
        const double num = (k7 - k6).squaredNorm();
        const double den = (y1 - ytmp).squaredNorm();
        if (den > 0.0 && h * std::sqrt(num / den) > 3.25) {
          nonstiff_count = 0;
          ++stiff_count;
        } else if (++nonstiff_count == 6) {
          stiff_count = 0;
        }
      }

      const bool at_end = (tph >= tend);
      bool dense_ready = false;
      while (next <= grid.K && (at_end || grid.t(next) <= tph)) {
        if (at_end && next == grid.K) {
          out.col(next) = y1;
        } else {
          if (!dense_ready) {
            r2 = y1 - y;
            r3 = h * k1 - r2;
            r4 = r2 - h * k7 - r3;
            r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            dense_ready = true;
          }
          const double th = (grid.t(next) - t) / h;
          const double th1 = 1.0 - th;
          out.col(next) = y + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
        }
        ++next;
      }

      k1.swap(k7);
      y.swap(y1);
      t = at_end ? tend : tph;
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      h = std::min(hnew, hmax);
      if (stiff_count >= 15 && next <= grid.K) return false;
    } else {
      ++st.rejected;
      h = h / std::min(facc1, fac11 / safe);
      last_rejected = true;
    }
  }
  return true;
}

class ShiftedSolver {
 public:
  explicit ShiftedSolver(bool sparse) : sparse_(sparse) {}

  void factor(const OdeSystem& ode, double t, const Vector& y, double gamma_h, double t_good) {
    const Index n = y.size();
    if (sparse_) {
      ode.jacobian(t, y, Js_);
      SparseMatrix I(n, n);
      I.setIdentity();
      W_ = I - gamma_h * Js_;
      W_.makeCompressed();
      lu_.compute(W_);
      if (lu_.info() != Eigen::Success) {
        throw IntegrationError("singular iteration matrix in stiff solver", t_good);
      }
    } else {
      ode.jacobian(t, y, Jd_);
      dlu_.compute(Matrix::Identity(n, n) - gamma_h * Jd_);
    }
  }

  Vector solve(const Vector& b) {
    if (sparse_) return lu_.solve(b);
    return dlu_.solve(b);
  }

 private:
  bool sparse_;
  SparseMatrix Js_, W_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  Matrix Jd_;
  Eigen::PartialPivLU<Matrix> dlu_;
};

// Shampine-Reichelt modified Rosenbrock triple (order 2 with order 3 error estimate).
void rosenbrock23_span(const OdeSystem& ode, const TimeGrid& grid, const SolverConfig& cfg, SolveStats& st,
                       Cursor& cur, Matrix& out) {
  const Index n = cur.y.size();
  const double d = 1.0 / (2.0 + std::sqrt(2.0));
  const double e32 = 6.0 + std::sqrt(2.0);
  const double tend = grid.tK();
  const double hmax = tend - grid.t0;
  const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());

  double& t = cur.t;
  Vector& y = cur.y;
  Index& next = cur.next;
  Vector ynew(n), F0(n), F1(n), F2(n), T(n), Ft(n), k1(n), k2(n), k3(n), err(n);
  ode.rhs(t, y, F0);
  ++st.rhs_evals;
  double h = cfg.initial_step && t == grid.t0 ? *cfg.initial_step
                                              : initial_step_size(ode, t, y, F0, hmax, 3, cfg);
  ShiftedSolver solver(ode.sparse_jacobian());

  while (next <= grid.K) {
    if (st.accepted + st.rejected >= cfg.max_steps) {
      throw IntegrationError("maximum number of steps exceeded", t);
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) throw IntegrationError("step size underflow", t);
    if (t + 1.01 * h >= tend) h = tend - t;

    const double tdel = (t + std::min(sqrt_eps * std::max(std::abs(t), std::abs(t + h)), h)) - t;
    ode.rhs(t + tdel, y, Ft);
    T = (Ft - F0) / tdel;
    ++st.rhs_evals;

    solver.factor(ode, t, y, h * d, t);
    k1 = solver.solve(F0 + h * d * T);
    ode.rhs(t + 0.5 * h, y + 0.5 * h * k1, F1);
    k2 = solver.solve(F1 - k1) + k1;
    ynew = y + h * k2;
    const double tph = t + h;
    ode.rhs(tph, ynew, F2);
    k3 = solver.solve(F2 - e32 * (k2 - F1) - 2.0 * (k1 - F0) + h * d * T);
    st.rhs_evals += 2;
    err = (h / 6.0) * (k1 - 2.0 * k2 + k3);

    double e = weighted_rms(err, y, ynew, cfg.rtol, cfg.atol);
    if (!std::isfinite(e)) e = 1e10;

    if (e <= 1.0) {
      check_finite(ynew, t);
      ++st.accepted;
      const bool at_end = (tph >= tend);
      while (next <= grid.K && (at_end || grid.t(next) <= tph)) {
        if (at_end && next == grid.K) {
          out.col(next) = ynew;
        } else {
          const double s = (grid.t(next) - t) / h;
          out.col(next) = y + h * ((s * (1.0 - s) / (1.0 - 2.0 * d)) * k1 +
                                   (s * (s - 2.0 * d) / (1.0 - 2.0 * d)) * k2);
        }
        ++next;
      }
      y.swap(ynew);
      F0.swap(F2);
      t = at_end ? tend : tph;
      const double fac = e > 0.0 ? 0.8 * std::pow(e, -1.0 / 3.0) : 5.0;
      h = std::min(hmax, h * std::min(5.0, fac));
    } else {
      ++st.rejected;
      h = h * std::max(0.2, 0.8 * std::pow(e, -1.0 / 3.0));
    }
  }
}

}  // namespace

Matrix integrate(const OdeSystem& ode, const Vector& x0, const TimeGrid& grid,
                 const SolverConfig& cfg, SolveStats* stats) {
  cfg.validate();
  if (x0.size() != ode.dim()) throw DimensionError("initial state dimension mismatch");
  SolveStats local;
  SolveStats& st = stats ? *stats : local;
  Matrix out(x0.size(), grid.size());
  out.col(0) = x0;
  if (grid.K == 0) return out;
  Cursor cur{grid.t0, x0, 1};
  switch (cfg.method) {
    case BlackboxMethod::dopri5:
      dopri5_span(ode, grid, cfg, st, cur, out, false);
      break;
    case BlackboxMethod::rosenbrock23:
      rosenbrock23_span(ode, grid, cfg, st, cur, out);
      break;
    case BlackboxMethod::switching:
      if (!dopri5_span(ode, grid, cfg, st, cur, out, true)) {
        ++st.switches;
        rosenbrock23_span(ode, grid, cfg, st, cur, out);
      }
      break;
  }
  return out;
}

Trajectory solve_blackbox(const ParametricSystem& sys, const TimeGrid& grid,
                          const SolverConfig& cfg, const Parameter& p, SolveStats* stats) {
  sys.domain().check(p);
  FomOde ode(sys, p);
  Trajectory tr;
  tr.states = integrate(ode, sys.x0(p), grid, cfg, stats);
  tr.grid = grid;
  tr.parameter = p;
  tr.provenance = Provenance::blackbox;
  return tr;
}

}  // namespace decrom
