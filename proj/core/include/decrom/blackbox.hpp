#pragma once

#include "decrom/models.hpp"
#include "decrom/types.hpp"

#include <optional>

namespace decrom {

/// First-order system x' = F(t, x) as seen by the adaptive integrators.
class OdeSystem {
 public:
  virtual ~OdeSystem() = default;
  virtual Index dim() const = 0;
  virtual void rhs(double t, const Vector& x, Vector& dxdt) const = 0;

  /// Jacobian dF/dx. Only the stiff integrator calls these.
  virtual bool sparse_jacobian() const { return true; }
  virtual void jacobian(double t, const Vector& x, SparseMatrix& J) const;
  virtual void jacobian(double t, const Vector& x, Matrix& J) const;
};

/// F(t, x) = A(p)x + f(x,p) + B(p)u(t) with operators cached at construction.
class FomOde final : public OdeSystem {
 public:
  FomOde(const ParametricSystem& sys, const Parameter& p);

  Index dim() const override { return sys_.dim(); }
  void rhs(double t, const Vector& x, Vector& dxdt) const override;
  void jacobian(double t, const Vector& x, SparseMatrix& J) const override;

 private:
  const ParametricSystem& sys_;
  Parameter p_;
  SparseMatrix A_;
  Matrix B_;
  bool has_input_;
};

enum class BlackboxMethod {
  dopri5,       // explicit Dormand-Prince 5(4), dense output of order 4
  rosenbrock23,  // linearly implicit W-method 2(3) for stiff problems
  switching      // dopri5 until stiffness is detected, rosenbrock23 afterwards
};

struct SolverConfig {
  double rtol = 1e-8;
  double atol = 1e-10;
  Index max_steps = 50'000'000;
  std::optional<double> initial_step;  // empty: automatic
  BlackboxMethod method = BlackboxMethod::dopri5;

  void validate() const;
};

struct SolveStats {
  Index accepted = 0;
  Index rejected = 0;
  Index rhs_evals = 0;
  Index switches = 0;
};

/// Integrates x' = F(t,x) from x0 and samples the solution at every grid point.
Matrix integrate(const OdeSystem& ode, const Vector& x0, const TimeGrid& grid,
                 const SolverConfig& cfg, SolveStats* stats = nullptr);

/// Black-box FOM solve; provenance = blackbox.
Trajectory solve_blackbox(const ParametricSystem& sys, const TimeGrid& grid,
                          const SolverConfig& cfg, const Parameter& p,
                          SolveStats* stats = nullptr);

}  // namespace decrom
