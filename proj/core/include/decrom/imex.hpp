#pragma once

#include "decrom/models.hpp"
#include "decrom/types.hpp"

#include <Eigen/SparseLU>

#include <memory>

namespace decrom {

/// Order 1: (I - dt A) x^k = x^{k-1} + dt (f^{k-1} + B u^k).
/// Order 2: Crank-Nicolson / Adams-Bashforth-2,
///   (I - dt/2 A) x^k = (I + dt/2 A) x^{k-1} + dt (3/2 f^{k-1} - 1/2 f^{k-2}) + dt B u^k,
/// with the first step taken by the order-1 rule.
struct ImexScheme {
  int order = 1;

  static ImexScheme imex1() { return ImexScheme{1}; }
  static ImexScheme imex2() { return ImexScheme{2}; }
  static ImexScheme from_id(const std::string& id);
  std::string id() const { return order == 1 ? "imex1" : "imex2"; }
  void validate() const;
  /// Step k uses the order-1 rule when true.
  bool bootstrap_step(Index k) const { return order == 1 || k == 1; }
};

/// Full-order IMEX operators for one parameter and time step. E is factorized once.
class ImexOperators {
 public:
  ImexOperators(const ParametricSystem& sys, const Parameter& p, double dt, ImexScheme scheme);

  const ImexScheme& scheme() const { return scheme_; }
  double dt() const { return dt_; }
  Index dim() const { return A_.rows(); }
  const Parameter& parameter() const { return p_; }
  const ParametricSystem& system() const { return sys_; }

  const SparseMatrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  /// E_im and A_im of the scheme's main step.
  const SparseMatrix& E_im() const { return scheme_.order == 1 ? E1_ : E2_; }
  const SparseMatrix& A_im() const { return A_im_; }
  /// Implicit matrix used at step k.
  const SparseMatrix& E_step(Index k) const { return scheme_.bootstrap_step(k) ? E1_ : E2_; }

  /// Right-hand side g^k of step k without closure, from x^{k-1}, x^{k-2} and
  /// the nonlinearity values f^{k-1}, f^{k-2} (f_km2 ignored on bootstrap steps).
  void explicit_part(Index k, double t_k, const Vector& x_km1, const Vector& f_km1,
                     const Vector* f_km2, Vector& g) const;

  /// Solves E_step(k) x = rhs.
  Vector solve_step(Index k, const Vector& rhs) const;
  /// Solves E_im x = b and E_im^T x = b.
  Vector solve_E(const Vector& b) const;
  Vector solve_E_transpose(const Vector& b) const;

 private:
  using Lu = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;

  const ParametricSystem& sys_;
  Parameter p_;
  double dt_;
  ImexScheme scheme_;
  SparseMatrix A_, E1_, E2_, A_im_;
  Matrix B_;
  std::unique_ptr<Lu> lu1_, lu2_, lu_t_;
  bool has_input_;
};

/// Marches the scheme on grid; closure, when given, is N x N_t with column k added at step k.
Trajectory solve_imex(const ParametricSystem& sys, const TimeGrid& grid, ImexScheme scheme,
                      const Parameter& p, const Matrix* closure = nullptr);

Trajectory solve_imex(const ImexOperators& ops, const TimeGrid& grid, const Matrix* closure = nullptr);

}  // namespace decrom
