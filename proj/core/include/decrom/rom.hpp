#pragma once

#include "decrom/blackbox.hpp"
#include "decrom/closure.hpp"
#include "decrom/deim.hpp"
#include "decrom/imex.hpp"
#include "decrom/models.hpp"
#include "decrom/types.hpp"

#include <vector>

namespace decrom {

/// Column-orthonormal POD basis grown by deflated snapshot SVDs.
class ReducedBasis {
 public:
  ReducedBasis() = default;
  explicit ReducedBasis(Index n_full) : V_(n_full, 0) {}

  const Matrix& V() const { return V_; }
  Index size() const { return V_.cols(); }
  Index dim() const { return V_.rows(); }
  const std::vector<Index>& history() const { return history_; }

  /// Appends up to r_c leading left singular vectors of X - V V^T X. Returns the count added.
  Index pod_update(const Matrix& X, Index r_c);

 private:
  Matrix V_;
  std::vector<Index> history_;
};

/// Galerkin ROM for one parameter and time step:
///   Ehat_k xhat^k = ghat^k(xhat^{k-1}, xhat^{k-2}) + dhat^k,
/// with the nonlinearity either projected exactly or through DEIM.
class Rom {
 public:
  Rom(const ParametricSystem& sys, const Matrix& V, const Parameter& p, double dt,
      ImexScheme scheme, const DeimModel* deim = nullptr);

  Index size() const { return V_.cols(); }
  const Matrix& V() const { return V_; }
  const Parameter& parameter() const { return p_; }
  const ImexScheme& scheme() const { return scheme_; }
  double dt() const { return dt_; }
  bool uses_deim() const { return deim_ != nullptr; }
  const ParametricSystem& system() const { return sys_; }

  const Matrix& Ahat() const { return Ahat_; }
  const Matrix& Bhat() const { return Bhat_; }
  const Matrix& Chat() const { return Chat_; }
  const Vector& x0hat() const { return x0hat_; }
  const Matrix& Ehat_im() const { return scheme_.order == 1 ? E1_ : E2_; }

  /// Reduced nonlinearity V^T f(V xhat) or its DEIM approximation.
  void nonlinearity(const Vector& xhat, Vector& out) const;
  /// Reduced Jacobian of the nonlinearity.
  Matrix nonlinearity_jacobian(const Vector& xhat) const;
  void rhs(double t, const Vector& xhat, Vector& out) const;

  /// Marches the reduced scheme; closure, when given, is the n x N_t reduced defect.
  Matrix solve(const TimeGrid& grid, const Matrix* dhat = nullptr) const;
  Matrix outputs(const Matrix& xhat) const { return Chat_ * xhat; }

 private:
  const ParametricSystem& sys_;
  Matrix V_;
  Parameter p_;
  double dt_;
  ImexScheme scheme_;
  const DeimModel* deim_;
  Matrix Ahat_, Bhat_, Chat_, E1_, E2_, Aim_;
  Vector x0hat_;
  Eigen::PartialPivLU<Matrix> lu1_, lu2_;
  bool has_input_;
  // DEIM support
  std::vector<Index> support_;
  Matrix V_support_;
  Matrix M_;  // V^T U (P^T U)^{-1}
};

/// Reduced ODE x' = Ahat x + fhat(x) + Bhat u for the black-box integrator.
class RomOde final : public OdeSystem {
 public:
  explicit RomOde(const Rom& rom) : rom_(rom) {}
  Index dim() const override { return rom_.size(); }
  void rhs(double t, const Vector& x, Vector& dxdt) const override { rom_.rhs(t, x, dxdt); }
  bool sparse_jacobian() const override { return false; }
  void jacobian(double t, const Vector& x, Matrix& J) const override;

 private:
  const Rom& rom_;
};

/// Galerkin projection without closure.
Rom galerkin_project(const ParametricSystem& sys, const Matrix& V, const Parameter& p,
                     const TimeGrid& grid, ImexScheme scheme, const DeimModel* deim = nullptr);

struct RomSolution {
  Matrix xhat;     // n x N_t
  Matrix outputs;  // N_O x N_t
  Matrix dhat;     // reduced closure used, n x N_t (zero without closure)
};

/// Marches the corrected ROM with dhat^k = V^T d(t^k, p) decoded from the closure.
RomSolution solve_crom(const Rom& rom, const ClosureModel* closure, const TimeGrid& grid);
/// Variant taking a precomputed V^T V_d.
RomSolution solve_crom(const Rom& rom, const ClosureModel* closure, const Matrix& VtVd,
                       const TimeGrid& grid);

/// Integrates the ROM with the black-box solver.
RomSolution solve_rom_blackbox(const Rom& rom, const TimeGrid& grid, const SolverConfig& cfg);

}  // namespace decrom
