#include "decrom/rom.hpp"

#include "decrom/linalg.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace decrom {

Index ReducedBasis::pod_update(const Matrix& X, Index r_c) {
  if (r_c <= 0) throw ConfigError("r_c must be positive");
  if (V_.rows() == 0 && V_.cols() == 0) V_.resize(X.rows(), 0);
  if (X.rows() != V_.rows()) throw DimensionError("snapshot dimension differs from basis");
  Matrix Xd = X;
  if (V_.cols() > 0) Xd -= V_ * (V_.transpose() * X);
  ThinSvd svd = left_svd(Xd);
  const double ref = std::max(X.norm(), 1e-300);
  Index rank = 0;
  while (rank < svd.s.size() && svd.s[rank] > 1e-10 * ref) ++rank;
  const Index take = std::min(r_c, rank);
  if (take < r_c) {
    spdlog::info("POD update: requested {} modes, deflated snapshots have rank {}", r_c, rank);
  }
  Index added = 0;
  if (take > 0) added = append_orthonormal(V_, svd.U.leftCols(take), 1e-8);
  history_.push_back(added);
  return added;
}

Rom::Rom(const ParametricSystem& sys, const Matrix& V, const Parameter& p, double dt,
         ImexScheme scheme, const DeimModel* deim)
    : sys_(sys), V_(V), p_(p), dt_(dt), scheme_(scheme), deim_(deim) {
  scheme_.validate();
  if (V.rows() != sys.dim()) throw DimensionError("basis rows differ from the system dimension");
  if (V.cols() == 0) throw DimensionError("reduced basis is empty");
  if (sys.is_linear()) deim_ = nullptr;
  if (deim_ && deim_->dim() != sys.dim()) throw DimensionError("DEIM basis dimension mismatch");

  const SparseMatrix A = sys.A(p);
  const Matrix B = sys.B(p);
  has_input_ = B.size() > 0 && B.cwiseAbs().maxCoeff() > 0.0;
  Ahat_ = V.transpose() * (A * V);
  Bhat_ = V.transpose() * B;
  Chat_ = sys.C() * V;
  x0hat_ = V.transpose() * sys.x0(p);
  const Index n = V.cols();
  const Matrix I = Matrix::Identity(n, n);
  E1_ = I - dt * Ahat_;
  lu1_.compute(E1_);
  if (scheme_.order == 2) {
    E2_ = I - 0.5 * dt * Ahat_;
    Aim_ = I + 0.5 * dt * Ahat_;
    lu2_.compute(E2_);
  }

  if (deim_) {
    std::vector<Index> s;
    for (Index r : deim_->indices()) {
      for (Index j : sys.stencil(r)) s.push_back(j);
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    support_ = std::move(s);
    V_support_.resize(static_cast<Index>(support_.size()), n);
    for (std::size_t i = 0; i < support_.size(); ++i) V_support_.row(static_cast<Index>(i)) = V.row(support_[i]);
    M_ = V.transpose() * deim_->U() * deim_->PtU_inverse();
  }
}

void Rom::nonlinearity(const Vector& xhat, Vector& out) const {
  if (sys_.is_linear()) {
    out.setZero(size());
    return;
  }
  if (deim_) {
    Vector x = Vector::Zero(sys_.dim());
    const Vector xs = V_support_ * xhat;
    for (std::size_t i = 0; i < support_.size(); ++i) x[support_[i]] = xs[static_cast<Index>(i)];
    Vector fp;
    sys_.nonlinearity_rows(x, p_, deim_->indices(), fp);
    out.noalias() = M_ * fp;
    return;
  }
  const Vector x = V_ * xhat;
  Vector f(sys_.dim());
  sys_.nonlinearity(x, p_, f);
  out.noalias() = V_.transpose() * f;
}

Matrix Rom::nonlinearity_jacobian(const Vector& xhat) const {
  if (sys_.is_linear()) return Matrix::Zero(size(), size());
  const Vector x = V_ * xhat;
  const Matrix JV = sys_.nonlinearity_jacobian(x, p_) * V_;
  if (deim_) {
    Matrix rows(deim_->size(), size());
    for (Index r = 0; r < deim_->size(); ++r) rows.row(r) = JV.row(deim_->indices()[static_cast<std::size_t>(r)]);
    return M_ * rows;
  }
  return V_.transpose() * JV;
}

void Rom::rhs(double t, const Vector& xhat, Vector& out) const {
  nonlinearity(xhat, out);
  out.noalias() += Ahat_ * xhat;
  if (has_input_) out.noalias() += Bhat_ * sys_.input(t);
}

Matrix Rom::solve(const TimeGrid& grid, const Matrix* dhat) const {
  const Index n = size();
  if (dhat && (dhat->rows() != n || dhat->cols() != grid.size())) {
    throw DimensionError("reduced closure must be n x N_t");
  }
  if (std::abs(grid.dt - dt_) > 1e-15 * dt_) throw DimensionError("grid time step differs from ROM time step");
  Matrix X(n, grid.size());
  X.col(0) = x0hat_;
  Vector f_prev(n), f_prev2(n), g(n);
  nonlinearity(x0hat_, f_prev);
  for (Index k = 1; k <= grid.K; ++k) {
    if (scheme_.bootstrap_step(k)) {
      g = X.col(k - 1) + dt_ * f_prev;
    } else {
      g.noalias() = Aim_ * X.col(k - 1);
      g += dt_ * (1.5 * f_prev - 0.5 * f_prev2);
    }
    if (has_input_) g.noalias() += dt_ * (Bhat_ * sys_.input(grid.t(k)));
    if (dhat) g += dhat->col(k);
    X.col(k) = scheme_.bootstrap_step(k) ? Vector(lu1_.solve(g)) : Vector(lu2_.solve(g));
    f_prev2.swap(f_prev);
    nonlinearity(X.col(k), f_prev);
  }
  if (!X.allFinite()) throw DivergenceError("reduced solution became non-finite");
  return X;
}

void RomOde::jacobian(double, const Vector& x, Matrix& J) const {
  J = rom_.Ahat() + rom_.nonlinearity_jacobian(x);
}

Rom galerkin_project(const ParametricSystem& sys, const Matrix& V, const Parameter& p,
                     const TimeGrid& grid, ImexScheme scheme, const DeimModel* deim) {
  return Rom(sys, V, p, grid.dt, scheme, deim);
}

RomSolution solve_crom(const Rom& rom, const ClosureModel* closure, const Matrix& VtVd,
                       const TimeGrid& grid) {
  RomSolution sol;
  if (closure) {
    if (!(closure->grid() == grid)) throw DimensionError("closure grid differs from the ROM grid");
    sol.dhat = closure->project_all(rom.V(), VtVd, rom.parameter());
    sol.xhat = rom.solve(grid, &sol.dhat);
  } else {
    sol.dhat = Matrix::Zero(rom.size(), grid.size());
    sol.xhat = rom.solve(grid);
  }
  sol.outputs = rom.outputs(sol.xhat);
  return sol;
}

RomSolution solve_crom(const Rom& rom, const ClosureModel* closure, const TimeGrid& grid) {
  if (!closure) return solve_crom(rom, nullptr, Matrix(), grid);
  return solve_crom(rom, closure, rom.V().transpose() * closure->Vd(), grid);
}

RomSolution solve_rom_blackbox(const Rom& rom, const TimeGrid& grid, const SolverConfig& cfg) {
  RomOde ode(rom);
  RomSolution sol;
  sol.xhat = integrate(ode, rom.x0hat(), grid, cfg);
  sol.outputs = rom.outputs(sol.xhat);
  sol.dhat = Matrix::Zero(rom.size(), grid.size());
  return sol;
}

}  // namespace decrom
