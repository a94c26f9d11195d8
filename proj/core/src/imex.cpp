#include "decrom/imex.hpp"

namespace decrom {

ImexScheme ImexScheme::from_id(const std::string& id) {
  if (id == "imex1" || id == "1") return imex1();
  if (id == "imex2" || id == "2") return imex2();
  throw ConfigError("unknown IMEX scheme '" + id + "'");
}

void ImexScheme::validate() const {
  if (order != 1 && order != 2) throw ConfigError("IMEX order must be 1 or 2");
}

namespace {

std::unique_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> factor(
    const SparseMatrix& M, const char* what) {
  auto lu = std::make_unique<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>();
  lu->compute(M);
  if (lu->info() != Eigen::Success) {
    throw FactorizationError(std::string("factorization of ") + what + " failed: " +
                             lu->lastErrorMessage());
  }
  return lu;
}

SparseMatrix identity(Index n) {
  SparseMatrix I(n, n);
  I.setIdentity();
  return I;
}

}  // namespace

ImexOperators::ImexOperators(const ParametricSystem& sys, const Parameter& p, double dt,
                             ImexScheme scheme)
    : sys_(sys), p_(p), dt_(dt), scheme_(scheme) {
  scheme_.validate();
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  A_ = sys.A(p);
  B_ = sys.B(p);
  has_input_ = B_.size() > 0 && B_.cwiseAbs().maxCoeff() > 0.0;
  const Index n = A_.rows();
  const SparseMatrix I = identity(n);
  E1_ = I - dt * A_;
  E1_.makeCompressed();
  lu1_ = factor(E1_, "E_im");
  if (scheme_.order == 1) {
    A_im_ = I;
  } else {
    E2_ = I - (0.5 * dt) * A_;
    E2_.makeCompressed();
    A_im_ = I + (0.5 * dt) * A_;
    lu2_ = factor(E2_, "E_im");
  }
  SparseMatrix Et = SparseMatrix(E_im().transpose());
  Et.makeCompressed();
  lu_t_ = factor(Et, "E_im transpose");
}

void ImexOperators::explicit_part(Index k, double t_k, const Vector& x_km1, const Vector& f_km1,
                                  const Vector* f_km2, Vector& g) const {
  if (scheme_.bootstrap_step(k)) {
    g = x_km1 + dt_ * f_km1;
  } else {
    if (!f_km2) throw DimensionError("second-order step needs f at k-2");
    g.noalias() = A_im_ * x_km1;
    g += dt_ * (1.5 * f_km1 - 0.5 * (*f_km2));
  }
  if (has_input_) g.noalias() += dt_ * (B_ * sys_.input(t_k));
}

Vector ImexOperators::solve_step(Index k, const Vector& rhs) const {
  return scheme_.bootstrap_step(k) ? Vector(lu1_->solve(rhs)) : Vector(lu2_->solve(rhs));
}

Vector ImexOperators::solve_E(const Vector& b) const {
  return scheme_.order == 1 ? Vector(lu1_->solve(b)) : Vector(lu2_->solve(b));
}

Vector ImexOperators::solve_E_transpose(const Vector& b) const { return lu_t_->solve(b); }

Trajectory solve_imex(const ImexOperators& ops, const TimeGrid& grid, const Matrix* closure) {
  const ParametricSystem& sys = ops.system();
  const Parameter& p = ops.parameter();
  const Index n = ops.dim();
  if (closure && (closure->rows() != n || closure->cols() != grid.size())) {
    throw DimensionError("closure must be N x N_t");
  }
  if (std::abs(grid.dt - ops.dt()) > 1e-15 * grid.dt) {
    throw DimensionError("grid time step differs from the scheme's time step");
  }
  Trajectory tr;
  tr.grid = grid;
  tr.parameter = p;
  tr.provenance = ops.scheme().order == 1 ? Provenance::imex1 : Provenance::imex2;
  tr.states.resize(n, grid.size());
  tr.states.col(0) = sys.x0(p);

  Vector f_prev(n), f_prev2(n), g(n), x(n);
  sys.nonlinearity(tr.states.col(0), p, f_prev);
  for (Index k = 1; k <= grid.K; ++k) {
    ops.explicit_part(k, grid.t(k), tr.states.col(k - 1), f_prev, &f_prev2, g);
    if (closure) g += closure->col(k);
    x = ops.solve_step(k, g);
    if (!x.allFinite()) throw Error("IMEX solution became non-finite at step " + std::to_string(k));
    tr.states.col(k) = x;
    f_prev2.swap(f_prev);
    sys.nonlinearity(x, p, f_prev);
  }
  return tr;
}

Trajectory solve_imex(const ParametricSystem& sys, const TimeGrid& grid, ImexScheme scheme,
                      const Parameter& p, const Matrix* closure) {
  ImexOperators ops(sys, p, grid.dt, scheme);
  return solve_imex(ops, grid, closure);
}

}  // namespace decrom
