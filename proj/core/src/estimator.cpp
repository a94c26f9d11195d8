#include "decrom/estimator.hpp"

#include "decrom/defect.hpp"

#include <cmath>

namespace decrom {

namespace {

constexpr double kDegenerate = 1e-14;

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  if (M.cols() == 1) return M.col(0).norm();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M.transpose() * M);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

Vector column_norms(const Matrix& M) {
  Vector n(M.cols());
  for (Index j = 0; j < M.cols(); ++j) n[j] = M.col(j).norm();
  return n;
}

}  // namespace

CorrectedResidual residual_corrected(const ImexOperators& ops, const Matrix& V, const Matrix& xhat,
                                     const Matrix* closure, const TimeGrid& grid,
                                     const DeimModel* deim) {
  if (V.cols() != xhat.rows()) throw DimensionError("basis and reduced states disagree");
  const Matrix xtilde = V * xhat;
  CorrectedResidual out;
  out.r = scheme_residual(xtilde, ops, grid, closure);
  const Index n = ops.dim();
  out.e_H = Matrix::Zero(n, grid.size());
  const ParametricSystem& sys = ops.system();
  if (deim && !sys.is_linear() && deim->size() > 0) {
    Matrix ef(n, grid.size());
    Vector f(n);
    for (Index k = 0; k < grid.K; ++k) {
      sys.nonlinearity(xtilde.col(k), ops.parameter(), f);
      ef.col(k) = f - deim->project(f);
    }
    for (Index k = 1; k <= grid.K; ++k) {
      if (ops.scheme().bootstrap_step(k)) {
        out.e_H.col(k) = ops.dt() * ef.col(k - 1);
      } else {
        out.e_H.col(k) = ops.dt() * (1.5 * ef.col(k - 1) - 0.5 * ef.col(k - 2));
      }
    }
  }
  out.norms = column_norms(out.r);
  out.interp_norms = column_norms(out.r - out.e_H);
  return out;
}

Vector residual_corrected_at(const ImexOperators& ops, const Matrix& xtilde, const Matrix* closure,
                             const TimeGrid& grid, Index k) {
  if (k < 1 || k > grid.K) throw DimensionError("residual step outside 1..K");
  const ParametricSystem& sys = ops.system();
  const Parameter& p = ops.parameter();
  Vector f1 = sys.nonlinearity(xtilde.col(k - 1), p);
  Vector f2;
  if (!ops.scheme().bootstrap_step(k)) f2 = sys.nonlinearity(xtilde.col(k - 2), p);
  Vector g;
  ops.explicit_part(k, grid.t(k), xtilde.col(k - 1), f1, f2.size() ? &f2 : nullptr, g);
  if (closure) g += closure->col(k);
  g.noalias() -= ops.E_step(k) * xtilde.col(k);
  return g;
}

Matrix auxiliary_residual(const ImexOperators& ops, const Matrix& fom_states, const Matrix& xtilde,
                          const Matrix* closure, const TimeGrid& grid) {
  if (fom_states.rows() != xtilde.rows() || fom_states.cols() != xtilde.cols()) {
    throw DimensionError("FOM and reduced trajectories differ in shape");
  }
  // g^k(x^{k-1}, x^{k-2}) + d^k = -residual(x) + E_k x^k.
  Matrix R = scheme_residual(fom_states, ops, grid, closure);
  for (Index k = 1; k <= grid.K; ++k) {
    R.col(k) += ops.E_step(k) * (fom_states.col(k) - xtilde.col(k));
  }
  return R;
}

Matrix auxiliary_residual_identity(const ImexOperators& ops, const Matrix& fom_states,
                                   const Matrix& xtilde, const TimeGrid& grid) {
  Matrix R = Matrix::Zero(fom_states.rows(), grid.size());
  for (Index k = 1; k <= grid.K; ++k) R.col(k) = ops.E_step(k) * (fom_states.col(k) - xtilde.col(k));
  return R;
}

RhoBar rho_bar(const Vector& aux_norms, const Vector& residual_norms) {
  if (aux_norms.size() != residual_norms.size() || aux_norms.size() < 2) {
    throw DimensionError("rho_bar needs matching norm sequences with at least one step");
  }
  const Index K = aux_norms.size() - 1;
  RhoBar out;
  out.rho.resize(K);
  for (Index k = 1; k <= K; ++k) {
    const double a = aux_norms[k], r = residual_norms[k];
    double rho;
    if (a < kDegenerate && r < kDegenerate) {
      rho = 1.0;
    } else if (r == 0.0) {
      throw EstimatorError("degenerate residual ratio at step " + std::to_string(k));
    } else {
      rho = a / r;
    }
    out.rho[k - 1] = rho;
  }
  out.value = out.rho.mean();
  return out;
}

DualSolution solve_dual(const ImexOperators& ops, const Matrix& C, const Matrix* V_du) {
  const Index n = ops.dim();
  if (C.cols() != n) throw DimensionError("output matrix width differs from the state dimension");
  const Matrix Cdu = -C.transpose();
  DualSolution d;
  d.x_du.resize(n, C.rows());
  if (!V_du) {
    for (Index j = 0; j < C.rows(); ++j) d.x_du.col(j) = ops.solve_E_transpose(Cdu.col(j));
  } else {
    if (V_du->rows() != n || V_du->cols() == 0) throw DimensionError("dual basis has the wrong shape");
    const SparseMatrix Et = ops.E_im().transpose();
    const Matrix EtV = Et * (*V_du);
    const Matrix Ehat = V_du->transpose() * EtV;
    Eigen::FullPivLU<Matrix> lu(Ehat);
    if (!lu.isInvertible()) throw FactorizationError("reduced dual operator is singular");
    d.x_du = (*V_du) * lu.solve(V_du->transpose() * Cdu);
    d.reduced = true;
  }
  const SparseMatrix Et = ops.E_im().transpose();
  d.r_du = Cdu - Et * d.x_du;
  d.x_du_norm = spectral_norm(d.x_du);
  d.r_du_norm = spectral_norm(d.r_du);
  d.x_du_column_norms = column_norms(d.x_du);
  d.r_du_column_norms = column_norms(d.r_du);
  return d;
}

OperatorNorms estimate_operator_norms(const ImexOperators& ops, int max_iterations, double rel_tol) {
  OperatorNorms out;
  const Index n = ops.dim();
  out.Einv = power_norm([&](const Vector& v, Vector& w) { w = ops.solve_E(v); },
                        [&](const Vector& v, Vector& w) { w = ops.solve_E_transpose(v); }, n,
                        max_iterations, rel_tol)
                 .value;
  const SparseMatrix& Aim = ops.A_im();
  out.Einv_Aim = power_norm([&](const Vector& v, Vector& w) { w = ops.solve_E(Aim * v); },
                            [&](const Vector& v, Vector& w) {
                              w = Aim.transpose() * ops.solve_E_transpose(v);
                            },
                            n, max_iterations, rel_tol)
                     .value;
  return out;
}

StateBoundConstants state_bound_constants(const OperatorNorms& norms, double dt, double L_f) {
  if (L_f < 0.0) throw EstimatorError("Lipschitz constant must be non-negative");
  return {norms.Einv, norms.Einv_Aim + dt * L_f * norms.Einv};
}

Vector state_error_bound(const Vector& residual_norms, const StateBoundConstants& c, double e0_norm) {
  if (e0_norm < 0.0 || c.zeta < 0.0 || c.xi < 0.0) throw EstimatorError("negative bound input");
  const Index Nt = residual_norms.size();
  Vector delta(Nt);
  for (Index k = 0; k < Nt; ++k) {
    double s = std::pow(c.xi, static_cast<double>(k)) * e0_norm;
    for (Index i = 1; i <= k; ++i) {
      s += c.zeta * std::pow(c.xi, static_cast<double>(k - i)) * residual_norms[i];
    }
    delta[k] = s;
  }
  return delta;
}

double lipschitz_estimate(const ParametricSystem& sys, const Parameter& p, const Matrix& states,
                          Index max_columns) {
  if (sys.is_linear()) return 0.0;
  const Index nc = states.cols();
  std::vector<Index> cols;
  if (nc <= max_columns) {
    for (Index j = 0; j < nc; ++j) cols.push_back(j);
  } else {
    for (Index j = 0; j < max_columns; ++j) cols.push_back(j * (nc - 1) / (max_columns - 1));
  }
  Matrix F(states.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    F.col(static_cast<Index>(j)) = sys.nonlinearity(states.col(cols[j]), p);
  }
  double L = 0.0;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    for (std::size_t j = i + 1; j < cols.size(); ++j) {
      const double dx = (states.col(cols[i]) - states.col(cols[j])).norm();
      if (dx <= 1e-14) continue;
      const double df = (F.col(static_cast<Index>(i)) - F.col(static_cast<Index>(j))).norm();
      L = std::max(L, df / dx);
    }
  }
  return L;
}

std::string to_string(EstimatorVariant v) { return v == EstimatorVariant::a ? "a" : "b"; }

EstimatorVariant variant_from_string(const std::string& s) {
  if (s == "a") return EstimatorVariant::a;
  if (s == "b") return EstimatorVariant::b;
  throw ConfigError("unknown estimator variant '" + s + "'");
}

double time_mean(const Vector& values) {
  if (values.size() == 0) return 0.0;
  return values.sum() / static_cast<double>(values.size());
}

ErrorEstimate output_error_estimate(EstimatorVariant variant, const OutputEstimateInputs& in) {
  if (!in.residual_norms) throw EstimatorError("residual norms missing");
  const Vector& r = *in.residual_norms;
  if (in.r_du_norm < 0.0 || in.Einv_norm < 0.0 || in.x_du_norm < 0.0 || in.rho_bar < 0.0 ||
      (r.size() && r.minCoeff() < 0.0)) {
    throw EstimatorError("estimator inputs must be non-negative");
  }
  if (variant == EstimatorVariant::a) {
    if (!in.output_gap) throw EstimatorError("variant a needs the output gap term");
    if (in.output_gap->size() != r.size()) throw DimensionError("output gap length mismatch");
    if (in.output_gap->size() && in.output_gap->minCoeff() < 0.0) {
      throw EstimatorError("estimator inputs must be non-negative");
    }
  }
  ErrorEstimate e;
  e.variant = variant;
  e.rho_bar = in.rho_bar;
  e.Einv_norm = in.Einv_norm;
  e.x_du_norm = in.x_du_norm;
  const double factor = in.rho_bar * in.Einv_norm * in.r_du_norm + std::abs(1.0 - in.rho_bar) * in.x_du_norm;
  e.per_step = factor * r;
  if (r.size()) e.per_step[0] = 0.0;
  if (variant == EstimatorVariant::a) e.per_step += *in.output_gap;
  if (!e.per_step.allFinite()) throw EstimatorError("non-finite error estimate");
  e.mean = time_mean(e.per_step);
  return e;
}

Matrix modified_output(const Matrix& yhat, const DualSolution& dual, const Matrix& residual) {
  if (residual.cols() != yhat.cols() || residual.rows() != dual.x_du.rows() ||
      yhat.rows() != dual.x_du.cols()) {
    throw DimensionError("modified output operands disagree in shape");
  }
  return yhat - dual.x_du.transpose() * residual;
}

}  // namespace decrom
