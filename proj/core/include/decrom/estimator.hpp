#pragma once

#include "decrom/closure.hpp"
#include "decrom/deim.hpp"
#include "decrom/imex.hpp"
#include "decrom/linalg.hpp"
#include "decrom/rom.hpp"
#include "decrom/types.hpp"

#include <optional>
#include <string>

namespace decrom {

/// Residual of the corrected ROM inserted into the imposed full-order scheme,
/// split into the DEIM-interpolated part r_I and the hyperreduction error e_H.
/// Column 0 of every matrix is zero.
struct CorrectedResidual {
  Matrix r;    // r_I + e_H
  Matrix e_H;  // zero when no DEIM model is given
  Vector norms;         // ||r^k||
  Vector interp_norms;  // ||r_I^k||

  const Vector& norms_for(bool drop_hyperreduction_error) const {
    return drop_hyperreduction_error ? interp_norms : norms;
  }
};

/// Lifts xtilde = V xhat and evaluates the corrected residual for all steps.
/// closure is the full N x N_t defect (null for the uncorrected residual).
CorrectedResidual residual_corrected(const ImexOperators& ops, const Matrix& V, const Matrix& xhat,
                                     const Matrix* closure, const TimeGrid& grid,
                                     const DeimModel* deim = nullptr);

/// Single-step form: r^k for the lifted trajectory xtilde (N x N_t).
Vector residual_corrected_at(const ImexOperators& ops, const Matrix& xtilde, const Matrix* closure,
                             const TimeGrid& grid, Index k);

/// Auxiliary residual r_aux^k = g^k(x^{k-1}, x^{k-2}) + d^k - E_k xtilde^k using FOM states x.
Matrix auxiliary_residual(const ImexOperators& ops, const Matrix& fom_states, const Matrix& xtilde,
                          const Matrix* closure, const TimeGrid& grid);
/// Identity form E_k (x^k - xtilde^k), equal to the above when the closure is the exact defect.
Matrix auxiliary_residual_identity(const ImexOperators& ops, const Matrix& fom_states,
                                   const Matrix& xtilde, const TimeGrid& grid);

struct RhoBar {
  double value = 1.0;
  Vector rho;  // rho^k, k = 1..K stored at index k-1
};

/// rho_bar = mean_k ||r_aux^k|| / ||r^k||; rho^k := 1 when both norms are below 1e-14.
RhoBar rho_bar(const Vector& aux_norms, const Vector& residual_norms);

struct DualSolution {
  Matrix x_du;  // N x N_O, full or V_du-reconstructed
  Matrix r_du;  // C_du - E_du x_du
  double x_du_norm = 0.0;  // spectral norm
  double r_du_norm = 0.0;  // spectral norm
  Vector x_du_column_norms;
  Vector r_du_column_norms;
  bool reduced = false;
};

/// E_im^T x_du = -C^T, either directly or Galerkin-reduced with V_du.
DualSolution solve_dual(const ImexOperators& ops, const Matrix& C, const Matrix* V_du = nullptr);

struct OperatorNorms {
  double Einv = 0.0;       // ||E_im^{-1}||_2
  double Einv_Aim = 0.0;   // ||E_im^{-1} A_im||_2
};

OperatorNorms estimate_operator_norms(const ImexOperators& ops, int max_iterations = 20,
                                      double rel_tol = 1e-6);

struct StateBoundConstants {
  double zeta = 0.0;
  double xi = 0.0;
};

StateBoundConstants state_bound_constants(const OperatorNorms& norms, double dt, double L_f);

/// Delta^k = xi^k ||e^0|| + sum_{i=1}^k zeta xi^{k-i} ||r^i||, k = 0..K.
/// residual_norms has N_t entries; entry 0 is ignored.
Vector state_error_bound(const Vector& residual_norms, const StateBoundConstants& c, double e0_norm);

/// Heuristic Lipschitz estimate max ||f(x_i) - f(x_j)|| / ||x_i - x_j|| over column pairs
/// (at most max_columns evenly spaced columns are used).
double lipschitz_estimate(const ParametricSystem& sys, const Parameter& p, const Matrix& states,
                          Index max_columns = 200);

enum class EstimatorVariant { a, b };
std::string to_string(EstimatorVariant v);
EstimatorVariant variant_from_string(const std::string& s);

struct ErrorEstimate {
  Vector per_step;  // k = 0..K, entry 0 is zero
  double mean = 0.0;
  double rho_bar = 1.0;
  EstimatorVariant variant = EstimatorVariant::b;
  double Einv_norm = 0.0;
  double x_du_norm = 0.0;
};

struct OutputEstimateInputs {
  const Vector* residual_norms = nullptr;  // N_t entries, entry 0 ignored
  double r_du_norm = 0.0;
  double Einv_norm = 0.0;
  double x_du_norm = 0.0;
  double rho_bar = 1.0;
  const Vector* output_gap = nullptr;  // ||ybar^k - yhat^k||, variant a only
};

ErrorEstimate output_error_estimate(EstimatorVariant variant, const OutputEstimateInputs& in);

/// Time mean (1/N_t) sum_{k=0}^{K} values[k].
double time_mean(const Vector& values);

/// ybar^k = yhat^k - x_du^T r^k.
Matrix modified_output(const Matrix& yhat, const DualSolution& dual, const Matrix& residual);

}  // namespace decrom
