#pragma once

#include "decrom/models.hpp"
#include "decrom/types.hpp"

#include <vector>

namespace decrom {

/// Polyharmonic cubic RBF interpolant with a linear polynomial tail, fitted to all
/// reduced defect coordinates and time steps at once. Weight column k*n_d + j holds
/// the coefficients for coordinate j at time step k.
class RbfInterpolant {
 public:
  RbfInterpolant() = default;

  /// reduced[i] is the n_d x N_t reduced defect at params[i].
  static RbfInterpolant fit(const std::vector<Matrix>& reduced, const std::vector<Parameter>& params,
                            const ParameterDomain& domain);

  Index num_centers() const { return centers_.rows(); }
  Index output_dim() const { return n_d_; }
  Index num_steps() const { return n_t_; }
  const Matrix& centers() const { return centers_; }
  const Matrix& weights() const { return weights_; }
  double condition_estimate() const { return condition_; }
  const ParameterDomain& domain() const { return domain_; }

  /// Kernel/tail feature vector of length d_s + p + 1 at normalized parameter u.
  Vector features(const Vector& u) const;
  /// True when p lies outside the bounding box of the centers.
  bool extrapolates(const Parameter& p) const;

  Vector eval(Index k, const Parameter& p, bool* extrapolated = nullptr) const;
  /// All time steps at once, n_d x N_t.
  Matrix eval_all(const Parameter& p, bool* extrapolated = nullptr) const;

  static double kernel(double r) { return r * r * r; }

  /// Raw state for serialization.
  static RbfInterpolant from_parts(Matrix centers, Matrix weights, Index n_d, Index n_t,
                                   ParameterDomain domain, double condition);

 private:
  Matrix centers_;  // d_s x p, normalized
  Matrix weights_;  // (d_s + p + 1) x (n_d * N_t)
  Index n_d_ = 0;
  Index n_t_ = 0;
  ParameterDomain domain_;
  double condition_ = 0.0;
};

}  // namespace decrom
