#pragma once

#include "decrom/types.hpp"

#include <vector>

namespace decrom {

/// Standard DEIM greedy: each index maximizes the interpolation residual of the next
/// basis vector (lowest row wins ties).
std::vector<Index> deim_indices(const Matrix& U);

/// f ~ U (P^T U)^{-1} P^T f.
class DeimModel {
 public:
  DeimModel() = default;
  explicit DeimModel(Matrix U);

  /// POD of the nonlinear snapshots truncated to m modes (or by energy tolerance).
  static DeimModel build(const Matrix& F, Index m);
  static DeimModel build_tol(const Matrix& F, double tol);

  /// Deflates F against U, appends up to r_c leading modes and recomputes indices.
  /// Returns the number of modes appended.
  Index extend(const Matrix& F, Index r_c);

  Index size() const { return U_.cols(); }
  Index dim() const { return U_.rows(); }
  const Matrix& U() const { return U_; }
  const std::vector<Index>& indices() const { return indices_; }

  /// (P^T U)^{-1} f_P given the sampled entries f_P.
  Vector coefficients(const Vector& f_rows) const;
  Vector interpolate(const Vector& f_rows) const { return U_ * coefficients(f_rows); }
  /// Interpolant of a full vector.
  Vector project(const Vector& f) const;
  /// (P^T U)^{-1} as a dense matrix.
  const Matrix& PtU_inverse() const { return PtU_inv_; }

 private:
  void refresh();

  Matrix U_;
  std::vector<Index> indices_;
  Matrix PtU_inv_;
};

}  // namespace decrom
