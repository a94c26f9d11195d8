#pragma once

#include "decrom/types.hpp"

#include <functional>

namespace decrom {

struct ThinSvd {
  Matrix U;  // left singular vectors, one per singular value
  Vector s;  // non-increasing
};

/// Thin SVD returning left vectors and singular values only.
ThinSvd left_svd(const Matrix& X);

/// Smallest r with sum_{i>r} s_i^2 <= tol * sum_i s_i^2 (at least 1 for nonzero s).
Index energy_rank(const Vector& s, double tol);

/// Number of singular values above rel_tol * s_0.
Index numerical_rank(const Vector& s, double rel_tol = 1e-12);

/// Appends the columns of W to the orthonormal V by modified Gram-Schmidt with one
/// re-orthogonalization pass. Columns whose remainder falls below drop_tol (relative
/// to their original norm) are skipped. Returns the number of columns appended.
Index append_orthonormal(Matrix& V, const Matrix& W, double drop_tol = 1e-10);

/// max |V^T V - I|.
double orthonormality_error(const Matrix& V);

using LinearMap = std::function<void(const Vector& in, Vector& out)>;

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Power iteration estimate of ||M||_2 given products with M and M^T.
NormEstimate power_norm(const LinearMap& apply, const LinearMap& apply_transpose, Index n,
                        int max_iterations = 20, double rel_tol = 1e-6);

}  // namespace decrom
