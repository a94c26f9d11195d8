#include "decrom/linalg.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace decrom {

ThinSvd left_svd(const Matrix& X) {
  ThinSvd out;
  if (X.size() == 0) {
    out.U.resize(X.rows(), 0);
    return out;
  }
  if (X.cols() <= X.rows()) {
    Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU);
    out.U = svd.matrixU();
    out.s = svd.singularValues();
  } else {
    // Wide matrices: eigen-decompose the Gram matrix X X^T instead.
    Matrix G = X * X.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(G);
    const Index n = G.rows();
    out.U.resize(n, n);
    out.s.resize(n);
    for (Index i = 0; i < n; ++i) {
      out.U.col(i) = eig.eigenvectors().col(n - 1 - i);
      out.s[i] = std::sqrt(std::max(0.0, eig.eigenvalues()[n - 1 - i]));
    }
  }
  return out;
}

Index energy_rank(const Vector& s, double tol) {
  const double total = s.squaredNorm();
  if (total <= 0.0) return 0;
  double tail = total;
  for (Index r = 0; r < s.size(); ++r) {
    tail -= s[r] * s[r];
    if (tail <= tol * total) return r + 1;
  }
  return s.size();
}

Index numerical_rank(const Vector& s, double rel_tol) {
  if (s.size() == 0 || s[0] <= 0.0) return 0;
  Index r = 0;
  while (r < s.size() && s[r] > rel_tol * s[0]) ++r;
  return r;
}

Index append_orthonormal(Matrix& V, const Matrix& W, double drop_tol) {
  if (V.cols() > 0 && V.rows() != W.rows()) throw DimensionError("basis row mismatch");
  const Index n = W.rows();
  Matrix out(n, V.cols() + W.cols());
  out.leftCols(V.cols()) = V;
  Index m = V.cols();
  for (Index j = 0; j < W.cols(); ++j) {
    Vector w = W.col(j);
    const double norm0 = w.norm();
    if (norm0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < m; ++i) w -= out.col(i).dot(w) * out.col(i);
    }
    const double nw = w.norm();
    if (nw <= drop_tol * norm0 || m >= n) continue;
    out.col(m++) = w / nw;
  }
  const Index added = m - V.cols();
  V = out.leftCols(m);
  return added;
}

double orthonormality_error(const Matrix& V) {
  if (V.cols() == 0) return 0.0;
  return (V.transpose() * V - Matrix::Identity(V.cols(), V.cols())).cwiseAbs().maxCoeff();
}

NormEstimate power_norm(const LinearMap& apply, const LinearMap& apply_transpose, Index n,
                        int max_iterations, double rel_tol) {
  NormEstimate est;
  Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  Vector w(n), z(n);
  double prev = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    apply(v, w);
    apply_transpose(w, z);
    const double sigma2 = v.dot(z);
    const double value = std::sqrt(std::max(0.0, sigma2));
    est.value = std::max(value, w.norm());
    est.iterations = it;
    const double zn = z.norm();
    if (zn == 0.0) {
      est.converged = true;
      break;
    }
    v = z / zn;
    if (it > 1 && std::abs(est.value - prev) <= rel_tol * est.value) {
      est.converged = true;
      break;
    }
    prev = est.value;
  }
  return est;
}

}  // namespace decrom
