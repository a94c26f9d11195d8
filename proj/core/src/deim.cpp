#include "decrom/deim.hpp"

#include "decrom/linalg.hpp"

#include <spdlog/spdlog.h>

namespace decrom {

std::vector<Index> deim_indices(const Matrix& U) {
  std::vector<Index> idx;
  if (U.cols() == 0) return idx;
  Index i0;
  U.col(0).cwiseAbs().maxCoeff(&i0);
  idx.push_back(i0);
  for (Index l = 1; l < U.cols(); ++l) {
    Matrix PtU(l, l);
    Vector Ptu(l);
    for (Index r = 0; r < l; ++r) {
      PtU.row(r) = U.row(idx[static_cast<std::size_t>(r)]).head(l);
      Ptu[r] = U(idx[static_cast<std::size_t>(r)], l);
    }
    const Vector c = PtU.partialPivLu().solve(Ptu);
    const Vector res = U.col(l) - U.leftCols(l) * c;
    Index i;
    const double m = res.cwiseAbs().maxCoeff(&i);
    if (!(m > 0.0)) throw FactorizationError("DEIM basis is rank deficient");
    idx.push_back(i);
  }
  return idx;
}

DeimModel::DeimModel(Matrix U) : U_(std::move(U)) { refresh(); }

void DeimModel::refresh() {
  indices_ = deim_indices(U_);
  const Index m = U_.cols();
  Matrix PtU(m, m);
  for (Index r = 0; r < m; ++r) PtU.row(r) = U_.row(indices_[static_cast<std::size_t>(r)]);
  Eigen::FullPivLU<Matrix> lu(PtU);
  if (m > 0 && !lu.isInvertible()) throw FactorizationError("P^T U is singular");
  PtU_inv_ = m > 0 ? lu.inverse() : Matrix(0, 0);
}

DeimModel DeimModel::build(const Matrix& F, Index m) {
  ThinSvd svd = left_svd(F);
  const Index rank = numerical_rank(svd.s);
  if (m > rank) {
    throw DimensionError("DEIM size " + std::to_string(m) + " exceeds snapshot rank " +
                         std::to_string(rank));
  }
  return DeimModel(svd.U.leftCols(m));
}

DeimModel DeimModel::build_tol(const Matrix& F, double tol) {
  ThinSvd svd = left_svd(F);
  return DeimModel(svd.U.leftCols(energy_rank(svd.s, tol)));
}

Index DeimModel::extend(const Matrix& F, Index r_c) {
  Matrix Fd = F;
  if (U_.cols() > 0) Fd -= U_ * (U_.transpose() * F);
  ThinSvd svd = left_svd(Fd);
  const double ref = F.norm();
  Index take = 0;
  while (take < r_c && take < svd.s.size() && svd.s[take] > 1e-12 * std::max(ref, 1e-300)) ++take;
  if (take < r_c) {
    spdlog::info("DEIM extension: requested {} modes, only {} available", r_c, take);
  }
  Matrix U = U_;
  const Index added = append_orthonormal(U, svd.U.leftCols(take), 1e-8);
  if (added > 0) {
    U_ = std::move(U);
    refresh();
  }
  return added;
}

Vector DeimModel::coefficients(const Vector& f_rows) const {
  if (f_rows.size() != size()) throw DimensionError("DEIM sample count mismatch");
  return PtU_inv_ * f_rows;
}

Vector DeimModel::project(const Vector& f) const {
  Vector rows(size());
  for (Index r = 0; r < size(); ++r) rows[r] = f[indices_[static_cast<std::size_t>(r)]];
  return interpolate(rows);
}

}  // namespace decrom
