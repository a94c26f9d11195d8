#include "decrom/rbf.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include <limits>

namespace decrom {

Vector RbfInterpolant::features(const Vector& u) const {
  const Index ds = centers_.rows();
  const Index p = centers_.cols();
  Vector phi(ds + p + 1);
  for (Index i = 0; i < ds; ++i) phi[i] = kernel((centers_.row(i).transpose() - u).norm());
  phi[ds] = 1.0;
  phi.tail(p) = u;
  return phi;
}

bool RbfInterpolant::extrapolates(const Parameter& p) const {
  const Vector u = domain_.normalize(p);
  for (Index j = 0; j < centers_.cols(); ++j) {
    const double lo = centers_.col(j).minCoeff();
    const double hi = centers_.col(j).maxCoeff();
    const double slack = 1e-12 * std::max(1.0, hi - lo);
    if (u[j] < lo - slack || u[j] > hi + slack) return true;
  }
  return false;
}

RbfInterpolant RbfInterpolant::fit(const std::vector<Matrix>& reduced,
                                   const std::vector<Parameter>& params,
                                   const ParameterDomain& domain) {
  if (reduced.empty() || reduced.size() != params.size()) {
    throw DimensionError("RBF fit needs one reduced slice per parameter");
  }
  const Index ds = static_cast<Index>(params.size());
  const Index p = domain.dim();
  if (ds < p + 2) throw DomainError("RBF fit needs at least p + 2 centers");
  const Index nd = reduced.front().rows();
  const Index nt = reduced.front().cols();
  for (const auto& r : reduced) {
    if (r.rows() != nd || r.cols() != nt) throw DimensionError("reduced slices differ in shape");
  }

  RbfInterpolant m;
  m.domain_ = domain;
  m.n_d_ = nd;
  m.n_t_ = nt;
  m.centers_.resize(ds, p);
  for (Index i = 0; i < ds; ++i) m.centers_.row(i) = domain.normalize(params[static_cast<std::size_t>(i)]).transpose();
  for (Index i = 0; i < ds; ++i) {
    for (Index j = 0; j < i; ++j) {
      if ((m.centers_.row(i) - m.centers_.row(j)).norm() < 1e-14) {
        throw DomainError("duplicate RBF centers at " + format_parameter(params[static_cast<std::size_t>(i)]));
      }
    }
  }

  const Index size = ds + p + 1;
  Matrix S = Matrix::Zero(size, size);
  for (Index i = 0; i < ds; ++i) {
    S.row(i).head(ds + p + 1) = m.features(m.centers_.row(i).transpose()).transpose();
  }
  S.block(ds, 0, p + 1, ds) = S.block(0, ds, ds, p + 1).transpose();

  Eigen::JacobiSVD<Matrix> svd(S);
  const Vector sv = svd.singularValues();
  m.condition_ = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1]
                                         : std::numeric_limits<double>::infinity();

  Eigen::ColPivHouseholderQR<Matrix> qr(S);
  if (qr.rank() < size) {
    throw ConditioningError("RBF interpolation matrix is singular", m.condition_);
  }
  if (m.condition_ > 1e12) {
    spdlog::warn("RBF interpolation matrix is ill-conditioned (cond ~ {:.3e})", m.condition_);
  }

  // Right-hand sides: column k*n_d + j carries coordinate j at step k.
  Matrix F = Matrix::Zero(size, nd * nt);
  for (Index i = 0; i < ds; ++i) {
    const Matrix& r = reduced[static_cast<std::size_t>(i)];
    F.row(i) = Eigen::Map<const Eigen::RowVectorXd>(r.data(), nd * nt);
  }
  m.weights_ = qr.solve(F);
  return m;
}

Vector RbfInterpolant::eval(Index k, const Parameter& p, bool* extrapolated) const {
  if (k < 0 || k >= n_t_) throw DimensionError("time index outside the fitted grid");
  if (extrapolated) *extrapolated = extrapolates(p);
  const Vector phi = features(domain_.normalize(p));
  return weights_.middleCols(k * n_d_, n_d_).transpose() * phi;
}

Matrix RbfInterpolant::eval_all(const Parameter& p, bool* extrapolated) const {
  if (extrapolated) *extrapolated = extrapolates(p);
  const Vector phi = features(domain_.normalize(p));
  const Vector flat = weights_.transpose() * phi;
  return Eigen::Map<const Matrix>(flat.data(), n_d_, n_t_);
}

RbfInterpolant RbfInterpolant::from_parts(Matrix centers, Matrix weights, Index n_d, Index n_t,
                                          ParameterDomain domain, double condition) {
  RbfInterpolant m;
  m.centers_ = std::move(centers);
  m.weights_ = std::move(weights);
  m.n_d_ = n_d;
  m.n_t_ = n_t;
  m.domain_ = std::move(domain);
  m.condition_ = condition;
  if (m.weights_.rows() != m.centers_.rows() + m.centers_.cols() + 1 ||
      m.weights_.cols() != n_d * n_t) {
    throw DimensionError("RBF weight array has the wrong shape");
  }
  return m;
}

}  // namespace decrom
