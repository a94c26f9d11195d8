#include "decrom/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace decrom {

namespace {

constexpr double kDomainSlack = 1e-12;

SparseMatrix dirichlet_laplacian(Index n, double h) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * n);
  const double s = 1.0 / (h * h);
  for (Index i = 0; i < n; ++i) {
    if (i > 0) trip.emplace_back(i, i - 1, s);
    trip.emplace_back(i, i, -2.0 * s);
    if (i + 1 < n) trip.emplace_back(i, i + 1, s);
  }
  SparseMatrix L(n, n);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

SparseMatrix neumann_laplacian(Index m, double h) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * m);
  const double s = 1.0 / (h * h);
  for (Index i = 0; i < m; ++i) {
    if (i == 0) {
      trip.emplace_back(0, 0, -2.0 * s);
      trip.emplace_back(0, 1, 2.0 * s);
    } else if (i == m - 1) {
      trip.emplace_back(i, i - 1, 2.0 * s);
      trip.emplace_back(i, i, -2.0 * s);
    } else {
      trip.emplace_back(i, i - 1, s);
      trip.emplace_back(i, i, -2.0 * s);
      trip.emplace_back(i, i + 1, s);
    }
  }
  SparseMatrix L(m, m);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

Matrix unit_rows(Index n, const std::vector<Index>& idx) {
  Matrix C = Matrix::Zero(static_cast<Index>(idx.size()), n);
  for (std::size_t r = 0; r < idx.size(); ++r) C(static_cast<Index>(r), idx[r]) = 1.0;
  return C;
}

void check_cells(Index n_cells) {
  if (n_cells < 8) throw DomainError("mesh needs at least 8 cells");
}

void check_state(const Vector& x, Index n) {
  if (x.size() != n) {
    throw DimensionError("state has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(n));
  }
}

}  // namespace

ParameterDomain::ParameterDomain(std::vector<ParameterAxis> axes) : axes_(std::move(axes)) {
  for (const auto& a : axes_) {
    if (!(a.hi > a.lo)) throw DomainError("empty parameter axis " + a.name);
    if (a.scale == AxisScale::log && a.lo <= 0.0) {
      throw DomainError("log axis " + a.name + " must be positive");
    }
  }
}

bool ParameterDomain::contains(const Parameter& p) const {
  if (p.size() != dim()) return false;
  for (Index i = 0; i < dim(); ++i) {
    const auto& a = axes_[static_cast<std::size_t>(i)];
    const double slack = kDomainSlack * std::max(std::abs(a.lo), std::abs(a.hi));
    if (!std::isfinite(p[i]) || p[i] < a.lo - slack || p[i] > a.hi + slack) return false;
  }
  return true;
}

void ParameterDomain::check(const Parameter& p) const {
  if (p.size() != dim()) {
    throw DomainError("parameter has " + std::to_string(p.size()) + " entries, expected " +
                      std::to_string(dim()));
  }
  if (!contains(p)) throw DomainError("parameter " + format_parameter(p) + " outside domain");
}

Vector ParameterDomain::normalize(const Parameter& p) const {
  if (p.size() != dim()) throw DimensionError("parameter dimension mismatch");
  Vector u(dim());
  for (Index i = 0; i < dim(); ++i) {
    const auto& a = axes_[static_cast<std::size_t>(i)];
    if (a.scale == AxisScale::log) {
      u[i] = (std::log(p[i]) - std::log(a.lo)) / (std::log(a.hi) - std::log(a.lo));
    } else {
      u[i] = (p[i] - a.lo) / (a.hi - a.lo);
    }
  }
  return u;
}

Parameter ParameterDomain::denormalize(const Vector& u) const {
  if (u.size() != dim()) throw DimensionError("parameter dimension mismatch");
  Parameter p(dim());
  for (Index i = 0; i < dim(); ++i) {
    const auto& a = axes_[static_cast<std::size_t>(i)];
    if (a.scale == AxisScale::log) {
      p[i] = std::exp(std::log(a.lo) + u[i] * (std::log(a.hi) - std::log(a.lo)));
    } else {
      p[i] = a.lo + u[i] * (a.hi - a.lo);
    }
  }
  return p;
}

Vector ParametricSystem::nonlinearity(const Vector& x, const Parameter& p) const {
  Vector out(dim());
  nonlinearity(x, p, out);
  return out;
}

Vector ParametricSystem::evaluate_rhs(const Vector& x, double t, const Parameter& p) const {
  check_state(x, dim());
  Vector out(dim());
  nonlinearity(x, p, out);
  out += A(p) * x;
  out += B(p) * input(t);
  return out;
}

std::unique_ptr<ParametricSystem> assemble(const ModelOptions& options) {
  if (options.id == "heat") return std::make_unique<HeatModel>(options.n_cells);
  if (options.id == "burgers") {
    return std::make_unique<BurgersModel>(options.n_cells, options.convection);
  }
  if (options.id == "fhn") return std::make_unique<FhnModel>(options.n_cells);
  throw DomainError("unknown model id '" + options.id + "'");
}

std::unique_ptr<ParametricSystem> assemble(const std::string& model_id, Index n_cells) {
  ModelOptions o;
  o.id = model_id;
  o.n_cells = n_cells;
  return assemble(o);
}

// ---------------------------------------------------------------- heat

HeatModel::HeatModel(Index n_cells) {
  check_cells(n_cells);
  n_ = n_cells - 1;
  h_ = 1.0 / static_cast<double>(n_cells);
  laplacian_ = dirichlet_laplacian(n_, h_);
  C_ = unit_rows(n_, {n_ - 1});
  domain_ = ParameterDomain({{"mu", 0.01, 0.1, AxisScale::linear}});
}

SparseMatrix HeatModel::A(const Parameter& p) const {
  domain_.check(p);
  return p[0] * laplacian_;
}

Matrix HeatModel::B(const Parameter& p) const {
  domain_.check(p);
  return Matrix::Zero(n_, 1);
}

Vector HeatModel::x0(const Parameter& p) const {
  domain_.check(p);
  constexpr double m = 0.5;
  constexpr double sigma = 0.15;
  Vector x(n_);
  for (Index i = 0; i < n_; ++i) {
    const double z = static_cast<double>(i + 1) * h_;
    const double s = (z - m) / sigma;
    x[i] = std::exp(-0.5 * s * s) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  }
  return x;
}

Vector HeatModel::input(double) const { return Vector::Zero(1); }

void HeatModel::nonlinearity(const Vector& x, const Parameter&, Vector& out) const {
  check_state(x, n_);
  out.setZero(n_);
}

void HeatModel::nonlinearity_rows(const Vector&, const Parameter&, const std::vector<Index>& rows,
                                  Vector& out) const {
  out.setZero(static_cast<Index>(rows.size()));
}

std::vector<Index> HeatModel::stencil(Index) const { return {}; }

SparseMatrix HeatModel::nonlinearity_jacobian(const Vector&, const Parameter&) const {
  return SparseMatrix(n_, n_);
}

// ------------------------------------------------------------- burgers

BurgersModel::BurgersModel(Index n_cells, ConvectionStencil convection)
    : convection_(convection) {
  check_cells(n_cells);
  n_ = n_cells;
  dz_ = 1.0 / static_cast<double>(n_ + 1);
  laplacian_ = dirichlet_laplacian(n_, dz_);
  C_ = unit_rows(n_, {n_ - 1});
  domain_ = ParameterDomain({{"mu", 0.005, 1.0, AxisScale::log}});
}

SparseMatrix BurgersModel::A(const Parameter& p) const {
  domain_.check(p);
  return p[0] * laplacian_;
}

Matrix BurgersModel::B(const Parameter& p) const {
  domain_.check(p);
  return Matrix::Zero(n_, 1);
}

Vector BurgersModel::x0(const Parameter& p) const {
  domain_.check(p);
  Vector x(n_);
  for (Index i = 0; i < n_; ++i) {
    x[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i + 1) * dz_);
  }
  return x;
}

Vector BurgersModel::input(double) const { return Vector::Zero(1); }

double BurgersModel::row_value(const Vector& x, Index i) const {
  const double xl = i > 0 ? x[i - 1] : 0.0;
  const double xr = i + 1 < n_ ? x[i + 1] : 0.0;
  const double xi = x[i];
  if (convection_ == ConvectionStencil::central) return -xi * (xr - xl) / (2.0 * dz_);
  if (xi >= 0.0) return -xi * (xi - xl) / dz_;
  return -xi * (xr - xi) / dz_;
}

void BurgersModel::nonlinearity(const Vector& x, const Parameter&, Vector& out) const {
  check_state(x, n_);
  out.resize(n_);
  for (Index i = 0; i < n_; ++i) out[i] = row_value(x, i);
}

void BurgersModel::nonlinearity_rows(const Vector& x, const Parameter&,
                                     const std::vector<Index>& rows, Vector& out) const {
  check_state(x, n_);
  out.resize(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Index>(r)] = row_value(x, rows[r]);
}

std::vector<Index> BurgersModel::stencil(Index row) const {
  std::vector<Index> s;
  if (row > 0) s.push_back(row - 1);
  s.push_back(row);
  if (row + 1 < n_) s.push_back(row + 1);
  return s;
}

SparseMatrix BurgersModel::nonlinearity_jacobian(const Vector& x, const Parameter&) const {
  check_state(x, n_);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * n_);
  for (Index i = 0; i < n_; ++i) {
    const double xl = i > 0 ? x[i - 1] : 0.0;
    const double xr = i + 1 < n_ ? x[i + 1] : 0.0;
    const double xi = x[i];
    double dl = 0.0, dd = 0.0, dr = 0.0;
    if (convection_ == ConvectionStencil::central) {
      dl = xi / (2.0 * dz_);
      dd = -(xr - xl) / (2.0 * dz_);
      dr = -xi / (2.0 * dz_);
    } else if (xi >= 0.0) {
      dl = xi / dz_;
      dd = -(2.0 * xi - xl) / dz_;
    } else {
      dd = -(xr - 2.0 * xi) / dz_;
      dr = -xi / dz_;
    }
    if (i > 0) trip.emplace_back(i, i - 1, dl);
    trip.emplace_back(i, i, dd);
    if (i + 1 < n_) trip.emplace_back(i, i + 1, dr);
  }
  SparseMatrix J(n_, n_);
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

// ----------------------------------------------------------------- fhn

FhnModel::FhnModel(Index n_nodes) {
  check_cells(n_nodes);
  m_ = n_nodes;
  h_ = 1.0 / static_cast<double>(m_ - 1);
  laplacian_ = neumann_laplacian(m_, h_);
  C_ = unit_rows(2 * m_, {1, m_ + 1});
  domain_ = ParameterDomain({{"eps", 0.01, 0.04, AxisScale::linear},
                             {"c", 0.025, 0.075, AxisScale::linear}});
}

double FhnModel::stimulus(double t) { return 50000.0 * t * t * t * std::exp(-15.0 * t); }

SparseMatrix FhnModel::A(const Parameter& p) const {
  domain_.check(p);
  const double eps = p[0];
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(laplacian_.nonZeros() + 3 * m_));
  for (Index k = 0; k < laplacian_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(laplacian_, k); it; ++it) {
      trip.emplace_back(it.row(), it.col(), eps * it.value());
    }
  }
  for (Index i = 0; i < m_; ++i) {
    trip.emplace_back(i, m_ + i, -1.0 / eps);
    trip.emplace_back(m_ + i, i, b);
    trip.emplace_back(m_ + i, m_ + i, -gamma);
  }
  SparseMatrix A(2 * m_, 2 * m_);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

Matrix FhnModel::B(const Parameter& p) const {
  domain_.check(p);
  const double eps = p[0];
  const double c = p[1];
  Matrix B = Matrix::Zero(2 * m_, 2);
  B(0, 0) = 2.0 * eps / h_;
  B.col(1).head(m_).setConstant(c / eps);
  B.col(1).tail(m_).setConstant(c);
  return B;
}

Vector FhnModel::x0(const Parameter& p) const {
  domain_.check(p);
  return Vector::Constant(2 * m_, 0.001);
}

Vector FhnModel::input(double t) const {
  Vector u(2);
  u << stimulus(t), 1.0;
  return u;
}

void FhnModel::nonlinearity(const Vector& x, const Parameter& p, Vector& out) const {
  check_state(x, 2 * m_);
  const double eps = p[0];
  out.setZero(2 * m_);
  for (Index i = 0; i < m_; ++i) {
    const double v = x[i];
    out[i] = v * (v - 0.1) * (1.0 - v) / eps;
  }
}

void FhnModel::nonlinearity_rows(const Vector& x, const Parameter& p, const std::vector<Index>& rows,
                                 Vector& out) const {
  check_state(x, 2 * m_);
  const double eps = p[0];
  out.resize(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index i = rows[r];
    const double v = x[i];
    out[static_cast<Index>(r)] = i < m_ ? v * (v - 0.1) * (1.0 - v) / eps : 0.0;
  }
}

std::vector<Index> FhnModel::stencil(Index row) const {
  if (row < m_) return {row};
  return {};
}

SparseMatrix FhnModel::nonlinearity_jacobian(const Vector& x, const Parameter& p) const {
  check_state(x, 2 * m_);
  const double eps = p[0];
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(m_));
  for (Index i = 0; i < m_; ++i) {
    const double v = x[i];
    trip.emplace_back(i, i, (-3.0 * v * v + 2.2 * v - 0.1) / eps);
  }
  SparseMatrix J(2 * m_, 2 * m_);
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

}  // namespace decrom
