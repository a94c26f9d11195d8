#pragma once

#include "decrom/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace decrom {

enum class AxisScale { linear, log };

struct ParameterAxis {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  AxisScale scale = AxisScale::linear;
};

class ParameterDomain {
 public:
  ParameterDomain() = default;
  explicit ParameterDomain(std::vector<ParameterAxis> axes);

  Index dim() const { return static_cast<Index>(axes_.size()); }
  const std::vector<ParameterAxis>& axes() const { return axes_; }

  bool contains(const Parameter& p) const;
  /// Throws DomainError when p lies outside the box.
  void check(const Parameter& p) const;

  /// Maps p to [0,1]^d, with a log pre-map on log-tagged axes.
  Vector normalize(const Parameter& p) const;
  Parameter denormalize(const Vector& u) const;

 private:
  std::vector<ParameterAxis> axes_;
};

/// Semilinear system dx/dt = A(p)x + f(x,p) + B(p)u(t), y = Cx.
///
/// Instances describe a whole parametric family; every p-dependent accessor
/// validates p against domain().
class ParametricSystem {
 public:
  virtual ~ParametricSystem() = default;

  virtual std::string id() const = 0;
  virtual Index dim() const = 0;
  virtual Index num_inputs() const = 0;
  virtual Index num_outputs() const = 0;

  virtual SparseMatrix A(const Parameter& p) const = 0;
  virtual Matrix B(const Parameter& p) const = 0;
  virtual const Matrix& C() const = 0;
  virtual Vector x0(const Parameter& p) const = 0;
  virtual Vector input(double t) const = 0;

  virtual bool is_linear() const = 0;
  virtual void nonlinearity(const Vector& x, const Parameter& p, Vector& out) const = 0;
  /// Evaluates f at the given rows only. x must be valid on stencil(rows).
  virtual void nonlinearity_rows(const Vector& x, const Parameter& p,
                                 const std::vector<Index>& rows, Vector& out) const = 0;
  /// State entries that row i of f depends on.
  virtual std::vector<Index> stencil(Index row) const = 0;
  virtual SparseMatrix nonlinearity_jacobian(const Vector& x, const Parameter& p) const = 0;

  const ParameterDomain& domain() const { return domain_; }

  Vector nonlinearity(const Vector& x, const Parameter& p) const;
  Vector evaluate_rhs(const Vector& x, double t, const Parameter& p) const;

 protected:
  ParameterDomain domain_;
};

enum class ConvectionStencil { central, upwind };

struct ModelOptions {
  std::string id = "heat";
  Index n_cells = 256;
  ConvectionStencil convection = ConvectionStencil::central;
};

/// Builds one of the benchmark families: heat, burgers or fhn.
std::unique_ptr<ParametricSystem> assemble(const ModelOptions& options);
std::unique_ptr<ParametricSystem> assemble(const std::string& model_id, Index n_cells);

/// 1D heat on [0,1] with homogeneous Dirichlet ends; p = (mu).
class HeatModel final : public ParametricSystem {
 public:
  explicit HeatModel(Index n_cells);

  std::string id() const override { return "heat"; }
  Index dim() const override { return n_; }
  Index num_inputs() const override { return 1; }
  Index num_outputs() const override { return 1; }

  SparseMatrix A(const Parameter& p) const override;
  Matrix B(const Parameter& p) const override;
  const Matrix& C() const override { return C_; }
  Vector x0(const Parameter& p) const override;
  Vector input(double t) const override;

  bool is_linear() const override { return true; }
  using ParametricSystem::nonlinearity;
  void nonlinearity(const Vector& x, const Parameter& p, Vector& out) const override;
  void nonlinearity_rows(const Vector& x, const Parameter& p, const std::vector<Index>& rows,
                         Vector& out) const override;
  std::vector<Index> stencil(Index row) const override;
  SparseMatrix nonlinearity_jacobian(const Vector& x, const Parameter& p) const override;

  double h() const { return h_; }

 private:
  Index n_;
  double h_;
  SparseMatrix laplacian_;
  Matrix C_;
};

/// Viscous Burgers on [0,1], homogeneous Dirichlet ends, dz = 1/(N+1); p = (mu).
class BurgersModel final : public ParametricSystem {
 public:
  BurgersModel(Index n_cells, ConvectionStencil convection);

  std::string id() const override { return "burgers"; }
  Index dim() const override { return n_; }
  Index num_inputs() const override { return 1; }
  Index num_outputs() const override { return 1; }

  SparseMatrix A(const Parameter& p) const override;
  Matrix B(const Parameter& p) const override;
  const Matrix& C() const override { return C_; }
  Vector x0(const Parameter& p) const override;
  Vector input(double t) const override;

  bool is_linear() const override { return false; }
  using ParametricSystem::nonlinearity;
  void nonlinearity(const Vector& x, const Parameter& p, Vector& out) const override;
  void nonlinearity_rows(const Vector& x, const Parameter& p, const std::vector<Index>& rows,
                         Vector& out) const override;
  std::vector<Index> stencil(Index row) const override;
  SparseMatrix nonlinearity_jacobian(const Vector& x, const Parameter& p) const override;

  double dz() const { return dz_; }

 private:
  double row_value(const Vector& x, Index i) const;

  Index n_;
  double dz_;
  ConvectionStencil convection_;
  SparseMatrix laplacian_;
  Matrix C_;
};

/// FitzHugh-Nagumo on [0,1] with Neumann ends, state (v1, v2) stacked;
/// p = (eps, c), b = 0.5 and gamma = 2 fixed. Inputs u = (I_ext(t), 1).
class FhnModel final : public ParametricSystem {
 public:
  explicit FhnModel(Index n_nodes);

  std::string id() const override { return "fhn"; }
  Index dim() const override { return 2 * m_; }
  Index num_inputs() const override { return 2; }
  Index num_outputs() const override { return 2; }

  SparseMatrix A(const Parameter& p) const override;
  Matrix B(const Parameter& p) const override;
  const Matrix& C() const override { return C_; }
  Vector x0(const Parameter& p) const override;
  Vector input(double t) const override;

  bool is_linear() const override { return false; }
  using ParametricSystem::nonlinearity;
  void nonlinearity(const Vector& x, const Parameter& p, Vector& out) const override;
  void nonlinearity_rows(const Vector& x, const Parameter& p, const std::vector<Index>& rows,
                         Vector& out) const override;
  std::vector<Index> stencil(Index row) const override;
  SparseMatrix nonlinearity_jacobian(const Vector& x, const Parameter& p) const override;

  Index nodes() const { return m_; }
  double h() const { return h_; }

  static constexpr double b = 0.5;
  static constexpr double gamma = 2.0;
  static double stimulus(double t);

 private:
  Index m_;
  double h_;
  SparseMatrix laplacian_;
  Matrix C_;
};

}  // namespace decrom
