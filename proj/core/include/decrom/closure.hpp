#pragma once

#include "decrom/defect.hpp"
#include "decrom/fnn.hpp"
#include "decrom/models.hpp"
#include "decrom/rbf.hpp"
#include "decrom/types.hpp"

#include <filesystem>
#include <map>
#include <variant>

namespace decrom {

enum class SurrogateKind { rbf, fnn };

SurrogateKind surrogate_from_string(const std::string& s);
std::string to_string(SurrogateKind k);

/// Defect approximation d(t^k, p) ~ V_d dhat(t^k, p) with exact per-parameter overrides.
class ClosureModel {
 public:
  ClosureModel() = default;
  ClosureModel(Matrix Vd, RbfInterpolant rbf, TimeGrid grid, ImexScheme scheme);
  ClosureModel(Matrix Vd, FnnModel fnn, TimeGrid grid, ImexScheme scheme);

  const Matrix& Vd() const { return Vd_; }
  Index dim() const { return Vd_.rows(); }
  Index reduced_dim() const { return Vd_.cols(); }
  const TimeGrid& grid() const { return grid_; }
  const ImexScheme& scheme() const { return scheme_; }
  SurrogateKind kind() const;
  const RbfInterpolant* rbf() const { return std::get_if<RbfInterpolant>(&surrogate_); }
  const FnnModel* fnn() const { return std::get_if<FnnModel>(&surrogate_); }

  /// Surrogate coefficients, n_d x N_t (column 0 is zero).
  Matrix coefficients(const Parameter& p) const;
  Vector coefficients(Index k, const Parameter& p) const;

  /// Full defect at step k: the override column when present, else V_d dhat.
  Vector eval(Index k, const Parameter& p) const;
  /// Full defect for all steps, N x N_t.
  Matrix eval_all(const Parameter& p) const;
  /// V^T d for all steps, n x N_t. VtVd must equal V^T V_d.
  Matrix project_all(const Matrix& V, const Matrix& VtVd, const Parameter& p) const;

  void update(const Parameter& p, const Matrix& exact);
  bool has_override(const Parameter& p) const;
  const Matrix* override_for(const Parameter& p) const;
  std::size_t num_overrides() const { return overrides_.size(); }

  void save(const std::filesystem::path& dir) const;
  static ClosureModel load(const std::filesystem::path& dir, const ParameterDomain& domain);

 private:
  Matrix Vd_;
  std::variant<std::monostate, RbfInterpolant, FnnModel> surrogate_;
  std::map<ParameterKey, Matrix> overrides_;
  TimeGrid grid_;
  ImexScheme scheme_;
};

struct ClosureTrainOptions {
  double tol_t = 1e-4;
  double tol_p = 1e-4;
  TruncationRule truncation = TruncationRule::energy;
  SurrogateKind surrogate = SurrogateKind::rbf;
  FnnHyper fnn;
};

struct ClosureTrainReport {
  TwoStageSvd svd;
  double fit_seconds = 0.0;
  std::vector<double> fnn_loss;
};

/// Two-stage SVD of the tensor followed by the surrogate fit.
ClosureModel train_closure(const DefectTensor& tensor, const ParameterDomain& domain,
                           const ClosureTrainOptions& options, ClosureTrainReport* report = nullptr);

}  // namespace decrom
