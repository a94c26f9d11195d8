#pragma once

#include "decrom/imex.hpp"
#include "decrom/models.hpp"
#include "decrom/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace decrom {

/// Column k = E_k x^k - g^k(x^{k-1}, x^{k-2}) for k >= 1, column 0 = 0, where
/// E_k x^k = g^k is step k of the imposed scheme.
Matrix compute_defect_trajectory(const Trajectory& traj, const ImexOperators& ops);
Matrix compute_defect_trajectory(const Trajectory& traj, const ParametricSystem& sys,
                                 ImexScheme scheme, const Parameter& p);

/// Residual of the imposed scheme at the given states:
/// r^k = g^k(x^{k-1}, x^{k-2}) + d^k - E_k x^k (d omitted when closure is null).
Matrix scheme_residual(const Matrix& states, const ImexOperators& ops, const TimeGrid& grid,
                       const Matrix* closure = nullptr);

struct DefectTensor {
  std::vector<Matrix> slices;  // one N x N_t matrix per parameter
  std::vector<Parameter> params;
  TimeGrid grid;
  ImexScheme scheme;

  Index dim() const { return slices.empty() ? 0 : slices.front().rows(); }
  Index size() const { return static_cast<Index>(slices.size()); }
  void validate() const;
};

/// Manifest (manifest.json) plus one binary matrix per slice.
void save_defect_tensor(const std::filesystem::path& dir, const DefectTensor& tensor);
DefectTensor load_defect_tensor(const std::filesystem::path& dir);

/// energy: discarded squared-singular-value fraction <= tol.
/// relative: keep sigma_i > tol * sigma_1.
enum class TruncationRule { energy, relative };

std::string to_string(TruncationRule rule);
TruncationRule truncation_rule_from_string(const std::string& text);
Index truncation_rank(const Vector& s, double tol, TruncationRule rule);

struct TwoStageSvd {
  Matrix Vd;                          // N x n_d
  std::vector<Matrix> reduced;        // per slice, n_d x N_t
  std::vector<Vector> slice_singular_values;
  std::vector<Index> slice_ranks;
  Vector stacked_singular_values;     // singular values of R
};

TwoStageSvd two_stage_svd(const DefectTensor& tensor, double tol_t, double tol_p,
                          TruncationRule rule = TruncationRule::energy);

}  // namespace decrom
