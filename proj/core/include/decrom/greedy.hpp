#pragma once

#include "decrom/blackbox.hpp"
#include "decrom/closure.hpp"
#include "decrom/deim.hpp"
#include "decrom/estimator.hpp"
#include "decrom/imex.hpp"
#include "decrom/models.hpp"
#include "decrom/rom.hpp"
#include "decrom/types.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace decrom {

/// Where snapshots and ROM solutions in the standard greedy come from.
enum class SnapshotSource { blackbox, imposed };
std::string to_string(SnapshotSource s);
SnapshotSource snapshot_source_from_string(const std::string& s);

/// Error indicator driving the standard greedy.
///  dual_residual: ||x_du|| ||r^k|| with the closure-free imposed residual.
///  state_bound:   ||C|| Delta^k from the state bound.
///  calibrated:    Delta_b^k with rho_bar measured at p* and no closure.
enum class StandardEstimator { dual_residual, state_bound, calibrated };
std::string to_string(StandardEstimator e);
StandardEstimator standard_estimator_from_string(const std::string& s);

struct GreedyOptions {
  double tol = 1e-4;
  Index r_c = 1;
  Index max_iterations = 30;
  ImexScheme scheme = ImexScheme::imex1();
  SolverConfig solver;
  bool use_deim = true;
  Index deim_per_iteration = 0;  // 0: same as r_c
  bool drop_hyperreduction_error = false;
  EstimatorVariant variant = EstimatorVariant::b;
  bool reduced_dual = false;

  SnapshotSource snapshots = SnapshotSource::blackbox;
  StandardEstimator standard_estimator = StandardEstimator::dual_residual;

  ClosureTrainOptions closure;
  bool update_defect = false;

  void validate() const;
};

struct GreedyIteration {
  Index iteration = 0;
  Index selected_index = -1;  // index into the training set of the snapshot parameter
  Parameter p_star;
  double epsilon = 0.0;
  Index n = 0;
  Index n_deim = 0;
  double rho_bar = 1.0;
  double seconds = 0.0;
};

struct GreedyResult {
  int algorithm = 2;
  Matrix V;
  std::vector<Index> basis_history;
  std::vector<GreedyIteration> history;
  bool converged = false;
  Vector final_estimates;  // mean estimate per training parameter from the last sweep
  double rho_bar = 1.0;
  std::optional<DeimModel> deim;
  std::optional<ClosureModel> closure;
  std::optional<ClosureTrainReport> closure_report;
  std::vector<Index> defect_indices;
  double pretrain_seconds = 0.0;
  double total_seconds = 0.0;

  /// result.json, V.bin, optional deim_U.bin and closure/.
  void save(const std::filesystem::path& dir) const;
};

/// Per-parameter imposed-scheme operators, dual solution and operator norms, computed once.
class ParameterCache {
 public:
  ParameterCache(const ParametricSystem& sys, double dt, ImexScheme scheme);

  struct Entry {
    std::unique_ptr<ImexOperators> ops;
    DualSolution dual;
    OperatorNorms norms;
  };

  /// V_du is used for the dual solve when non-null; entries are then refreshed on each call.
  const Entry& get(const Parameter& p, const Matrix* V_du = nullptr);
  void clear() { entries_.clear(); }

 private:
  const ParametricSystem& sys_;
  double dt_;
  ImexScheme scheme_;
  std::map<ParameterKey, Entry> entries_;
};

struct CromEvaluation {
  Matrix xhat;             // n x N_t
  Matrix outputs;          // N_O x N_t, C-ROM outputs
  CorrectedResidual residual;
  ErrorEstimate estimate;
};

/// Solves the corrected ROM at p and evaluates the output error estimate.
/// closure may be null (uncorrected ROM). VtVd caches V^T V_d.
CromEvaluation evaluate_crom(const ParametricSystem& sys, ParameterCache& cache, const Parameter& p,
                             const Matrix& V, const DeimModel* deim, const ClosureModel* closure,
                             const Matrix* VtVd, const TimeGrid& grid, double rho_bar,
                             const GreedyOptions& options, const Matrix* V_du = nullptr);

/// rho_bar at p from FOM snapshots and the C-ROM evaluation at p.
RhoBar calibrate_rho(const ParameterCache::Entry& entry, const Matrix& fom_states, const Matrix& V,
                     const CromEvaluation& eval, const Matrix* closure_full, const TimeGrid& grid,
                     bool drop_hyperreduction_error);

/// Per-step indicator of the standard greedy at p (closure-free residual of the ROM
/// solved with the snapshot source). rho_bar only enters the calibrated form.
Vector standard_estimate(const ParametricSystem& sys, ParameterCache& cache, const Parameter& p,
                         const Matrix& V, const DeimModel* deim, const TimeGrid& grid, double rho_bar,
                         const GreedyOptions& options);

using IterationCallback = std::function<void(const GreedyIteration&)>;

/// Standard POD-Greedy with blackbox (or imposed-scheme) snapshots and a closure-free estimator.
GreedyResult pod_greedy_standard(const ParametricSystem& sys, const std::vector<Parameter>& train,
                                 const TimeGrid& grid, const GreedyOptions& options,
                                 const IterationCallback& on_iteration = {});

/// POD-Greedy with the learned defect closure and the data-enhanced estimator.
/// defect_indices select the defect training parameters from train.
GreedyResult pod_greedy_ode(const ParametricSystem& sys, const std::vector<Parameter>& train,
                            const std::vector<Index>& defect_indices, const TimeGrid& grid,
                            const GreedyOptions& options, const IterationCallback& on_iteration = {});

/// Snapshot trajectory from the configured source.
Trajectory fom_snapshots(const ParametricSystem& sys, const Parameter& p, const TimeGrid& grid,
                         const GreedyOptions& options);

}  // namespace decrom
