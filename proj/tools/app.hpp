#pragma once

#include <decrom/config.hpp>
#include <decrom/defect.hpp>
#include <decrom/greedy.hpp>
#include <decrom/models.hpp>
#include <decrom/sampling.hpp>

#include <filesystem>
#include <memory>
#include <optional>

namespace decrom::app {

/// Model, time grid and seeded parameter split built from a config.
struct Problem {
  std::unique_ptr<ParametricSystem> sys;
  TimeGrid grid;
  SampleSplit split;
  std::vector<Index> defect_indices;
};

Problem make_problem(const ExperimentConfig& cfg);

/// Defect slices at the Xi_defect parameters of the training set.
DefectTensor build_defect_tensor(const ExperimentConfig& cfg, const Problem& problem);

/// Closure-free estimation of a POD ROM of the heat model against blackbox snapshots.
struct HeatDemo {
  Vector t;
  Vector true_state;
  Vector state_estimate;   // Delta^k with the imposed order-1 residual
  Vector true_output;
  Vector output_estimate;  // ||C|| Delta^k
  Vector dual_estimate;    // ||x_du|| ||r^k||
  double overestimated_fraction = 0.0;  // share of k >= 1 with output_estimate >= 100 true_output
};

HeatDemo run_heat_demo(const ExperimentConfig& cfg);

GreedyResult run_greedy(const ExperimentConfig& cfg, const Problem& problem,
                        const IterationCallback& on_iteration = {});

/// Estimates over the test set for a finished greedy run.
struct TestSweep {
  std::vector<Parameter> params;
  std::vector<Vector> per_step;  // one N_t sequence per test parameter
  Vector mean_estimate;
  Vector mean_true;  // NaN unless requested
};

TestSweep sweep_test_set(const ExperimentConfig& cfg, const Problem& problem, const GreedyResult& result,
                         bool with_truth);

/// Reloads V, DEIM basis, closure and rho_bar saved by GreedyResult::save.
GreedyResult load_greedy_result(const std::filesystem::path& dir, const ParameterDomain& domain);

/// Subcommands. Each writes its artifacts into dir.
void simulate_fom(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                  const std::optional<Parameter>& p);
void closure_train(const ExperimentConfig& cfg, const std::filesystem::path& dir);
void greedy(const ExperimentConfig& cfg, const std::filesystem::path& dir);
void estimate(const ExperimentConfig& cfg, const std::filesystem::path& dir,
              const std::optional<std::filesystem::path>& from, bool with_truth);
void demo_heat(const ExperimentConfig& cfg, const std::filesystem::path& dir);
void svd_report(const ExperimentConfig& cfg, const std::filesystem::path& dir);

}  // namespace decrom::app
