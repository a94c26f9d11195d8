#include "app.hpp"

#include <decrom/defect.hpp>
#include <decrom/estimator.hpp>
#include <decrom/io.hpp>
#include <decrom/linalg.hpp>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <limits>

namespace decrom::app {

namespace {

std::vector<std::string> parameter_columns(const ParameterDomain& domain) {
  std::vector<std::string> cols;
  for (const auto& ax : domain.axes()) cols.push_back(ax.name);
  return cols;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write " + path.string());
}

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector column_norms(const Matrix& M) {
  Vector n(M.cols());
  for (Index j = 0; j < M.cols(); ++j) n[j] = M.col(j).norm();
  return n;
}

void write_singular_values(const std::filesystem::path& dir, const TwoStageSvd& svd, const std::string& hash) {
  {
    CsvWriter csv(dir / "slice_singular_values.csv", {"slice", "index", "sigma", "sigma_normalized", "retained"},
                  hash);
    for (std::size_t s = 0; s < svd.slice_singular_values.size(); ++s) {
      const Vector& sv = svd.slice_singular_values[s];
      const double s0 = sv.size() && sv[0] > 0.0 ? sv[0] : 1.0;
      for (Index i = 0; i < sv.size(); ++i) {
        csv << static_cast<Index>(s) << i << sv[i] << sv[i] / s0
            << static_cast<Index>(i < svd.slice_ranks[s] ? 1 : 0);
        csv.end_row();
      }
    }
  }
  CsvWriter csv(dir / "stacked_singular_values.csv", {"index", "sigma", "sigma_normalized", "retained"}, hash);
  const Vector& sv = svd.stacked_singular_values;
  const double s0 = sv.size() && sv[0] > 0.0 ? sv[0] : 1.0;
  for (Index i = 0; i < sv.size(); ++i) {
    csv << i << sv[i] << sv[i] / s0 << static_cast<Index>(i < svd.Vd.cols() ? 1 : 0);
    csv.end_row();
  }
}

}  // namespace

DefectTensor build_defect_tensor(const ExperimentConfig& cfg, const Problem& pb) {
  DefectTensor tensor;
  tensor.grid = pb.grid;
  tensor.scheme = cfg.greedy.scheme;
  for (Index i : pb.defect_indices) {
    const Parameter& p = pb.split.train[static_cast<std::size_t>(i)];
    const Trajectory traj = fom_snapshots(*pb.sys, p, pb.grid, cfg.greedy);
    tensor.slices.push_back(compute_defect_trajectory(traj, *pb.sys, cfg.greedy.scheme, p));
    tensor.params.push_back(p);
  }
  return tensor;
}

Problem make_problem(const ExperimentConfig& cfg) {
  cfg.validate();
  Problem pb;
  pb.sys = assemble(cfg.model);
  pb.grid = cfg.grid();
  pb.split = split_samples(cfg.samples_for(pb.sys->domain()), cfg.train_fraction, cfg.seed);
  if (pb.split.train.empty()) throw ConfigError("training set is empty after the split");
  pb.defect_indices = select_defect_indices(pb.split.train, pb.sys->domain(),
                                            std::min<Index>(cfg.d_s, static_cast<Index>(pb.split.train.size())));
  return pb;
}

HeatDemo run_heat_demo(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto sys = assemble(cfg.model);
  const TimeGrid grid = cfg.grid();
  const Parameter& p = cfg.demo_parameter;
  sys->domain().check(p);
  const Trajectory fom = solve_blackbox(*sys, grid, cfg.greedy.solver, p);
  const ThinSvd svd = left_svd(fom.states);
  const Index n = std::min<Index>(cfg.demo_basis, svd.U.cols());
  const Matrix V = svd.U.leftCols(n);
  const Rom rom(*sys, V, p, grid.dt, ImexScheme::imex1());
  const RomSolution sol = solve_rom_blackbox(rom, grid, cfg.greedy.solver);
  const Matrix xtilde = V * sol.xhat;

  const ImexOperators ops(*sys, p, grid.dt, ImexScheme::imex1());
  const Matrix r = scheme_residual(xtilde, ops, grid);
  const Vector rn = column_norms(r);
  const OperatorNorms norms = estimate_operator_norms(ops);
  const double L_f = sys->is_linear() ? 0.0 : lipschitz_estimate(*sys, p, fom.states);
  const Vector x0 = sys->x0(p);
  const double e0 = (x0 - V * (V.transpose() * x0)).norm();
  const DualSolution dual = solve_dual(ops, sys->C());
  Eigen::JacobiSVD<Matrix> csvd(sys->C());
  const double C_norm = csvd.singularValues()(0);

  HeatDemo d;
  d.t.resize(grid.size());
  for (Index k = 0; k < grid.size(); ++k) d.t[k] = grid.t(k);
  d.true_state = column_norms(fom.states - xtilde);
  d.state_estimate = state_error_bound(rn, state_bound_constants(norms, grid.dt, L_f), e0);
  d.true_output = column_norms(sys->C() * fom.states - sol.outputs);
  d.output_estimate = C_norm * d.state_estimate;
  d.dual_estimate = dual.x_du_norm * rn;
  Index over = 0;
  for (Index k = 1; k < grid.size(); ++k) {
    if (d.output_estimate[k] >= 100.0 * d.true_output[k]) ++over;
  }
  d.overestimated_fraction = static_cast<double>(over) / static_cast<double>(grid.K);
  return d;
}

GreedyResult run_greedy(const ExperimentConfig& cfg, const Problem& pb, const IterationCallback& on_iteration) {
  if (cfg.algorithm == 1) return pod_greedy_standard(*pb.sys, pb.split.train, pb.grid, cfg.greedy, on_iteration);
  return pod_greedy_ode(*pb.sys, pb.split.train, pb.defect_indices, pb.grid, cfg.greedy, on_iteration);
}

TestSweep sweep_test_set(const ExperimentConfig& cfg, const Problem& pb, const GreedyResult& result,
                         bool with_truth) {
  TestSweep s;
  s.params = pb.split.test;
  const auto nt = static_cast<Index>(s.params.size());
  s.mean_estimate.resize(nt);
  s.mean_true = Vector::Constant(nt, std::numeric_limits<double>::quiet_NaN());
  ParameterCache cache(*pb.sys, pb.grid.dt, cfg.greedy.scheme);
  const DeimModel* deim = result.deim && result.deim->size() > 0 ? &*result.deim : nullptr;
  const ClosureModel* closure = result.closure ? &*result.closure : nullptr;
  Matrix VtVd;
  if (closure) VtVd = result.V.transpose() * closure->Vd();
  for (Index i = 0; i < nt; ++i) {
    const Parameter& p = s.params[static_cast<std::size_t>(i)];
    if (result.algorithm == 2) {
      if (!closure) throw ConfigError("greedy result has no closure model");
      s.per_step.push_back(evaluate_crom(*pb.sys, cache, p, result.V, deim, closure, &VtVd, pb.grid,
                                         result.rho_bar, cfg.greedy)
                               .estimate.per_step);
    } else {
      s.per_step.push_back(standard_estimate(*pb.sys, cache, p, result.V, deim, pb.grid, result.rho_bar, cfg.greedy));
    }
    s.mean_estimate[i] = time_mean(s.per_step.back());
    if (with_truth) {
      const Trajectory fom = solve_blackbox(*pb.sys, pb.grid, cfg.greedy.solver, p);
      const Rom rom(*pb.sys, result.V, p, pb.grid.dt, cfg.greedy.scheme, deim);
      const RomSolution sol = solve_rom_blackbox(rom, pb.grid, cfg.greedy.solver);
      s.mean_true[i] = time_mean(column_norms(pb.sys->C() * fom.states - sol.outputs));
    }
  }
  return s;
}

GreedyResult load_greedy_result(const std::filesystem::path& dir, const ParameterDomain& domain) {
  std::ifstream in(dir / "result.json");
  if (!in) throw IoError("missing result.json in " + dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed result.json: ") + e.what());
  }
  GreedyResult r;
  r.algorithm = j.at("algorithm").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.rho_bar = j.at("rho_bar").get<double>();
  r.V = read_matrix(dir / "V.bin");
  if (std::filesystem::exists(dir / "deim_U.bin")) r.deim = DeimModel(read_matrix(dir / "deim_U.bin"));
  if (std::filesystem::exists(dir / "closure")) r.closure = ClosureModel::load(dir / "closure", domain);
  return r;
}

void simulate_fom(const ExperimentConfig& cfg, const std::filesystem::path& dir, const std::optional<Parameter>& p_opt) {
  cfg.validate();
  const auto sys = assemble(cfg.model);
  const TimeGrid grid = cfg.grid();
  const Parameter p = p_opt ? *p_opt : cfg.demo_parameter;
  SolveStats stats;
  const Trajectory traj = solve_blackbox(*sys, grid, cfg.greedy.solver, p, &stats);
  write_matrix(dir / "states.bin", traj.states);
  const Matrix Y = sys->C() * traj.states;
  std::vector<std::string> cols{"k", "t"};
  for (Index o = 0; o < Y.rows(); ++o) cols.push_back("y" + std::to_string(o));
  CsvWriter csv(dir / "outputs.csv", cols, cfg.hash());
  for (Index k = 0; k < grid.size(); ++k) {
    csv << k << grid.t(k);
    for (Index o = 0; o < Y.rows(); ++o) csv << Y(o, k);
    csv.end_row();
  }
  write_json(dir / "simulation.json", {{"model", cfg.model.id},
                                       {"parameter", to_std(p)},
                                       {"dim", sys->dim()},
                                       {"steps", grid.K},
                                       {"accepted", stats.accepted},
                                       {"rejected", stats.rejected},
                                       {"rhs_evals", stats.rhs_evals},
                                       {"config_hash", cfg.hash()}});
}

void closure_train(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  const Problem pb = make_problem(cfg);
  const DefectTensor tensor = build_defect_tensor(cfg, pb);
  save_defect_tensor(dir / "defect", tensor);
  ClosureTrainReport report;
  const ClosureModel model = train_closure(tensor, pb.sys->domain(), cfg.greedy.closure, &report);
  model.save(dir / "closure");
  write_singular_values(dir, report.svd, cfg.hash());
  if (!report.fnn_loss.empty()) {
    CsvWriter csv(dir / "fnn_loss.csv", {"epoch", "loss"}, cfg.hash());
    for (std::size_t e = 0; e < report.fnn_loss.size(); ++e) {
      csv << static_cast<Index>(e) << report.fnn_loss[e];
      csv.end_row();
    }
  }
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : tensor.params) params.push_back(to_std(p));
  write_json(dir / "closure_report.json", {{"n_d", model.reduced_dim()},
                                           {"d_s", tensor.size()},
                                           {"surrogate", to_string(model.kind())},
                                           {"slice_ranks", report.svd.slice_ranks},
                                           {"defect_parameters", params},
                                           {"fit_seconds", report.fit_seconds},
                                           {"config_hash", cfg.hash()}});
}

void greedy(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  const Problem pb = make_problem(cfg);
  const GreedyResult result = run_greedy(cfg, pb);
  result.save(dir);
  auto cols = parameter_columns(pb.sys->domain());
  cols.insert(cols.begin(), "iteration");
  for (const char* c : {"epsilon", "n", "n_deim", "rho_bar"}) cols.emplace_back(c);
  CsvWriter csv(dir / "convergence.csv", cols, cfg.hash());
  for (const auto& h : result.history) {
    csv << h.iteration;
    for (Index i = 0; i < h.p_star.size(); ++i) csv << h.p_star[i];
    csv << h.epsilon << h.n << h.n_deim << h.rho_bar;
    csv.end_row();
  }
  auto tcols = parameter_columns(pb.sys->domain());
  tcols.emplace_back("mean_estimate");
  CsvWriter train_csv(dir / "train_estimates.csv", tcols, cfg.hash());
  for (std::size_t i = 0; i < pb.split.train.size(); ++i) {
    const Parameter& p = pb.split.train[i];
    for (Index a = 0; a < p.size(); ++a) train_csv << p[a];
    train_csv << result.final_estimates[static_cast<Index>(i)];
    train_csv.end_row();
  }
}

void estimate(const ExperimentConfig& cfg, const std::filesystem::path& dir,
              const std::optional<std::filesystem::path>& from, bool with_truth) {
  const Problem pb = make_problem(cfg);
  GreedyResult result;
  if (from) {
    result = load_greedy_result(*from, pb.sys->domain());
  } else {
    result = run_greedy(cfg, pb);
    result.save(dir / "greedy");
  }
  const TestSweep sweep = sweep_test_set(cfg, pb, result, with_truth);
  const std::string variant = result.algorithm == 2 ? to_string(cfg.greedy.variant) : to_string(cfg.greedy.standard_estimator);
  auto cols = parameter_columns(pb.sys->domain());
  for (const char* c : {"k", "t", "delta_bar", "variant"}) cols.emplace_back(c);
  CsvWriter csv(dir / "test_estimates.csv", cols, cfg.hash());
  for (std::size_t i = 0; i < sweep.params.size(); ++i) {
    const Parameter& p = sweep.params[i];
    for (Index k = 0; k < pb.grid.size(); ++k) {
      for (Index a = 0; a < p.size(); ++a) csv << p[a];
      csv << k << pb.grid.t(k) << sweep.per_step[i][k] << variant;
      csv.end_row();
    }
  }
  auto mcols = parameter_columns(pb.sys->domain());
  mcols.emplace_back("mean_estimate");
  if (with_truth) mcols.emplace_back("mean_true_error");
  CsvWriter means(dir / "test_estimate_means.csv", mcols, cfg.hash());
  for (std::size_t i = 0; i < sweep.params.size(); ++i) {
    const Parameter& p = sweep.params[i];
    for (Index a = 0; a < p.size(); ++a) means << p[a];
    means << sweep.mean_estimate[static_cast<Index>(i)];
    if (with_truth) means << sweep.mean_true[static_cast<Index>(i)];
    means.end_row();
  }
}

void demo_heat(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  if (cfg.model.id != "heat") throw ConfigError("demo-heat needs [model] id = heat");
  const HeatDemo d = run_heat_demo(cfg);
  CsvWriter csv(dir / "heat_demo.csv",
                {"k", "t", "true_state_error", "state_estimate", "true_output_error", "output_estimate",
                 "dual_estimate", "output_ratio"},
                cfg.hash());
  for (Index k = 0; k < d.t.size(); ++k) {
    const double ratio = d.true_output[k] > 0.0 ? d.output_estimate[k] / d.true_output[k]
                                                : std::numeric_limits<double>::quiet_NaN();
    csv << k << d.t[k] << d.true_state[k] << d.state_estimate[k] << d.true_output[k] << d.output_estimate[k]
        << d.dual_estimate[k] << ratio;
    csv.end_row();
  }
  write_json(dir / "heat_demo.json",
             {{"overestimated_fraction", d.overestimated_fraction}, {"config_hash", cfg.hash()}});
}

void svd_report(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  const Problem pb = make_problem(cfg);
  {
    const Trajectory traj = solve_blackbox(*pb.sys, pb.grid, cfg.greedy.solver, cfg.demo_parameter);
    const ThinSvd svd = left_svd(traj.states);
    CsvWriter csv(dir / "snapshot_singular_values.csv", {"index", "sigma", "sigma_normalized"}, cfg.hash());
    const double s0 = svd.s.size() && svd.s[0] > 0.0 ? svd.s[0] : 1.0;
    for (Index i = 0; i < svd.s.size(); ++i) {
      csv << i << svd.s[i] << svd.s[i] / s0;
      csv.end_row();
    }
  }
  const DefectTensor tensor = build_defect_tensor(cfg, pb);
  const TwoStageSvd svd = two_stage_svd(tensor, cfg.greedy.closure.tol_t, cfg.greedy.closure.tol_p,
                                        cfg.greedy.closure.truncation);
  write_singular_values(dir, svd, cfg.hash());
  write_json(dir / "svd_report.json",
             {{"n_d", svd.Vd.cols()}, {"slice_ranks", svd.slice_ranks}, {"config_hash", cfg.hash()}});
}

}  // namespace decrom::app
