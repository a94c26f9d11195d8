#include "decrom/greedy.hpp"

#include "decrom/defect.hpp"
#include "decrom/io.hpp"
#include "decrom/linalg.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <limits>
#include <fstream>

namespace decrom {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Index argmax_unselected(const Vector& values, const std::vector<bool>& selected) {
  Index arg = -1;
  double best = -1.0;
  for (Index i = 0; i < values.size(); ++i) {
    if (selected[static_cast<std::size_t>(i)]) continue;
    if (values[i] > best) {
      best = values[i];
      arg = i;
    }
  }
  return arg;
}

constexpr double kDiverged = std::numeric_limits<double>::infinity();

void log_divergence(const Parameter& p, const Error& e) {
  spdlog::warn("ROM diverged at p = {}: {}; estimate set to inf", format_parameter(p), e.what());
}

Matrix nonlinear_snapshots(const ParametricSystem& sys, const Parameter& p, const Matrix& X) {
  Matrix F(X.rows(), X.cols());
  Vector f(X.rows());
  for (Index k = 0; k < X.cols(); ++k) {
    sys.nonlinearity(X.col(k), p, f);
    F.col(k) = f;
  }
  return F;
}

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M * M.transpose());
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

Vector column_norms(const Matrix& M) {
  Vector n(M.cols());
  for (Index j = 0; j < M.cols(); ++j) n[j] = M.col(j).norm();
  return n;
}

void log_iteration(int alg, const GreedyIteration& it) {
  spdlog::info("alg {} iteration {}: p* = {}, n = {}, m = {}, rho_bar = {:.4g}, eps = {:.4e} ({:.1f} s)", alg,
               it.iteration, format_parameter(it.p_star), it.n, it.n_deim, it.rho_bar, it.epsilon, it.seconds);
}

class Enrichment {
 public:
  Enrichment(const ParametricSystem& sys, const GreedyOptions& options)
      : sys_(sys), options_(options), basis_(sys.dim()) {
    if (!sys.is_linear() && options.use_deim) deim_.emplace(Matrix(sys.dim(), 0));
  }

  void add(const Parameter& p, const Matrix& X) {
    basis_.pod_update(X, options_.r_c);
    if (deim_) {
      const Index m = options_.deim_per_iteration > 0 ? options_.deim_per_iteration : options_.r_c;
      deim_->extend(nonlinear_snapshots(sys_, p, X), m);
    }
  }

  const Matrix& V() const { return basis_.V(); }
  const ReducedBasis& basis() const { return basis_; }
  const DeimModel* deim() const { return deim_ && deim_->size() > 0 ? &*deim_ : nullptr; }
  Index deim_size() const { return deim_ ? deim_->size() : 0; }
  const std::optional<DeimModel>& deim_model() const { return deim_; }

 private:
  const ParametricSystem& sys_;
  const GreedyOptions& options_;
  ReducedBasis basis_;
  std::optional<DeimModel> deim_;
};

}  // namespace

std::string to_string(SnapshotSource s) { return s == SnapshotSource::blackbox ? "blackbox" : "imposed"; }

SnapshotSource snapshot_source_from_string(const std::string& s) {
  if (s == "blackbox") return SnapshotSource::blackbox;
  if (s == "imposed") return SnapshotSource::imposed;
  throw ConfigError("unknown snapshot source '" + s + "'");
}

std::string to_string(StandardEstimator e) {
  switch (e) {
    case StandardEstimator::dual_residual: return "dual_residual";
    case StandardEstimator::state_bound: return "state_bound";
    case StandardEstimator::calibrated: return "calibrated";
  }
  return "dual_residual";
}

StandardEstimator standard_estimator_from_string(const std::string& s) {
  if (s == "dual_residual") return StandardEstimator::dual_residual;
  if (s == "state_bound") return StandardEstimator::state_bound;
  if (s == "calibrated") return StandardEstimator::calibrated;
  throw ConfigError("unknown standard estimator '" + s + "'");
}

void GreedyOptions::validate() const {
  if (!(tol > 0.0)) throw ConfigError("greedy tolerance must be positive");
  if (r_c < 1) throw ConfigError("r_c must be positive");
  if (max_iterations < 1) throw ConfigError("iteration cap must be positive");
  if (deim_per_iteration < 0) throw ConfigError("DEIM modes per iteration must be non-negative");
  scheme.validate();
  solver.validate();
  if (!(closure.tol_t > 0.0 && closure.tol_t < 1.0 && closure.tol_p > 0.0 && closure.tol_p < 1.0)) {
    throw ConfigError("SVD tolerances must lie in (0, 1)");
  }
}

ParameterCache::ParameterCache(const ParametricSystem& sys, double dt, ImexScheme scheme)
    : sys_(sys), dt_(dt), scheme_(scheme) {}

const ParameterCache::Entry& ParameterCache::get(const Parameter& p, const Matrix* V_du) {
  const auto key = key_of(p);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    Entry e;
    e.ops = std::make_unique<ImexOperators>(sys_, p, dt_, scheme_);
    e.norms = estimate_operator_norms(*e.ops);
    e.dual = solve_dual(*e.ops, sys_.C(), V_du);
    it = entries_.emplace(key, std::move(e)).first;
  } else if (V_du) {
    it->second.dual = solve_dual(*it->second.ops, sys_.C(), V_du);
  }
  return it->second;
}

CromEvaluation evaluate_crom(const ParametricSystem& sys, ParameterCache& cache, const Parameter& p,
                             const Matrix& V, const DeimModel* deim, const ClosureModel* closure,
                             const Matrix* VtVd, const TimeGrid& grid, double rho_bar,
                             const GreedyOptions& options, const Matrix* V_du) {
  const auto& entry = cache.get(p, V_du);
  const Rom rom(sys, V, p, grid.dt, options.scheme, deim);
  RomSolution sol;
  if (closure && VtVd) {
    sol = solve_crom(rom, closure, *VtVd, grid);
  } else {
    sol = solve_crom(rom, closure, grid);
  }
  Matrix D;
  if (closure) D = closure->eval_all(p);
  CromEvaluation ev;
  ev.residual = residual_corrected(*entry.ops, V, sol.xhat, closure ? &D : nullptr, grid,
                                   options.drop_hyperreduction_error ? deim : nullptr);
  const Vector& norms = ev.residual.norms_for(options.drop_hyperreduction_error);
  OutputEstimateInputs in;
  in.residual_norms = &norms;
  in.r_du_norm = entry.dual.r_du_norm;
  in.Einv_norm = entry.norms.Einv;
  in.x_du_norm = entry.dual.x_du_norm;
  in.rho_bar = rho_bar;
  Vector gap;
  if (options.variant == EstimatorVariant::a) {
    const RomSolution bb = solve_rom_blackbox(rom, grid, options.solver);
    const Matrix ybar = modified_output(sol.outputs, entry.dual, ev.residual.r);
    gap = column_norms(ybar - bb.outputs);
    in.output_gap = &gap;
  }
  ev.estimate = output_error_estimate(options.variant, in);
  ev.xhat = std::move(sol.xhat);
  ev.outputs = std::move(sol.outputs);
  return ev;
}

RhoBar calibrate_rho(const ParameterCache::Entry& entry, const Matrix& fom_states, const Matrix& V,
                     const CromEvaluation& eval, const Matrix* closure_full, const TimeGrid& grid,
                     bool drop_hyperreduction_error) {
  const Matrix xtilde = V * eval.xhat;
  const Matrix aux = auxiliary_residual(*entry.ops, fom_states, xtilde, closure_full, grid);
  return rho_bar(column_norms(aux), eval.residual.norms_for(drop_hyperreduction_error));
}

Trajectory fom_snapshots(const ParametricSystem& sys, const Parameter& p, const TimeGrid& grid,
                         const GreedyOptions& options) {
  if (options.snapshots == SnapshotSource::imposed) return solve_imex(sys, grid, options.scheme, p);
  return solve_blackbox(sys, grid, options.solver, p);
}

Vector standard_estimate(const ParametricSystem& sys, ParameterCache& cache, const Parameter& p,
                         const Matrix& V, const DeimModel* deim, const TimeGrid& grid, double rho_bar,
                         const GreedyOptions& options) {
  const auto& entry = cache.get(p);
  const Rom rom(sys, V, p, grid.dt, options.scheme, deim);
  const RomSolution sol = options.snapshots == SnapshotSource::blackbox ? solve_rom_blackbox(rom, grid, options.solver)
                                                                        : solve_crom(rom, nullptr, grid);
  const CorrectedResidual res = residual_corrected(*entry.ops, V, sol.xhat, nullptr, grid,
                                                   options.drop_hyperreduction_error ? deim : nullptr);
  const Vector& norms = res.norms_for(options.drop_hyperreduction_error);
  Vector per_step;
  switch (options.standard_estimator) {
    case StandardEstimator::dual_residual:
      per_step = entry.dual.x_du_norm * norms;
      per_step[0] = 0.0;
      break;
    case StandardEstimator::state_bound: {
      const Matrix xtilde = V * sol.xhat;
      const double L_f = lipschitz_estimate(sys, p, xtilde, 50);
      const Vector x0 = sys.x0(p);
      const double e0 = (x0 - V * (V.transpose() * x0)).norm();
      per_step = spectral_norm(sys.C()) *
                 state_error_bound(norms, state_bound_constants(entry.norms, grid.dt, L_f), e0);
      break;
    }
    case StandardEstimator::calibrated: {
      OutputEstimateInputs in;
      in.residual_norms = &norms;
      in.r_du_norm = entry.dual.r_du_norm;
      in.Einv_norm = entry.norms.Einv;
      in.x_du_norm = entry.dual.x_du_norm;
      in.rho_bar = rho_bar;
      per_step = output_error_estimate(EstimatorVariant::b, in).per_step;
      break;
    }
  }
  if (!per_step.allFinite()) throw EstimatorError("non-finite estimate at p = " + format_parameter(p));
  return per_step;
}

GreedyResult pod_greedy_standard(const ParametricSystem& sys, const std::vector<Parameter>& train,
                                 const TimeGrid& grid, const GreedyOptions& options,
                                 const IterationCallback& on_iteration) {
  options.validate();
  if (train.empty()) throw ConfigError("training set is empty");
  for (const auto& p : train) sys.domain().check(p);
  const auto t_start = Clock::now();
  const auto np = static_cast<Index>(train.size());
  ParameterCache cache(sys, grid.dt, options.scheme);
  Enrichment enrich(sys, options);
  std::vector<bool> selected(static_cast<std::size_t>(np), false);

  GreedyResult result;
  result.algorithm = 1;
  Index star = 0;
  double rho = 1.0;
  Vector estimates(np);

  for (Index it = 1; it <= options.max_iterations; ++it) {
    const auto t_it = Clock::now();
    const Parameter& p_star = train[static_cast<std::size_t>(star)];
    selected[static_cast<std::size_t>(star)] = true;
    const Trajectory traj = fom_snapshots(sys, p_star, grid, options);
    enrich.add(p_star, traj.states);
    const Matrix& V = enrich.V();
    const DeimModel* deim = enrich.deim();

    auto solve_reduced = [&](const Parameter& p) {
      const Rom rom(sys, V, p, grid.dt, options.scheme, deim);
      if (options.snapshots == SnapshotSource::blackbox) return solve_rom_blackbox(rom, grid, options.solver);
      return solve_crom(rom, nullptr, grid);
    };

    if (options.standard_estimator == StandardEstimator::calibrated) {
      const auto& entry = cache.get(p_star);
      const RomSolution sol = solve_reduced(p_star);
      CromEvaluation ev;
      ev.xhat = sol.xhat;
      ev.residual = residual_corrected(*entry.ops, V, sol.xhat, nullptr, grid,
                                       options.drop_hyperreduction_error ? deim : nullptr);
      rho = calibrate_rho(entry, traj.states, V, ev, nullptr, grid, options.drop_hyperreduction_error).value;
    }

    for (Index i = 0; i < np; ++i) {
      const Parameter& p = train[static_cast<std::size_t>(i)];
      try {
        estimates[i] = time_mean(standard_estimate(sys, cache, p, V, deim, grid, rho, options));
      } catch (const DivergenceError& e) {
        log_divergence(p, e);
        estimates[i] = kDiverged;
      } catch (const IntegrationError& e) {
        log_divergence(p, e);
        estimates[i] = kDiverged;
      }
    }

    GreedyIteration rec;
    rec.iteration = it;
    rec.selected_index = star;
    rec.p_star = p_star;
    rec.epsilon = estimates.maxCoeff();
    rec.n = V.cols();
    rec.n_deim = enrich.deim_size();
    rec.rho_bar = rho;
    rec.seconds = seconds_since(t_it);
    result.history.push_back(rec);
    log_iteration(1, rec);
    if (on_iteration) on_iteration(rec);

    if (rec.epsilon <= options.tol) {
      result.converged = true;
      break;
    }
    const Index next = argmax_unselected(estimates, selected);
    if (next < 0) break;
    star = next;
  }

  result.V = enrich.V();
  result.basis_history = enrich.basis().history();
  result.final_estimates = estimates;
  result.rho_bar = rho;
  if (enrich.deim_model()) result.deim = enrich.deim_model();
  result.total_seconds = seconds_since(t_start);
  return result;
}

GreedyResult pod_greedy_ode(const ParametricSystem& sys, const std::vector<Parameter>& train,
                            const std::vector<Index>& defect_indices, const TimeGrid& grid,
                            const GreedyOptions& options, const IterationCallback& on_iteration) {
  options.validate();
  if (train.empty()) throw ConfigError("training set is empty");
  if (defect_indices.empty()) throw ConfigError("defect training set is empty");
  for (const auto& p : train) sys.domain().check(p);
  const auto np = static_cast<Index>(train.size());
  for (Index i : defect_indices) {
    if (i < 0 || i >= np) throw ConfigError("defect sample index outside the training set");
  }
  const auto t_start = Clock::now();
  ParameterCache cache(sys, grid.dt, options.scheme);

  // Defect tensor from snapshots at the defect training parameters.
  std::map<ParameterKey, Trajectory> fom_cache;
  DefectTensor tensor;
  tensor.grid = grid;
  tensor.scheme = options.scheme;
  for (Index i : defect_indices) {
    const Parameter& p = train[static_cast<std::size_t>(i)];
    Trajectory traj = fom_snapshots(sys, p, grid, options);
    tensor.slices.push_back(compute_defect_trajectory(traj, *cache.get(p).ops));
    tensor.params.push_back(p);
    fom_cache.emplace(key_of(p), std::move(traj));
  }
  ClosureTrainReport report;
  ClosureModel closure = train_closure(tensor, sys.domain(), options.closure, &report);
  tensor.slices.clear();
  GreedyResult result;
  result.algorithm = 2;
  result.defect_indices = defect_indices;
  result.pretrain_seconds = seconds_since(t_start);
  spdlog::info("closure trained: n_d = {}, d_s = {} ({:.1f} s)", closure.reduced_dim(), defect_indices.size(),
               result.pretrain_seconds);

  Enrichment enrich(sys, options);
  std::vector<bool> selected(static_cast<std::size_t>(np), false);
  Matrix V_du;
  Index star = 0;
  double rho = 1.0;
  Vector estimates(np);

  for (Index it = 1; it <= options.max_iterations; ++it) {
    const auto t_it = Clock::now();
    const Parameter& p_star = train[static_cast<std::size_t>(star)];
    selected[static_cast<std::size_t>(star)] = true;
    Trajectory traj;
    if (auto f = fom_cache.find(key_of(p_star)); f != fom_cache.end()) {
      traj = f->second;
    } else {
      traj = fom_snapshots(sys, p_star, grid, options);
    }
    const auto& star_entry = cache.get(p_star);
    if (options.update_defect) closure.update(p_star, compute_defect_trajectory(traj, *star_entry.ops));
    enrich.add(p_star, traj.states);
    if (options.reduced_dual) {
      if (V_du.size() == 0) V_du.resize(sys.dim(), 0);
      append_orthonormal(V_du, solve_dual(*star_entry.ops, sys.C()).x_du, 1e-8);
    }
    const Matrix* Vdu = options.reduced_dual ? &V_du : nullptr;
    const Matrix& V = enrich.V();
    const DeimModel* deim = enrich.deim();
    const Matrix VtVd = V.transpose() * closure.Vd();

    const CromEvaluation star_eval =
        evaluate_crom(sys, cache, p_star, V, deim, &closure, &VtVd, grid, 1.0, options, Vdu);
    const Matrix D_star = closure.eval_all(p_star);
    rho = calibrate_rho(cache.get(p_star), traj.states, V, star_eval, &D_star, grid,
                        options.drop_hyperreduction_error)
              .value;

    for (Index i = 0; i < np; ++i) {
      const Parameter& p = train[static_cast<std::size_t>(i)];
      try {
        estimates[i] = evaluate_crom(sys, cache, p, V, deim, &closure, &VtVd, grid, rho, options, Vdu).estimate.mean;
      } catch (const DivergenceError& e) {
        log_divergence(p, e);
        estimates[i] = kDiverged;
      }
    }

    GreedyIteration rec;
    rec.iteration = it;
    rec.selected_index = star;
    rec.p_star = p_star;
    rec.epsilon = estimates.maxCoeff();
    rec.n = V.cols();
    rec.n_deim = enrich.deim_size();
    rec.rho_bar = rho;
    rec.seconds = seconds_since(t_it);
    result.history.push_back(rec);
    log_iteration(2, rec);
    if (on_iteration) on_iteration(rec);

    if (rec.epsilon <= options.tol) {
      result.converged = true;
      break;
    }
    const Index next = argmax_unselected(estimates, selected);
    if (next < 0) break;
    star = next;
  }

  result.V = enrich.V();
  result.basis_history = enrich.basis().history();
  result.final_estimates = estimates;
  result.rho_bar = rho;
  if (enrich.deim_model()) result.deim = enrich.deim_model();
  result.closure = std::move(closure);
  result.closure_report = std::move(report);
  result.total_seconds = seconds_since(t_start);
  return result;
}

void GreedyResult::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["algorithm"] = algorithm;
  j["converged"] = converged;
  j["n"] = V.cols();
  j["rho_bar"] = rho_bar;
  j["basis_history"] = basis_history;
  j["pretrain_seconds"] = pretrain_seconds;
  j["total_seconds"] = total_seconds;
  j["defect_indices"] = defect_indices;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : history) {
    hist.push_back({{"iteration", h.iteration},
                    {"selected_index", h.selected_index},
                    {"p_star", std::vector<double>(h.p_star.data(), h.p_star.data() + h.p_star.size())},
                    {"epsilon", h.epsilon},
                    {"n", h.n},
                    {"n_deim", h.n_deim},
                    {"rho_bar", h.rho_bar},
                    {"seconds", h.seconds}});
  }
  j["history"] = hist;
  j["final_estimates"] = std::vector<double>(final_estimates.data(), final_estimates.data() + final_estimates.size());
  write_matrix(dir / "V.bin", V);
  if (deim) {
    write_matrix(dir / "deim_U.bin", deim->U());
    j["deim_indices"] = deim->indices();
  }
  if (closure) {
    closure->save(dir / "closure");
    j["n_d"] = closure->reduced_dim();
  }
  std::ofstream out(dir / "result.json");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write result.json");
}

}  // namespace decrom
