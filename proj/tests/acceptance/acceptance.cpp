// Acceptance runner: one PASS/FAIL line per criterion, tolerances and budgets pinned below.
#include "app.hpp"

#include <decrom/blackbox.hpp>
#include <decrom/config.hpp>
#include <decrom/deim.hpp>
#include <decrom/defect.hpp>
#include <decrom/estimator.hpp>
#include <decrom/fnn.hpp>
#include <decrom/imex.hpp>
#include <decrom/linalg.hpp>
#include <decrom/rbf.hpp>
#include <decrom/rom.hpp>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace decrom;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = g(rng);
  return M;
}

Parameter P1(double v) { return Parameter::Constant(1, v); }

Parameter midpoint(const ParametricSystem& sys) {
  const auto& axes = sys.domain().axes();
  Parameter p(static_cast<Index>(axes.size()));
  for (std::size_t a = 0; a < axes.size(); ++a) p[static_cast<Index>(a)] = 0.5 * (axes[a].lo + axes[a].hi);
  return p;
}

// Imposed-scheme residual assembled from A, f, B and u without the library's IMEX operators.
// scale[k] = |E_k x^k| + |g^k|, the size of the cancelling operands.
Matrix residual_from_definition(const ParametricSystem& sys, const Parameter& p, const Matrix& X,
                                const TimeGrid& grid, int order, Vector& scale) {
  scale = Vector::Zero(X.cols());
  const SparseMatrix A = sys.A(p);
  const Matrix B = sys.B(p);
  const double dt = grid.dt;
  Matrix R = Matrix::Zero(X.rows(), X.cols());
  for (Index k = 1; k <= grid.K; ++k) {
    const Vector f1 = sys.nonlinearity(X.col(k - 1), p);
    Vector lhs, rhs;
    if (order == 1 || k == 1) {
      rhs = X.col(k - 1) + dt * f1;
      lhs = X.col(k) - dt * (A * X.col(k));
    } else {
      const Vector f2 = sys.nonlinearity(X.col(k - 2), p);
      rhs = X.col(k - 1) + 0.5 * dt * (A * X.col(k - 1)) + dt * (1.5 * f1 - 0.5 * f2);
      lhs = X.col(k) - 0.5 * dt * (A * X.col(k));
    }
    if (B.size() > 0) rhs += dt * (B * sys.input(grid.t(k)));
    R.col(k) = rhs - lhs;
    scale[k] = rhs.norm() + lhs.norm();
  }
  return R;
}

std::vector<Index> deim_brute_force(const Matrix& U) {
  std::vector<Index> idx;
  for (Index l = 0; l < U.cols(); ++l) {
    Vector res = U.col(l);
    if (l > 0) {
      Matrix PtU(l, l);
      Vector rhs(l);
      for (Index i = 0; i < l; ++i) {
        PtU.row(i) = U.row(idx[static_cast<std::size_t>(i)]).head(l);
        rhs[i] = U(idx[static_cast<std::size_t>(i)], l);
      }
      res -= U.leftCols(l) * PtU.fullPivLu().solve(rhs);
    }
    Index best = 0;
    for (Index i = 1; i < res.size(); ++i) {
      if (std::abs(res[i]) > std::abs(res[best])) best = i;
    }
    idx.push_back(best);
  }
  return idx;
}

class Runner {
 public:
  explicit Runner(fs::path configs, bool fhn_full) : configs_(std::move(configs)), fhn_full_(fhn_full) {}

  ExperimentConfig config(const std::string& name) const { return load_config(configs_ / name); }

  // 1
  Outcome heat_demo() const {
    const app::HeatDemo d = app::run_heat_demo(config("heat.ini"));
    return {d.overestimated_fraction >= 0.5,
            "share of steps with estimate >= 100x true error " + fmt("%.3f", d.overestimated_fraction) +
                " (need >= 0.5)"};
  }

  // 2
  Outcome cfom_recovery() const {
    const ExperimentConfig cfg = config("heat.ini");
    const auto sys = assemble(cfg.model);
    const TimeGrid grid = cfg.grid();
    const Parameter& p = cfg.demo_parameter;
    const Trajectory bb = solve_blackbox(*sys, grid, cfg.greedy.solver, p);
    double worst = 0.0;
    for (int order : {1, 2}) {
      const ImexOperators ops(*sys, p, grid.dt, ImexScheme{order});
      const Matrix D = compute_defect_trajectory(bb, ops);
      const Trajectory c = solve_imex(ops, grid, &D);
      for (Index k = 0; k < grid.size(); ++k) {
        worst = std::max(worst, (c.states.col(k) - bb.states.col(k)).cwiseAbs().maxCoeff() /
                                    bb.states.col(k).cwiseAbs().maxCoeff());
      }
    }
    return {worst <= 1e-8, "max relative pointwise mismatch " + fmt("%.2e", worst) + " (need <= 1e-8)"};
  }

  // 3
  Outcome defect_residual_identity() const {
    double worst = 0.0;
    for (const char* name : {"heat.ini", "burgers.ini", "fhn.ini"}) {
      const ExperimentConfig cfg = config(name);
      const auto sys = assemble(cfg.model);
      const Parameter p = midpoint(*sys);
      const TimeGrid grid(cfg.t0, cfg.dt, 50);
      const Trajectory bb = solve_blackbox(*sys, grid, cfg.greedy.solver, p);
      for (int order : {1, 2}) {
        const ImexOperators ops(*sys, p, grid.dt, ImexScheme{order});
        const Matrix D = compute_defect_trajectory(bb, ops);
        Vector scale;
        const Matrix R = residual_from_definition(*sys, p, bb.states, grid, order, scale);
        for (Index k = 1; k <= grid.K; ++k) worst = std::max(worst, (D.col(k) + R.col(k)).norm() / scale[k]);
      }
    }
    return {worst <= 1e-12, "max |d^k + r^k| / (|E_k x^k| + |g^k|) " + fmt("%.2e", worst) + " (need <= 1e-12)"};
  }

  // 4
  Outcome state_bound_rigor() const {
    const ExperimentConfig cfg = config("heat.ini");
    const auto sys = assemble(cfg.model);
    const TimeGrid grid = cfg.grid();
    const Parameter& p = cfg.demo_parameter;
    const ImexOperators ops(*sys, p, grid.dt, ImexScheme::imex1());
    const Trajectory fom = solve_imex(ops, grid);
    const OperatorNorms norms = estimate_operator_norms(ops);
    const StateBoundConstants c = state_bound_constants(norms, grid.dt, 0.0);
    Index violations = 0;
    double recurrence_gap = 0.0;
    for (Index n : {4, 6, 12}) {
      const Matrix V = left_svd(fom.states).U.leftCols(n);
      const Rom rom(*sys, V, p, grid.dt, ImexScheme::imex1());
      const Matrix xhat = rom.solve(grid);
      const Matrix Xt = V * xhat;
      const CorrectedResidual r = residual_corrected(ops, V, xhat, nullptr, grid);
      const double e0 = (fom.states.col(0) - Xt.col(0)).norm();
      const Vector delta = state_error_bound(r.norms, c, e0);
      double rec = e0;
      for (Index k = 0; k < grid.size(); ++k) {
        if (k > 0) rec = c.xi * rec + c.zeta * r.norms[k];
        recurrence_gap = std::max(recurrence_gap, std::abs(delta[k] - rec) / std::max(rec, 1e-300));
        if (delta[k] < (fom.states.col(k) - Xt.col(k)).norm()) ++violations;
      }
    }
    return {violations == 0 && recurrence_gap <= 1e-12,
            std::to_string(violations) + " steps with bound < true error; closed form vs recurrence " +
                fmt("%.2e", recurrence_gap) + " (need 0 and <= 1e-12)"};
  }

  // 5
  Outcome second_theorem() const {
    const ExperimentConfig cfg = config("heat.ini");
    const auto sys = assemble(cfg.model);
    const TimeGrid grid = cfg.grid();
    const Parameter& p = cfg.demo_parameter;
    const Trajectory fom = solve_blackbox(*sys, grid, cfg.greedy.solver, p);
    const ImexOperators ops(*sys, p, grid.dt, ImexScheme::imex1());
    const Matrix D = compute_defect_trajectory(fom, ops);
    const DualSolution dual = solve_dual(ops, sys->C());
    const OperatorNorms norms = estimate_operator_norms(ops);
    const Matrix y = sys->C() * fom.states;
    Index violations = 0;
    double worst_ratio = 0.0;
    for (Index n : {Index{4}, cfg.demo_basis}) {
      const Matrix V = left_svd(fom.states).U.leftCols(n);
      const Rom rom(*sys, V, p, grid.dt, ImexScheme::imex1());
      const Matrix dhat = V.transpose() * D;
      const Matrix xhat = rom.solve(grid, &dhat);
      const Matrix Xt = V * xhat;
      const CorrectedResidual r = residual_corrected(ops, V, xhat, &D, grid);
      const Matrix aux = auxiliary_residual(ops, fom.states, Xt, &D, grid);
      const Matrix ybar = modified_output(rom.outputs(xhat), dual, r.r);
      for (Index k = 1; k < grid.size(); ++k) {
        const double lhs = (y.col(k) - ybar.col(k)).norm();
        const double rhs = norms.Einv * dual.r_du_norm * aux.col(k).norm() +
                           dual.x_du_norm * (r.r.col(k) - aux.col(k)).norm();
        if (lhs > rhs * (1.0 + 1e-9) + 1e-15) ++violations;
        if (rhs > 0.0) worst_ratio = std::max(worst_ratio, lhs / rhs);
      }
    }
    return {violations == 0, std::to_string(violations) + " violating steps; max lhs/rhs " +
                                 fmt("%.3f", worst_ratio) + " (need 0 violations)"};
  }

  // 6
  Outcome burgers_alg2() const {
    ExperimentConfig cfg = config("burgers.ini");
    cfg.algorithm = 2;
    const app::Problem pb = app::make_problem(cfg);
    const GreedyResult res = app::run_greedy(cfg, pb);
    const app::TestSweep sweep = app::sweep_test_set(cfg, pb, res, false);
    const double worst = sweep.mean_estimate.maxCoeff();
    const Index n = res.V.cols();
    return {res.converged && n <= 15 && worst < 1e-4,
            std::string(res.converged ? "converged" : "not converged") + " in " +
                std::to_string(res.history.size()) + " iterations, n = " + std::to_string(n) +
                " (need <= 15), max test mean estimate " + fmt("%.2e", worst) + " (need < 1e-4)"};
  }

  // 7
  Outcome burgers_alg1() const {
    ExperimentConfig cfg = config("burgers.ini");
    cfg.algorithm = 1;
    cfg.greedy.max_iterations = 10;
    const app::Problem pb = app::make_problem(cfg);
    const GreedyResult res = app::run_greedy(cfg, pb);
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& it : res.history) lowest = std::min(lowest, it.epsilon);
    const double threshold = 10.0 * cfg.greedy.tol;
    return {!res.converged && lowest >= threshold,
            "min eps over " + std::to_string(res.history.size()) + " iterations " + fmt("%.3e", lowest) +
                ", last " + fmt("%.3e", res.history.back().epsilon) + " (need >= " + fmt("%.0e", threshold) +
                ")"};
  }

  // 8
  Outcome burgers_defect_rank() const {
    const ExperimentConfig cfg = config("burgers.ini");
    const app::Problem pb = app::make_problem(cfg);
    const DefectTensor tensor = app::build_defect_tensor(cfg, pb);
    const auto& c = cfg.greedy.closure;
    const TwoStageSvd svd = two_stage_svd(tensor, c.tol_t, c.tol_p, c.truncation);
    const Index nd = svd.Vd.cols();
    return {nd >= 30 && nd <= 70, "n_d = " + std::to_string(nd) + " (need 30..70)"};
  }

  // 9
  Outcome fhn_alg2() const {
    ExperimentConfig on = config(fhn_full_ ? "fhn.ini" : "fhn_small.ini");
    on.algorithm = 2;
    on.greedy.update_defect = true;
    ExperimentConfig off = on;
    off.greedy.update_defect = false;
    const app::Problem pb = app::make_problem(on);
    const GreedyResult a = app::run_greedy(on, pb);
    const GreedyResult b = app::run_greedy(off, pb);
    const auto it_on = static_cast<Index>(a.history.size());
    const auto it_off = static_cast<Index>(b.history.size());
    const Index n = a.V.cols();
    const bool ok = a.converged && it_on <= 20 && n >= 15 && n <= 60 && it_on <= it_off;
    return {ok, "N = " + std::to_string(pb.sys->dim()) + ", updates on: " +
                    (a.converged ? "converged" : "not converged") + " in " + std::to_string(it_on) +
                    " iterations (need <= 20), n = " + std::to_string(n) + " (need 15..60); updates off: " +
                    std::to_string(it_off) + " iterations (need >= " + std::to_string(it_on) + ")"};
  }

  // 10
  Outcome scheme_orders() const {
    const ExperimentConfig cfg = config("heat.ini");
    const auto sys = assemble(cfg.model);
    const Parameter p = P1(0.02);
    SolverConfig tight = cfg.greedy.solver;
    tight.rtol = 1e-12;
    tight.atol = 1e-14;
    const double T = 0.5;
    bool ok = true;
    std::ostringstream detail;
    for (int order : {1, 2}) {
      std::vector<double> errors;
      for (Index K : {50, 100, 200}) {
        const TimeGrid grid(0.0, T / static_cast<double>(K), K);
        const Vector ref = solve_blackbox(*sys, grid, tight, p).states.col(K);
        const Vector x = solve_imex(*sys, grid, ImexScheme{order}, p).states.col(K);
        errors.push_back((x - ref).norm());
      }
      detail << "IMEX" << order << " orders";
      for (std::size_t i = 1; i < errors.size(); ++i) {
        const double q = std::log2(errors[i - 1] / errors[i]);
        ok = ok && std::abs(q - order) <= 0.2;
        detail << " " << fmt("%.3f", q);
      }
      detail << (order == 1 ? "; " : " (need within 0.2)");
    }
    return {ok, detail.str()};
  }

  // 11
  Outcome surrogate_properties() const {
    ParameterDomain dom({{"eps", 0.01, 0.04, AxisScale::linear}, {"c", 0.025, 0.075, AxisScale::linear}});
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Parameter> params;
    std::vector<Matrix> reduced;
    for (int i = 0; i < 21; ++i) {
      Vector z(2);
      z << u(rng), u(rng);
      params.push_back(dom.denormalize(z));
      reduced.push_back(random_matrix(8, 50, 100 + static_cast<std::uint64_t>(i)));
    }
    const RbfInterpolant rbf = RbfInterpolant::fit(reduced, params, dom);
    double node_err = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      node_err = std::max(node_err, (rbf.eval_all(params[i]) - reduced[i]).cwiseAbs().maxCoeff() /
                                        reduced[i].cwiseAbs().maxCoeff());
    }

    FnnModel net(3, {16, 64, 64}, 4, 42);
    const Matrix in = (random_matrix(3, 16, 1).array() * 0.5 + 0.5).matrix();
    const Matrix target = random_matrix(4, 16, 2).array().tanh().matrix();
    std::vector<Matrix> gW;
    std::vector<Vector> gb;
    net.loss_and_gradient(in, target, gW, gb);
    std::vector<double> flat;
    for (const auto& g : gW) flat.insert(flat.end(), g.data(), g.data() + g.size());
    for (const auto& g : gb) flat.insert(flat.end(), g.data(), g.data() + g.size());
    std::uniform_int_distribution<Index> pick(0, net.num_parameters() - 1);
    double grad_err = 0.0;
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
      const Index i = pick(rng);
      const double w = net.parameter(i);
      net.parameter(i) = w + h;
      const double lp = net.loss(in, target);
      net.parameter(i) = w - h;
      const double lm = net.loss(in, target);
      net.parameter(i) = w;
      const double fd = (lp - lm) / (2 * h);
      const double an = flat[static_cast<std::size_t>(i)];
      grad_err = std::max(grad_err, std::abs(fd - an) / std::max(std::abs(an), 1e-3));
    }

    FnnData data;
    data.inputs = random_matrix(2, 40, 3);
    data.targets = Matrix::Zero(3, 40);
    FnnHyper hyper;
    hyper.hidden = {16, 16};
    hyper.epochs = 1000;
    hyper.learning_rate = 0.01;
    const FnnTrainResult trained = fnn_train(data, hyper);
    const double zero_out =
        trained.model.forward(trained.model.normalize_inputs(data.inputs)).cwiseAbs().maxCoeff();

    return {node_err <= 1e-8 && grad_err <= 1e-5 && zero_out <= 1e-2,
            "RBF node error " + fmt("%.2e", node_err) + " (need <= 1e-8), FNN gradient error " +
                fmt("%.2e", grad_err) + " (need <= 1e-5), FNN zero-target output " + fmt("%.2e", zero_out) +
                " (need <= 1e-2)"};
  }

  // 12
  Outcome deim() const {
    const ExperimentConfig cfg = config("burgers.ini");
    ModelOptions small = cfg.model;
    small.n_cells = 60;
    const auto sys = assemble(small);
    const Parameter p = P1(0.02);
    const TimeGrid grid(0.0, cfg.dt, 100);
    const Trajectory fom = solve_imex(*sys, grid, ImexScheme::imex1(), p);
    const Matrix V = left_svd(fom.states).U.leftCols(8);
    const DeimModel full(random_matrix(sys->dim(), sys->dim(), 6).householderQr().householderQ());
    const Rom plain = galerkin_project(*sys, V, p, grid, ImexScheme::imex1());
    const Rom hyper = galerkin_project(*sys, V, p, grid, ImexScheme::imex1(), &full);
    const double mismatch = (plain.outputs(plain.solve(grid)) - hyper.outputs(hyper.solve(grid))).cwiseAbs().maxCoeff();

    const Matrix U = left_svd(random_matrix(50, 20, 2024)).U;
    const bool same = deim_indices(U) == deim_brute_force(U);
    return {mismatch <= 1e-6 && same, "full-rank DEIM output mismatch " + fmt("%.2e", mismatch) +
                                          " (need <= 1e-6), indices " + (same ? "match" : "differ from") +
                                          " brute force on 50x20"};
  }

 private:
  fs::path configs_;
  bool fhn_full_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Acceptance criteria"};
  std::string configs = DECROM_CONFIG_DIR;
  std::vector<int> only;
  std::vector<int> known_fail;
  bool fhn_full = false;
  cli.add_option("--configs", configs, "Directory with heat.ini, burgers.ini, fhn.ini, fhn_small.ini");
  cli.add_option("--only", only, "Run only these criteria")->delimiter(',');
  cli.add_option("--known-fail", known_fail, "Criteria whose failure does not set the exit code")->delimiter(',');
  cli.add_flag("--fhn-full", fhn_full, "Criterion 9 at N = 1024 with a 60 min budget");
  CLI11_PARSE(cli, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  const Runner r(configs, fhn_full);
  const std::vector<Criterion> criteria = {
      {1, "heat failure demo", 10, [&] { return r.heat_demo(); }},
      {2, "C-FOM recovery", 10, [&] { return r.cfom_recovery(); }},
      {3, "defect-residual equivalence", 30, [&] { return r.defect_residual_identity(); }},
      {4, "state bound rigor", 10, [&] { return r.state_bound_rigor(); }},
      {5, "output bound term by term", 10, [&] { return r.second_theorem(); }},
      {6, "Burgers Alg. 2", 15 * 60, [&] { return r.burgers_alg2(); }},
      {7, "Burgers Alg. 1 stagnation", 15 * 60, [&] { return r.burgers_alg1(); }},
      {8, "Burgers defect rank", 2 * 60, [&] { return r.burgers_defect_rank(); }},
      {9, "FHN Alg. 2", fhn_full ? 3600.0 : 600.0, [&] { return r.fhn_alg2(); }},
      {10, "scheme orders", 60, [&] { return r.scheme_orders(); }},
      {11, "surrogate properties", 5 * 60, [&] { return r.surrogate_properties(); }},
      {12, "DEIM", 60, [&] { return r.deim(); }},
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.ok && in_time;
    const bool known = std::find(known_fail.begin(), known_fail.end(), c.id) != known_fail.end();
    if (!pass && !known) ++unexpected;
    std::printf("%s %2d %s: %s; %.1f s (budget %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs, c.budget_seconds, !pass && known ? " [known failure]" : "");
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
