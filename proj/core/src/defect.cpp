#include "decrom/defect.hpp"

#include "decrom/io.hpp"
#include "decrom/linalg.hpp"

#include <json.hpp>

#include <fstream>

namespace decrom {

namespace {

void check_grid(const TimeGrid& grid, const ImexOperators& ops) {
  if (std::abs(grid.dt - ops.dt()) > 1e-15 * grid.dt) {
    throw DimensionError("trajectory grid does not match the scheme's time step");
  }
}

}  // namespace

Matrix scheme_residual(const Matrix& states, const ImexOperators& ops, const TimeGrid& grid,
                       const Matrix* closure) {
  check_grid(grid, ops);
  const Index n = ops.dim();
  if (states.rows() != n || states.cols() != grid.size()) {
    throw DimensionError("states must be N x N_t");
  }
  if (closure && (closure->rows() != n || closure->cols() != grid.size())) {
    throw DimensionError("closure must be N x N_t");
  }
  const ParametricSystem& sys = ops.system();
  const Parameter& p = ops.parameter();
  Matrix R = Matrix::Zero(n, grid.size());
  Vector f_prev(n), f_prev2(n), g(n);
  sys.nonlinearity(states.col(0), p, f_prev);
  for (Index k = 1; k <= grid.K; ++k) {
    ops.explicit_part(k, grid.t(k), states.col(k - 1), f_prev, &f_prev2, g);
    if (closure) g += closure->col(k);
    g.noalias() -= ops.E_step(k) * states.col(k);
    R.col(k) = g;
    f_prev2.swap(f_prev);
    sys.nonlinearity(states.col(k), p, f_prev);
  }
  return R;
}

Matrix compute_defect_trajectory(const Trajectory& traj, const ImexOperators& ops) {
  if (traj.parameter.size() && key_of(traj.parameter) != key_of(ops.parameter())) {
    throw DimensionError("trajectory parameter differs from the operators' parameter");
  }
  return -scheme_residual(traj.states, ops, traj.grid);
}

Matrix compute_defect_trajectory(const Trajectory& traj, const ParametricSystem& sys,
                                 ImexScheme scheme, const Parameter& p) {
  ImexOperators ops(sys, p, traj.grid.dt, scheme);
  return compute_defect_trajectory(traj, ops);
}

void DefectTensor::validate() const {
  if (slices.empty()) throw DimensionError("defect tensor is empty");
  if (slices.size() != params.size()) throw DimensionError("slice/parameter count mismatch");
  for (const auto& s : slices) {
    if (s.rows() != dim() || s.cols() != grid.size()) {
      throw DimensionError("defect slice must be N x N_t");
    }
  }
}

void save_defect_tensor(const std::filesystem::path& dir, const DefectTensor& tensor) {
  tensor.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "decrom-defect-tensor";
  manifest["scheme"] = tensor.scheme.id();
  manifest["grid"] = {{"t0", tensor.grid.t0}, {"dt", tensor.grid.dt}, {"K", tensor.grid.K}};
  manifest["dim"] = tensor.dim();
  nlohmann::json slices = nlohmann::json::array();
  for (std::size_t i = 0; i < tensor.slices.size(); ++i) {
    const std::string file = "slice_" + std::to_string(i) + ".bin";
    write_matrix(dir / file, tensor.slices[i]);
    const auto& p = tensor.params[i];
    slices.push_back({{"parameter", std::vector<double>(p.data(), p.data() + p.size())},
                      {"file", file}});
  }
  manifest["slices"] = slices;
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw IoError("cannot write defect manifest");
}

DefectTensor load_defect_tensor(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("missing manifest.json in " + dir.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed defect manifest: ") + e.what());
  }
  DefectTensor t;
  t.scheme = ImexScheme::from_id(manifest.at("scheme").get<std::string>());
  const auto& g = manifest.at("grid");
  t.grid = TimeGrid(g.at("t0").get<double>(), g.at("dt").get<double>(), g.at("K").get<Index>());
  for (const auto& s : manifest.at("slices")) {
    const auto values = s.at("parameter").get<std::vector<double>>();
    t.params.push_back(Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size())));
    t.slices.push_back(read_matrix(dir / s.at("file").get<std::string>()));
  }
  t.validate();
  return t;
}

std::string to_string(TruncationRule rule) {
  return rule == TruncationRule::energy ? "energy" : "relative";
}

TruncationRule truncation_rule_from_string(const std::string& text) {
  if (text == "energy") return TruncationRule::energy;
  if (text == "relative") return TruncationRule::relative;
  throw ConfigError("unknown truncation rule '" + text + "'");
}

Index truncation_rank(const Vector& s, double tol, TruncationRule rule) {
  return rule == TruncationRule::energy ? energy_rank(s, tol) : numerical_rank(s, tol);
}

TwoStageSvd two_stage_svd(const DefectTensor& tensor, double tol_t, double tol_p, TruncationRule rule) {
  if (tensor.slices.empty()) throw DimensionError("defect tensor is empty");
  tensor.validate();
  if (!(tol_t > 0.0 && tol_t < 1.0) || !(tol_p > 0.0 && tol_p < 1.0)) {
    throw ConfigError("SVD tolerances must lie in (0,1)");
  }
  TwoStageSvd out;
  const Index n = tensor.dim();
  std::vector<Matrix> kept;
  Index total = 0;
  for (const auto& slice : tensor.slices) {
    ThinSvd svd = left_svd(slice);
    const Index r = truncation_rank(svd.s, tol_t, rule);
    out.slice_singular_values.push_back(svd.s);
    out.slice_ranks.push_back(r);
    kept.push_back(svd.U.leftCols(r));
    total += r;
  }
  if (total == 0) throw DimensionError("defect tensor is identically zero");
  Matrix R(n, total);
  Index c = 0;
  for (const auto& U : kept) {
    R.middleCols(c, U.cols()) = U;
    c += U.cols();
  }
  ThinSvd svd = left_svd(R);
  out.stacked_singular_values = svd.s;
  const Index nd = truncation_rank(svd.s, tol_p, rule);
  out.Vd = svd.U.leftCols(nd);
  for (const auto& slice : tensor.slices) out.reduced.push_back(out.Vd.transpose() * slice);
  return out;
}

}  // namespace decrom
