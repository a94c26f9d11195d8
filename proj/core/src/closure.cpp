#include "decrom/closure.hpp"

#include "decrom/io.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>

namespace decrom {

SurrogateKind surrogate_from_string(const std::string& s) {
  if (s == "rbf") return SurrogateKind::rbf;
  if (s == "fnn") return SurrogateKind::fnn;
  throw ConfigError("unknown surrogate '" + s + "' (expected rbf or fnn)");
}

std::string to_string(SurrogateKind k) { return k == SurrogateKind::rbf ? "rbf" : "fnn"; }

namespace {

void check_basis(const Matrix& Vd) {
  if (Vd.cols() == 0) throw DimensionError("closure basis is empty");
}

std::vector<double> as_vector(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector as_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

ClosureModel::ClosureModel(Matrix Vd, RbfInterpolant rbf, TimeGrid grid, ImexScheme scheme)
    : Vd_(std::move(Vd)), surrogate_(std::move(rbf)), grid_(grid), scheme_(scheme) {
  check_basis(Vd_);
  const auto& r = std::get<RbfInterpolant>(surrogate_);
  if (r.output_dim() != Vd_.cols() || r.num_steps() != grid_.size()) {
    throw DimensionError("RBF surrogate does not match the closure basis or grid");
  }
}

ClosureModel::ClosureModel(Matrix Vd, FnnModel fnn, TimeGrid grid, ImexScheme scheme)
    : Vd_(std::move(Vd)), surrogate_(std::move(fnn)), grid_(grid), scheme_(scheme) {
  check_basis(Vd_);
  if (std::get<FnnModel>(surrogate_).output_dim() != Vd_.cols()) {
    throw DimensionError("FNN surrogate does not match the closure basis");
  }
}

SurrogateKind ClosureModel::kind() const {
  return fnn() ? SurrogateKind::fnn : SurrogateKind::rbf;
}

Matrix ClosureModel::coefficients(const Parameter& p) const {
  if (const auto* r = rbf()) {
    Matrix c = r->eval_all(p);
    c.col(0).setZero();
    return c;
  }
  if (const auto* f = fnn()) {
    Matrix in(1 + p.size(), grid_.K);
    for (Index k = 1; k <= grid_.K; ++k) {
      in(0, k - 1) = grid_.t(k);
      in.col(k - 1).tail(p.size()) = p;
    }
    Matrix c = Matrix::Zero(Vd_.cols(), grid_.size());
    if (grid_.K > 0) c.rightCols(grid_.K) = f->denormalize_outputs(f->forward(f->normalize_inputs(in)));
    return c;
  }
  throw EstimatorError("closure model has no surrogate");
}

Vector ClosureModel::coefficients(Index k, const Parameter& p) const {
  if (k < 0 || k > grid_.K) throw DimensionError("time index outside the closure grid");
  if (k == 0) return Vector::Zero(Vd_.cols());
  if (const auto* r = rbf()) return r->eval(k, p);
  if (const auto* f = fnn()) {
    Vector in(1 + p.size());
    in[0] = grid_.t(k);
    in.tail(p.size()) = p;
    return f->eval(in);
  }
  throw EstimatorError("closure model has no surrogate");
}

Vector ClosureModel::eval(Index k, const Parameter& p) const {
  if (const Matrix* D = override_for(p)) return D->col(k);
  return Vd_ * coefficients(k, p);
}

Matrix ClosureModel::eval_all(const Parameter& p) const {
  if (const Matrix* D = override_for(p)) return *D;
  return Vd_ * coefficients(p);
}

Matrix ClosureModel::project_all(const Matrix& V, const Matrix& VtVd, const Parameter& p) const {
  if (const Matrix* D = override_for(p)) return V.transpose() * (*D);
  return VtVd * coefficients(p);
}

void ClosureModel::update(const Parameter& p, const Matrix& exact) {
  if (exact.rows() != dim() || exact.cols() != grid_.size()) {
    throw DimensionError("exact defect must be N x N_t");
  }
  overrides_[key_of(p)] = exact;
}

bool ClosureModel::has_override(const Parameter& p) const {
  return overrides_.count(key_of(p)) > 0;
}

const Matrix* ClosureModel::override_for(const Parameter& p) const {
  auto it = overrides_.find(key_of(p));
  return it == overrides_.end() ? nullptr : &it->second;
}

void ClosureModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["format"] = "decrom-closure";
  j["surrogate"] = to_string(kind());
  j["scheme"] = scheme_.id();
  j["grid"] = {{"t0", grid_.t0}, {"dt", grid_.dt}, {"K", grid_.K}};
  write_matrix(dir / "Vd.bin", Vd_);
  if (const auto* r = rbf()) {
    write_matrix(dir / "rbf_centers.bin", r->centers());
    write_matrix(dir / "rbf_weights.bin", r->weights());
    j["rbf"] = {{"n_d", r->output_dim()}, {"n_t", r->num_steps()}, {"condition", r->condition_estimate()}};
  } else if (const auto* f = fnn()) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < f->weights().size(); ++l) {
      const std::string wf = "fnn_W" + std::to_string(l) + ".bin";
      const std::string bf = "fnn_b" + std::to_string(l) + ".bin";
      write_matrix(dir / wf, f->weights()[l]);
      write_matrix(dir / bf, f->biases()[l]);
      layers.push_back({{"W", wf}, {"b", bf}});
    }
    j["fnn"] = {{"widths", f->widths()},
                {"layers", layers},
                {"in_lo", as_vector(f->in_lo())},
                {"in_hi", as_vector(f->in_hi())},
                {"out_lo", as_vector(f->out_lo())},
                {"out_hi", as_vector(f->out_hi())}};
  }
  nlohmann::json ov = nlohmann::json::array();
  Index i = 0;
  for (const auto& [key, D] : overrides_) {
    const std::string file = "override_" + std::to_string(i++) + ".bin";
    write_matrix(dir / file, D);
    ov.push_back({{"parameter", key}, {"file", file}});
  }
  j["overrides"] = ov;
  std::ofstream out(dir / "closure.json");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write closure.json");
}

ClosureModel ClosureModel::load(const std::filesystem::path& dir, const ParameterDomain& domain) {
  std::ifstream in(dir / "closure.json");
  if (!in) throw IoError("missing closure.json in " + dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed closure.json: ") + e.what());
  }
  const auto& g = j.at("grid");
  const TimeGrid grid(g.at("t0").get<double>(), g.at("dt").get<double>(), g.at("K").get<Index>());
  const ImexScheme scheme = ImexScheme::from_id(j.at("scheme").get<std::string>());
  Matrix Vd = read_matrix(dir / "Vd.bin");
  ClosureModel m;
  if (j.at("surrogate").get<std::string>() == "rbf") {
    const auto& r = j.at("rbf");
    auto rbf = RbfInterpolant::from_parts(read_matrix(dir / "rbf_centers.bin"),
                                          read_matrix(dir / "rbf_weights.bin"), r.at("n_d").get<Index>(),
                                          r.at("n_t").get<Index>(), domain, r.at("condition").get<double>());
    m = ClosureModel(std::move(Vd), std::move(rbf), grid, scheme);
  } else {
    const auto& f = j.at("fnn");
    const auto widths = f.at("widths").get<std::vector<Index>>();
    std::vector<Index> hidden(widths.begin() + 1, widths.end() - 1);
    FnnModel net(widths.front(), hidden, widths.back(), 0);
    const auto& layers = f.at("layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      net.weights()[l] = read_matrix(dir / layers[l].at("W").get<std::string>());
      net.biases()[l] = read_matrix(dir / layers[l].at("b").get<std::string>());
    }
    net.set_normalization(as_eigen(f.at("in_lo").get<std::vector<double>>()),
                          as_eigen(f.at("in_hi").get<std::vector<double>>()),
                          as_eigen(f.at("out_lo").get<std::vector<double>>()),
                          as_eigen(f.at("out_hi").get<std::vector<double>>()));
    m = ClosureModel(std::move(Vd), std::move(net), grid, scheme);
  }
  for (const auto& o : j.at("overrides")) {
    m.update(as_eigen(o.at("parameter").get<std::vector<double>>()),
             read_matrix(dir / o.at("file").get<std::string>()));
  }
  return m;
}

ClosureModel train_closure(const DefectTensor& tensor, const ParameterDomain& domain,
                           const ClosureTrainOptions& options, ClosureTrainReport* report) {
  tensor.validate();
  const auto start = std::chrono::steady_clock::now();
  TwoStageSvd svd = two_stage_svd(tensor, options.tol_t, options.tol_p, options.truncation);
  ClosureModel model;
  std::vector<double> loss;
  if (options.surrogate == SurrogateKind::rbf) {
    auto rbf = RbfInterpolant::fit(svd.reduced, tensor.params, domain);
    model = ClosureModel(svd.Vd, std::move(rbf), tensor.grid, tensor.scheme);
  } else {
    const Index K = tensor.grid.K;
    const Index np = domain.dim();
    FnnData data;
    data.inputs.resize(1 + np, K * tensor.size());
    data.targets.resize(svd.Vd.cols(), K * tensor.size());
    for (Index i = 0; i < tensor.size(); ++i) {
      const auto& p = tensor.params[static_cast<std::size_t>(i)];
      for (Index k = 1; k <= K; ++k) {
        const Index col = i * K + (k - 1);
        data.inputs(0, col) = tensor.grid.t(k);
        data.inputs.col(col).tail(np) = p;
        data.targets.col(col) = svd.reduced[static_cast<std::size_t>(i)].col(k);
      }
    }
    FnnTrainResult trained = fnn_train(data, options.fnn);
    loss = std::move(trained.loss_history);
    model = ClosureModel(svd.Vd, std::move(trained.model), tensor.grid, tensor.scheme);
  }
  if (report) {
    report->svd = std::move(svd);
    report->fit_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report->fnn_loss = std::move(loss);
  }
  return model;
}

}  // namespace decrom
