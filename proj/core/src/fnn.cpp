#include "decrom/fnn.hpp"

#include <cmath>
#include <random>

namespace decrom {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void silu_inplace(Matrix& z, Matrix* dact) {
  if (dact) dact->resize(z.rows(), z.cols());
  for (Index i = 0; i < z.size(); ++i) {
    const double x = z.data()[i];
    const double s = sigmoid(x);
    if (dact) dact->data()[i] = s * (1.0 + x * (1.0 - s));
    z.data()[i] = x * s;
  }
}

double safe_range(double lo, double hi) { return hi > lo ? hi - lo : 1.0; }

}  // namespace

FnnModel::FnnModel(Index input_dim, const std::vector<Index>& hidden, Index output_dim,
                   std::uint64_t seed) {
  if (input_dim <= 0 || output_dim <= 0) throw DimensionError("network dimensions must be positive");
  widths_.push_back(input_dim);
  for (Index h : hidden) {
    if (h <= 0) throw DimensionError("hidden width must be positive");
    widths_.push_back(h);
  }
  widths_.push_back(output_dim);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const Index in = widths_[l], out = widths_[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-a, a);
    Matrix W(out, in);
    for (Index i = 0; i < W.size(); ++i) W.data()[i] = dist(rng);
    W_.push_back(W);
    b_.push_back(Vector::Zero(out));
  }
  in_lo_ = Vector::Zero(input_dim);
  in_hi_ = Vector::Ones(input_dim);
  out_lo_ = -Vector::Ones(output_dim);
  out_hi_ = Vector::Ones(output_dim);
}

void FnnModel::set_normalization(const Matrix& inputs, const Matrix& targets) {
  set_normalization(inputs.rowwise().minCoeff(), inputs.rowwise().maxCoeff(),
                    targets.rowwise().minCoeff(), targets.rowwise().maxCoeff());
}

void FnnModel::set_normalization(Vector in_lo, Vector in_hi, Vector out_lo, Vector out_hi) {
  if (in_lo.size() != input_dim() || out_lo.size() != output_dim()) {
    throw DimensionError("normalization ranges do not match the network");
  }
  in_lo_ = std::move(in_lo);
  in_hi_ = std::move(in_hi);
  out_lo_ = std::move(out_lo);
  out_hi_ = std::move(out_hi);
}

Matrix FnnModel::normalize_inputs(const Matrix& inputs) const {
  Matrix u(inputs.rows(), inputs.cols());
  for (Index i = 0; i < inputs.rows(); ++i) {
    u.row(i) = (inputs.row(i).array() - in_lo_[i]) / safe_range(in_lo_[i], in_hi_[i]);
  }
  return u;
}

Matrix FnnModel::normalize_targets(const Matrix& targets) const {
  Matrix y(targets.rows(), targets.cols());
  for (Index i = 0; i < targets.rows(); ++i) {
    const double lo = out_lo_[i], hi = out_hi_[i];
    if (hi > lo) {
      y.row(i) = 2.0 * (targets.row(i).array() - lo) / (hi - lo) - 1.0;
    } else {
      y.row(i) = targets.row(i).array() - lo;
    }
  }
  return y;
}

Matrix FnnModel::denormalize_outputs(const Matrix& outputs) const {
  Matrix y(outputs.rows(), outputs.cols());
  for (Index i = 0; i < outputs.rows(); ++i) {
    const double lo = out_lo_[i], hi = out_hi_[i];
    if (hi > lo) {
      y.row(i) = (outputs.row(i).array() + 1.0) * 0.5 * (hi - lo) + lo;
    } else {
      y.row(i) = outputs.row(i).array() + lo;
    }
  }
  return y;
}

Matrix FnnModel::forward(const Matrix& u) const {
  Matrix a = u;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    Matrix z = W_[l] * a;
    z.colwise() += b_[l];
    if (l + 1 < W_.size()) {
      silu_inplace(z, nullptr);
    } else {
      z = z.array().tanh();
    }
    a.swap(z);
  }
  return a;
}

Vector FnnModel::eval(const Vector& input) const {
  if (input.size() != input_dim()) throw DimensionError("network input dimension mismatch");
  return denormalize_outputs(forward(normalize_inputs(input))).col(0);
}

double FnnModel::loss(const Matrix& u, const Matrix& y) const {
  return 0.5 * (forward(u) - y).squaredNorm();
}

double FnnModel::loss_and_gradient(const Matrix& u, const Matrix& y, std::vector<Matrix>& gW,
                                   std::vector<Vector>& gb) const {
  const std::size_t L = W_.size();
  std::vector<Matrix> acts(L + 1), dacts(L);
  acts[0] = u;
  for (std::size_t l = 0; l < L; ++l) {
    Matrix z = W_[l] * acts[l];
    z.colwise() += b_[l];
    if (l + 1 < L) {
      silu_inplace(z, &dacts[l]);
    } else {
      z = z.array().tanh();
      dacts[l] = 1.0 - z.array().square();
    }
    acts[l + 1] = std::move(z);
  }
  Matrix delta = acts[L] - y;
  const double value = 0.5 * delta.squaredNorm();
  gW.resize(L);
  gb.resize(L);
  for (std::size_t l = L; l-- > 0;) {
    delta.array() *= dacts[l].array();
    gW[l].noalias() = delta * acts[l].transpose();
    gb[l] = delta.rowwise().sum();
    if (l > 0) {
      Matrix prev = W_[l].transpose() * delta;
      delta.swap(prev);
    }
  }
  return value;
}

Index FnnModel::num_parameters() const {
  Index n = 0;
  for (std::size_t l = 0; l < W_.size(); ++l) n += W_[l].size() + b_[l].size();
  return n;
}

double& FnnModel::parameter(Index i) {
  for (std::size_t l = 0; l < W_.size(); ++l) {
    if (i < W_[l].size()) return W_[l].data()[i];
    i -= W_[l].size();
  }
  for (std::size_t l = 0; l < b_.size(); ++l) {
    if (i < b_[l].size()) return b_[l].data()[i];
    i -= b_[l].size();
  }
  throw DimensionError("network parameter index out of range");
}

FnnTrainResult fnn_train(const FnnData& data, const FnnHyper& hyper) {
  if (data.inputs.cols() != data.targets.cols() || data.inputs.cols() == 0) {
    throw DimensionError("training inputs and targets must have the same positive sample count");
  }
  if (!(hyper.learning_rate > 0.0) || hyper.epochs < 0) throw ConfigError("invalid FNN hyperparameters");

  FnnTrainResult res;
  res.model = FnnModel(data.inputs.rows(), hyper.hidden, data.targets.rows(), hyper.seed);
  FnnModel& net = res.model;
  net.set_normalization(data.inputs, data.targets);
  const Matrix u = net.normalize_inputs(data.inputs);
  const Matrix y = net.normalize_targets(data.targets);

  const std::size_t L = net.weights().size();
  std::vector<Matrix> mW(L), vW(L), gW;
  std::vector<Vector> mb(L), vb(L), gb;
  for (std::size_t l = 0; l < L; ++l) {
    mW[l] = Matrix::Zero(net.weights()[l].rows(), net.weights()[l].cols());
    vW[l] = mW[l];
    mb[l] = Vector::Zero(net.biases()[l].size());
    vb[l] = mb[l];
  }
  res.loss_history.reserve(static_cast<std::size_t>(hyper.epochs));
  double b1t = 1.0, b2t = 1.0;
  for (Index epoch = 0; epoch < hyper.epochs; ++epoch) {
    const double value = net.loss_and_gradient(u, y, gW, gb);
    if (!std::isfinite(value)) {
      throw DivergenceError("FNN loss became NaN at epoch " + std::to_string(epoch) +
                            "; try a smaller learning rate");
    }
    res.loss_history.push_back(value);
    b1t *= hyper.beta1;
    b2t *= hyper.beta2;
    const double lr = hyper.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
    for (std::size_t l = 0; l < L; ++l) {
      mW[l] = hyper.beta1 * mW[l] + (1.0 - hyper.beta1) * gW[l];
      vW[l] = hyper.beta2 * vW[l] + (1.0 - hyper.beta2) * gW[l].cwiseAbs2();
      net.weights()[l].array() -= lr * mW[l].array() / (vW[l].array().sqrt() + hyper.epsilon);
      mb[l] = hyper.beta1 * mb[l] + (1.0 - hyper.beta1) * gb[l];
      vb[l] = hyper.beta2 * vb[l] + (1.0 - hyper.beta2) * gb[l].cwiseAbs2();
      net.biases()[l].array() -= lr * mb[l].array() / (vb[l].array().sqrt() + hyper.epsilon);
    }
  }
  res.final_loss = net.loss(u, y);
  if (!std::isfinite(res.final_loss)) throw DivergenceError("FNN loss became NaN; try a smaller learning rate");
  return res;
}

}  // namespace decrom
