#pragma once

#include "decrom/types.hpp"

#include <cstdint>
#include <vector>

namespace decrom {

struct FnnHyper {
  std::vector<Index> hidden{16, 64, 64};
  Index epochs = 2000;
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

/// Training data in physical units: inputs (1+p) x M rows (t, p...), targets n_d x M.
struct FnnData {
  Matrix inputs;
  Matrix targets;
};

/// Fully connected network, SiLU hidden layers and a Tanh output layer. Inputs are
/// min-max scaled to [0,1] and outputs to [-1,1] using the training data ranges.
class FnnModel {
 public:
  FnnModel() = default;
  FnnModel(Index input_dim, const std::vector<Index>& hidden, Index output_dim, std::uint64_t seed);

  Index input_dim() const { return widths_.front(); }
  Index output_dim() const { return widths_.back(); }
  const std::vector<Index>& widths() const { return widths_; }
  std::vector<Matrix>& weights() { return W_; }
  std::vector<Vector>& biases() { return b_; }
  const std::vector<Matrix>& weights() const { return W_; }
  const std::vector<Vector>& biases() const { return b_; }

  void set_normalization(const Matrix& inputs, const Matrix& targets);
  void set_normalization(Vector in_lo, Vector in_hi, Vector out_lo, Vector out_hi);
  const Vector& in_lo() const { return in_lo_; }
  const Vector& in_hi() const { return in_hi_; }
  const Vector& out_lo() const { return out_lo_; }
  const Vector& out_hi() const { return out_hi_; }

  Matrix normalize_inputs(const Matrix& inputs) const;
  Matrix normalize_targets(const Matrix& targets) const;
  Matrix denormalize_outputs(const Matrix& outputs) const;

  /// Network output for normalized inputs (one column per sample).
  Matrix forward(const Matrix& u) const;
  /// Physical-unit prediction for one input vector (t, p...).
  Vector eval(const Vector& input) const;

  /// L = 1/2 sum ||net(u) - y||^2 on normalized data; fills gradients.
  double loss_and_gradient(const Matrix& u, const Matrix& y, std::vector<Matrix>& gW,
                           std::vector<Vector>& gb) const;
  double loss(const Matrix& u, const Matrix& y) const;

  /// Flat view over all weights then biases, layer by layer.
  Index num_parameters() const;
  double& parameter(Index i);

 private:
  std::vector<Index> widths_;
  std::vector<Matrix> W_;
  std::vector<Vector> b_;
  Vector in_lo_, in_hi_, out_lo_, out_hi_;
};

struct FnnTrainResult {
  FnnModel model;
  std::vector<double> loss_history;
  double final_loss = 0.0;
};

/// Full-batch Adam on L = 1/2 sum ||.||^2. Throws DivergenceError on a NaN loss.
FnnTrainResult fnn_train(const FnnData& data, const FnnHyper& hyper);

}  // namespace decrom
