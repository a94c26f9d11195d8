#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace decrom {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Parameter = Eigen::VectorXd;

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual std::string kind() const { return "error"; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  std::string kind() const override { return "domain_violation"; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
  std::string kind() const override { return "dimension_mismatch"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  std::string kind() const override { return "config"; }
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double last_good_time)
      : Error(what + " (last good time " + std::to_string(last_good_time) + ")"),
        last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }
  std::string kind() const override { return "integration_failure"; }

 private:
  double last_good_time_;
};

class FactorizationError : public Error {
 public:
  using Error::Error;
  std::string kind() const override { return "factorization"; }
};

class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double condition)
      : Error(what + " (condition estimate " + std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const { return condition_; }
  std::string kind() const override { return "conditioning"; }

 private:
  double condition_;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
  std::string kind() const override { return "divergence"; }
};

class EstimatorError : public Error {
 public:
  using Error::Error;
  std::string kind() const override { return "estimator"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  std::string kind() const override { return "io"; }
};

/// Uniform grid t^k = t0 + k*dt, k = 0..K.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.01;
  Index K = 0;

  TimeGrid() = default;
  TimeGrid(double t0_, double dt_, Index K_);

  /// Builds a grid from its end points; throws when (tK - t0) is not a multiple of dt.
  static TimeGrid from_span(double t0, double tK, double dt);

  double t(Index k) const { return t0 + static_cast<double>(k) * dt; }
  double tK() const { return t(K); }
  Index size() const { return K + 1; }

  bool operator==(const TimeGrid& other) const {
    return t0 == other.t0 && dt == other.dt && K == other.K;
  }
};

enum class Provenance { blackbox, imex1, imex2, crom, rom };

std::string to_string(Provenance p);

struct Trajectory {
  Matrix states;  // N x N_t, column k is the state at t^k
  TimeGrid grid;
  Parameter parameter;
  Provenance provenance = Provenance::blackbox;

  Index dim() const { return states.rows(); }
  bool finite() const { return states.allFinite(); }
};

/// Key usable in ordered maps; exact comparison of parameter entries.
using ParameterKey = std::vector<double>;

inline ParameterKey key_of(const Parameter& p) {
  return ParameterKey(p.data(), p.data() + p.size());
}

std::string format_parameter(const Parameter& p);

}  // namespace decrom
