#pragma once

#include "decrom/greedy.hpp"
#include "decrom/models.hpp"
#include "decrom/sampling.hpp"
#include "decrom/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace decrom {

/// Experiment settings read from an INI file. Sections and keys are listed in
/// configs/README.md; unknown sections or keys are rejected.
struct ExperimentConfig {
  ModelOptions model;
  double t0 = 0.0;
  double t_end = 1.0;
  double dt = 0.01;

  Index samples = 100;             // one-dimensional domains
  std::vector<Index> sample_grid;  // per-axis counts for higher dimensions
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  Index d_s = 16;

  int algorithm = 2;
  GreedyOptions greedy;

  Parameter demo_parameter;
  Index demo_basis = 12;

  std::string output_dir = "out";

  TimeGrid grid() const { return TimeGrid::from_span(t0, t_end, dt); }
  /// Full parameter sample set before the split.
  std::vector<Parameter> samples_for(const ParameterDomain& domain) const;
  void validate() const;
  /// Canonical INI text of every setting.
  std::string canonical() const;
  /// Hash of the canonical text without the [output] section; tags emitted files.
  std::string hash() const;
};

/// Per-model defaults (heat, burgers, fhn).
ExperimentConfig default_config(const std::string& model_id);

/// Parses INI text: [model] id selects the defaults, the remaining keys override them.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace decrom
