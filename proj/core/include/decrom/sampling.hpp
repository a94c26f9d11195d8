#pragma once

#include "decrom/models.hpp"
#include "decrom/types.hpp"

#include <cstdint>
#include <vector>

namespace decrom {

/// count points along a one-dimensional domain, spaced per the axis scale.
std::vector<Parameter> line_samples(const ParameterDomain& domain, Index count);

/// Tensor grid with per_axis[i] points on axis i (axis 0 varies fastest).
std::vector<Parameter> grid_samples(const ParameterDomain& domain, const std::vector<Index>& per_axis);

struct SampleSplit {
  std::vector<Parameter> train;
  std::vector<Parameter> test;
};

/// Seeded uniform shuffle, then the first round(train_fraction * n) samples form the training set.
SampleSplit split_samples(std::vector<Parameter> samples, double train_fraction, std::uint64_t seed);

/// Indices of d_s training parameters used for the defect tensor.
/// One-dimensional domains take evenly spaced ranks of the sorted normalized coordinate;
/// higher dimensions use farthest-point selection in normalized coordinates.
std::vector<Index> select_defect_indices(const std::vector<Parameter>& train,
                                         const ParameterDomain& domain, Index d_s);

}  // namespace decrom
