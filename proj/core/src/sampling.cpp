#include "decrom/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace decrom {

std::vector<Parameter> line_samples(const ParameterDomain& domain, Index count) {
  if (domain.dim() != 1) throw DimensionError("line_samples needs a one-dimensional domain");
  return grid_samples(domain, {count});
}

std::vector<Parameter> grid_samples(const ParameterDomain& domain, const std::vector<Index>& per_axis) {
  const Index d = domain.dim();
  if (static_cast<Index>(per_axis.size()) != d) throw DimensionError("one count per parameter axis expected");
  Index total = 1;
  for (Index c : per_axis) {
    if (c < 1) throw ConfigError("sample counts must be positive");
    total *= c;
  }
  std::vector<Parameter> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<Index> idx(static_cast<std::size_t>(d), 0);
  for (Index s = 0; s < total; ++s) {
    Vector u(d);
    for (Index i = 0; i < d; ++i) {
      const Index c = per_axis[static_cast<std::size_t>(i)];
      u[i] = c == 1 ? 0.5 : static_cast<double>(idx[static_cast<std::size_t>(i)]) / static_cast<double>(c - 1);
    }
    Parameter p = domain.denormalize(u);
    // Pin the endpoints exactly so the log round-trip cannot leave the box.
    for (Index i = 0; i < d; ++i) {
      const auto& ax = domain.axes()[static_cast<std::size_t>(i)];
      p[i] = std::clamp(p[i], ax.lo, ax.hi);
    }
    out.push_back(std::move(p));
    for (Index i = 0; i < d; ++i) {
      auto& j = idx[static_cast<std::size_t>(i)];
      if (++j < per_axis[static_cast<std::size_t>(i)]) break;
      j = 0;
    }
  }
  return out;
}

SampleSplit split_samples(std::vector<Parameter> samples, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw ConfigError("train fraction must lie in (0, 1]");
  std::mt19937_64 rng(seed);
  std::shuffle(samples.begin(), samples.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(samples.size())));
  SampleSplit s;
  s.train.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(samples.begin() + static_cast<std::ptrdiff_t>(n_train), samples.end());
  return s;
}

std::vector<Index> select_defect_indices(const std::vector<Parameter>& train,
                                         const ParameterDomain& domain, Index d_s) {
  const auto n = static_cast<Index>(train.size());
  if (d_s < 1 || d_s > n) throw ConfigError("d_s must lie in [1, |training set|]");
  std::vector<Vector> u;
  u.reserve(train.size());
  for (const auto& p : train) u.push_back(domain.normalize(p));

  std::vector<Index> chosen;
  if (domain.dim() == 1) {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return u[static_cast<std::size_t>(a)][0] < u[static_cast<std::size_t>(b)][0]; });
    for (Index i = 0; i < d_s; ++i) {
      const Index r = d_s == 1 ? 0 : static_cast<Index>(std::lround(static_cast<double>(i) * static_cast<double>(n - 1) /
                                                                   static_cast<double>(d_s - 1)));
      chosen.push_back(order[static_cast<std::size_t>(r)]);
    }
  } else {
    // Start at the point closest to the lower corner.
    Index first = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      const double s = u[static_cast<std::size_t>(i)].squaredNorm();
      if (s < best) {
        best = s;
        first = i;
      }
    }
    chosen.push_back(first);
    std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    while (static_cast<Index>(chosen.size()) < d_s) {
      const Vector& last = u[static_cast<std::size_t>(chosen.back())];
      Index arg = -1;
      double far = -1.0;
      for (Index i = 0; i < n; ++i) {
        auto& di = dist[static_cast<std::size_t>(i)];
        di = std::min(di, (u[static_cast<std::size_t>(i)] - last).squaredNorm());
        if (di > far) {
          far = di;
          arg = i;
        }
      }
      chosen.push_back(arg);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  if (static_cast<Index>(chosen.size()) != d_s) throw ConfigError("defect sample selection produced duplicates");
  return chosen;
}

}  // namespace decrom
