#include "decrom/types.hpp"

#include <cmath>
#include <sstream>

namespace decrom {

TimeGrid::TimeGrid(double t0_, double dt_, Index K_) : t0(t0_), dt(dt_), K(K_) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  if (K < 0) throw DomainError("number of steps must be non-negative");
}

TimeGrid TimeGrid::from_span(double t0, double tK, double dt) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  const double steps = (tK - t0) / dt;
  const double K = std::round(steps);
  if (K < 0.0 || std::abs(steps - K) > 1e-9 * std::max(1.0, K)) {
    throw DomainError("time span is not a multiple of the time step");
  }
  return TimeGrid(t0, dt, static_cast<Index>(K));
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::blackbox: return "blackbox";
    case Provenance::imex1: return "imex1";
    case Provenance::imex2: return "imex2";
    case Provenance::crom: return "crom";
    case Provenance::rom: return "rom";
  }
  return "unknown";
}

std::string format_parameter(const Parameter& p) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Index i = 0; i < p.size(); ++i) {
    if (i) os << ", ";
    os << p[i];
  }
  os << ")";
  return os.str();
}

}  // namespace decrom
