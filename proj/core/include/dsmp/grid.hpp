// Uniform time grid aligned to the system delay.
//
// The step is dt = delta/m so that the delay is exactly m grid steps; a
// delayed argument at node k is read at node k - m with no interpolation.
// Node times are always derived as k*dt from the integer index, never
// accumulated, so t - delta lands on a node without floating drift.
#pragma once

#include <stdexcept>
#include <string>

namespace dsmp {

// Thrown when the horizon T is not an integer multiple of delta/m.
class alignment_error : public std::invalid_argument {
public:
  explicit alignment_error(const std::string& what) : std::invalid_argument(what) {}
};

struct TimeGrid {
  double horizon = 0.0;   // T
  double delay = 0.0;     // delta
  double dt = 0.0;        // delta / m
  int steps_per_delay = 0;  // m
  int steps = 0;            // n, evolution nodes are 0..n with node n at T

  double time(int k) const { return static_cast<double>(k) * dt; }
  int delay_shift() const { return steps_per_delay; }
  int node_count() const { return steps + 1; }
};

// T > 0, delta > 0, m >= 1; requires T to be an integer multiple of delta/m
// (tolerance 1e-12 relative). Violations raise alignment_error; nonpositive
// inputs raise std::domain_error.
TimeGrid build_grid(double horizon, double delay, int steps_per_delay);

}  // namespace dsmp
