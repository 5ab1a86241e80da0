#include "dsmp/grid.hpp"

#include <cmath>

namespace dsmp {

TimeGrid build_grid(double horizon, double delay, int steps_per_delay) {
  if (horizon <= 0.0) throw std::domain_error("build_grid: horizon must be positive");
  if (delay <= 0.0) throw std::domain_error("build_grid: delay must be positive");
  if (steps_per_delay < 1) throw std::domain_error("build_grid: steps_per_delay must be >= 1");

  const double dt = delay / static_cast<double>(steps_per_delay);
  const double steps_real = horizon / dt;
  const double steps_rounded = std::round(steps_real);
  if (std::abs(steps_real - steps_rounded) > 1e-12 * std::max(1.0, steps_real)) {
    throw alignment_error("build_grid: horizon " + std::to_string(horizon) +
                          " is not an integer multiple of dt = " + std::to_string(dt));
  }
  const int steps = static_cast<int>(steps_rounded);
  if (steps < steps_per_delay) {
    throw alignment_error("build_grid: horizon shorter than the delay");
  }

  TimeGrid g;
  g.horizon = horizon;
  g.delay = delay;
  g.dt = dt;
  g.steps_per_delay = steps_per_delay;
  g.steps = steps;
  return g;
}

}  // namespace dsmp
