// Driving noise for one simulated path: two Gaussian increment arrays and a
// compound Poisson jump list, all generated from a per-path deterministic
// stream so ensembles are reproducible under any parallel schedule.
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "dsmp/grid.hpp"

namespace dsmp {

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

// Finite-activity mark law for the Poisson random measure. The abstract mark
// space is specialised to scalar marks: either a point mass or uniform[a,b].
struct MarkDistribution {
  enum class Kind { constant, uniform };
  Kind kind = Kind::constant;
  double a = 1.0;  // constant value, or lower bound for uniform
  double b = 1.0;  // upper bound for uniform

  static MarkDistribution constant(double value) {
    return MarkDistribution{Kind::constant, value, value};
  }
  static MarkDistribution uniform(double lo, double hi) {
    return MarkDistribution{Kind::uniform, lo, hi};
  }

  // E[f(mark)] by closed form (constant) or Gauss-Legendre quadrature.
  double mean_of(const std::function<double(double)>& f) const;
  double sample(std::mt19937_64& eng) const;
};

struct JumpEvent {
  int step = 0;     // index k with jump time in (t_k, t_{k+1}]
  double time = 0.0;
  double mark = 0.0;
};

struct NoisePath {
  std::vector<double> dB;        // n Brownian increments, variance dt
  std::vector<double> dW;        // n independent Brownian increments, variance dt
  std::vector<JumpEvent> jumps;  // strictly increasing times in (0, T]
};

// Deterministic per-path engine from (master_seed, path_index).
std::mt19937_64 make_path_engine(const SeedSpec& seed);

// Draw order is fixed (dB, dW, jump count, jump times, marks) so a path is
// bit-identical however the consumer uses it. jump_intensity is the Poisson
// rate; zero yields an empty jump list.
NoisePath sample_noise(const TimeGrid& grid, const SeedSpec& seed, double jump_intensity,
                       const MarkDistribution& marks);

}  // namespace dsmp
