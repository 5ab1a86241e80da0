#include "doctest.h"
#include "dsmp/noise.hpp"

#include <cmath>

using namespace dsmp;

namespace {
const TimeGrid kGrid = build_grid(1.0, 0.5, 5);
}

TEST_CASE("identical seeds reproduce identical paths") {
  const SeedSpec seed{123456789ULL, 42ULL};
  const MarkDistribution marks = MarkDistribution::uniform(-1.0, 1.0);
  const NoisePath a = sample_noise(kGrid, seed, 2.0, marks);
  const NoisePath b = sample_noise(kGrid, seed, 2.0, marks);
  REQUIRE(a.dB.size() == b.dB.size());
  for (std::size_t k = 0; k < a.dB.size(); ++k) {
    CHECK(a.dB[k] == b.dB[k]);
    CHECK(a.dW[k] == b.dW[k]);
  }
  REQUIRE(a.jumps.size() == b.jumps.size());
  for (std::size_t j = 0; j < a.jumps.size(); ++j) {
    CHECK(a.jumps[j].time == b.jumps[j].time);
    CHECK(a.jumps[j].mark == b.jumps[j].mark);
  }
}

TEST_CASE("distinct path indices decorrelate") {
  const NoisePath a = sample_noise(kGrid, SeedSpec{1ULL, 0ULL}, 0.0, MarkDistribution::constant(1));
  const NoisePath b = sample_noise(kGrid, SeedSpec{1ULL, 1ULL}, 0.0, MarkDistribution::constant(1));
  int equal = 0;
  for (std::size_t k = 0; k < a.dB.size(); ++k) {
    if (a.dB[k] == b.dB[k]) ++equal;
  }
  CHECK(equal == 0);
}

TEST_CASE("zero intensity gives no jumps, positive intensity the right count") {
  CHECK(sample_noise(kGrid, SeedSpec{9ULL, 0ULL}, 0.0, MarkDistribution::constant(1)).jumps.empty());

  const double lambda = 3.0;
  const int paths = 4000;
  double total = 0.0;
  for (int i = 0; i < paths; ++i) {
    const NoisePath p = sample_noise(kGrid, SeedSpec{9ULL, static_cast<std::uint64_t>(i)}, lambda,
                                     MarkDistribution::uniform(-1.0, 1.0));
    total += static_cast<double>(p.jumps.size());
    double prev = 0.0;
    for (const auto& ev : p.jumps) {
      CHECK(ev.time > prev);
      CHECK(ev.time <= kGrid.horizon);
      CHECK(ev.mark >= -1.0);
      CHECK(ev.mark <= 1.0);
      CHECK(ev.step >= 0);
      CHECK(ev.step < kGrid.steps);
      prev = ev.time;
    }
  }
  const double mean = total / paths;
  const double se = std::sqrt(lambda * kGrid.horizon / paths);
  CHECK(std::abs(mean - lambda * kGrid.horizon) < 5.0 * se);
}

TEST_CASE("increment statistics match the grid step") {
  const int paths = 20000;
  double sum = 0.0, sumsq = 0.0;
  long count = 0;
  double total_sum = 0.0;
  for (int i = 0; i < paths; ++i) {
    const NoisePath p = sample_noise(kGrid, SeedSpec{2024ULL, static_cast<std::uint64_t>(i)}, 0.0,
                                     MarkDistribution::constant(1));
    double path_total = 0.0;
    for (double v : p.dB) {
      sum += v;
      sumsq += v * v;
      ++count;
      path_total += v;
    }
    total_sum += path_total;
  }
  const double var = (sumsq - sum * sum / static_cast<double>(count)) /
                     static_cast<double>(count - 1);
  CHECK(std::abs(var - kGrid.dt) < 0.05 * kGrid.dt);

  // Sample mean of the path total (variance T) within 4 standard errors.
  const double mean_total = total_sum / paths;
  CHECK(std::abs(mean_total) < 4.0 * std::sqrt(kGrid.horizon / paths));
}

TEST_CASE("mark distribution moments") {
  const MarkDistribution u = MarkDistribution::uniform(-1.0, 1.0);
  CHECK(u.mean_of([](double z) { return z; }) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(u.mean_of([](double z) { return z * z; }) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const MarkDistribution c = MarkDistribution::constant(2.5);
  CHECK(c.mean_of([](double z) { return z * z; }) == doctest::Approx(6.25));
  CHECK_THROWS_AS(sample_noise(kGrid, SeedSpec{1ULL, 0ULL}, -1.0, c), std::domain_error);
}
