#include "dsmp/noise.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dsmp {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// 16-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
constexpr std::array<double, 8> kGlWeights = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

}  // namespace

double MarkDistribution::mean_of(const std::function<double(double)>& f) const {
  if (kind == Kind::constant) return f(a);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
    acc += kGlWeights[i] * (f(mid + half * kGlNodes[i]) + f(mid - half * kGlNodes[i]));
  }
  return 0.5 * acc;  // weights sum to 2 over [-1,1]
}

double MarkDistribution::sample(std::mt19937_64& eng) const {
  if (kind == Kind::constant) return a;
  std::uniform_real_distribution<double> u(a, b);
  return u(eng);
}

std::mt19937_64 make_path_engine(const SeedSpec& seed) {
  std::uint64_t s = seed.master_seed;
  std::uint64_t h1 = splitmix64(s);
  s ^= (seed.path_index + 0x9e3779b97f4a7c15ULL) * 0xff51afd7ed558ccdULL;
  std::uint64_t h2 = splitmix64(s);
  std::uint64_t h3 = splitmix64(s);
  std::uint64_t h4 = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(h1), static_cast<std::uint32_t>(h1 >> 32),
                    static_cast<std::uint32_t>(h2), static_cast<std::uint32_t>(h2 >> 32),
                    static_cast<std::uint32_t>(h3), static_cast<std::uint32_t>(h3 >> 32),
                    static_cast<std::uint32_t>(h4), static_cast<std::uint32_t>(h4 >> 32)};
  return std::mt19937_64(seq);
}

NoisePath sample_noise(const TimeGrid& grid, const SeedSpec& seed, double jump_intensity,
                       const MarkDistribution& marks) {
  if (jump_intensity < 0.0) throw std::domain_error("sample_noise: negative jump intensity");

  auto eng = make_path_engine(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(grid.dt));

  NoisePath path;
  path.dB.resize(grid.steps);
  path.dW.resize(grid.steps);
  for (int k = 0; k < grid.steps; ++k) path.dB[k] = gauss(eng);
  for (int k = 0; k < grid.steps; ++k) path.dW[k] = gauss(eng);

  if (jump_intensity > 0.0) {
    std::poisson_distribution<int> pois(jump_intensity * grid.horizon);
    const int count = pois(eng);
    std::uniform_real_distribution<double> utime(0.0, grid.horizon);
    std::vector<double> times(count);
    for (int j = 0; j < count; ++j) {
      double t = utime(eng);
      times[j] = (t == 0.0) ? grid.horizon : t;  // jumps live in (0, T]
    }
    std::sort(times.begin(), times.end());
    for (int j = 1; j < count; ++j) {
      if (times[j] <= times[j - 1]) {
        times[j] = std::nextafter(times[j - 1], grid.horizon + 1.0);
      }
    }
    path.jumps.reserve(count);
    for (int j = 0; j < count; ++j) {
      JumpEvent ev;
      ev.time = times[j];
      ev.step = std::min(grid.steps - 1, static_cast<int>(std::ceil(times[j] / grid.dt)) - 1);
      if (ev.step < 0) ev.step = 0;
      ev.mark = marks.sample(eng);
      path.jumps.push_back(ev);
    }
  }
  return path;
}

}  // namespace dsmp
