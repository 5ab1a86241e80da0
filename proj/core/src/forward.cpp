#include "dsmp/forward.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "dsmp/csv.hpp"

namespace dsmp {

namespace {
std::atomic<int> g_threads{0};  // 0 = auto
}

void set_simulation_threads(int threads) { g_threads.store(threads); }

int simulation_threads() {
  int t = g_threads.load();
  if (t > 0) return t;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

// Static chunking over [0, n); results must land in per-index slots so the
// outcome is identical for any thread count.
void parallel_paths(int n, const std::function<void(int)>& body) {
  const int threads = std::min(simulation_threads(), n > 0 ? n : 1);
  if (threads <= 1 || n < 64) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  std::atomic<int> next{0};
  constexpr int kChunk = 64;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int start = next.fetch_add(kChunk);
        if (start >= n) return;
        const int stop = std::min(n, start + kChunk);
        for (int i = start; i < stop; ++i) body(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

double delayed_state(const Model& m, const std::vector<double>& x, const TimeGrid& grid, int k) {
  const int kd = k - grid.steps_per_delay;
  if (kd >= 0) return x[static_cast<std::size_t>(kd)];
  return m.xi ? m.xi(grid.time(kd)) : 0.0;
}

}  // namespace

double ForwardEnsemble::x_delayed(const Model& m, int path, int k) const {
  return delayed_state(m, paths[static_cast<std::size_t>(path)].x, grid, k);
}

PathState simulate_path_with_policy(
    const Model& m, const std::function<double(int k, const PathState& so_far)>& policy,
    const Segment& control_history, const TimeGrid& grid, const NoisePath& noise, Measure measure,
    std::vector<double>* control_out) {
  const int n = grid.steps;
  PathState p;
  p.x.resize(static_cast<std::size_t>(n) + 1);
  p.Y.resize(static_cast<std::size_t>(n) + 1);
  p.Z.resize(static_cast<std::size_t>(n) + 1);
  p.dB = noise.dB;
  p.dW.resize(static_cast<std::size_t>(n));
  p.dY.resize(static_cast<std::size_t>(n));
  p.jumps = noise.jumps;

  p.x[0] = m.xi ? m.xi(0.0) : 0.0;
  p.Y[0] = 0.0;
  p.Z[0] = 1.0;

  std::vector<double> applied(static_cast<std::size_t>(n) + 1, 0.0);

  const double dt = grid.dt;
  const double lambda = m.jump_intensity;

  std::size_t jump_cursor = 0;
  for (int k = 0; k < n; ++k) {
    const double t = grid.time(k);
    const double xk = p.x[static_cast<std::size_t>(k)];
    const double xd = delayed_state(m, p.x, grid, k);
    const double u = policy(k, p);
    applied[static_cast<std::size_t>(k)] = u;
    const int kd = k - grid.steps_per_delay;
    const double ud = kd >= 0 ? applied[static_cast<std::size_t>(kd)]
                              : (control_history ? control_history(grid.time(kd)) : 0.0);

    const double h = m.obs.h(t, xk);
    double dW, dY;
    if (measure == Measure::physical) {
      dW = noise.dW[static_cast<std::size_t>(k)];
      dY = h * dt + dW;
    } else {
      dY = noise.dW[static_cast<std::size_t>(k)];
      dW = dY - h * dt;
    }
    p.dW[static_cast<std::size_t>(k)] = dW;
    p.dY[static_cast<std::size_t>(k)] = dY;

    const double drift = tilde_b(m, t, xk, xd, u, ud);
    const double sig = m.diffusion_b.value(t, xk, xd, u, ud);
    const double the = m.diffusion_w.value(t, xk, xd, u, ud);

    double jump_sum = 0.0;
    while (jump_cursor < p.jumps.size() && p.jumps[jump_cursor].step == k) {
      jump_sum += m.jump.value(t, xk, xd, u, ud, p.jumps[jump_cursor].mark);
      ++jump_cursor;
    }
    double compensator = 0.0;
    if (lambda > 0.0) {
      compensator = lambda * dt *
                    m.marks.mean_of([&](double z) { return m.jump.value(t, xk, xd, u, ud, z); });
    }

    const double x_next = xk + drift * dt + sig * noise.dB[static_cast<std::size_t>(k)] +
                          the * dY + jump_sum - compensator;
    if (!std::isfinite(x_next)) {
      throw simulation_error("simulate_path: state became non-finite", k);
    }
    p.x[static_cast<std::size_t>(k) + 1] = x_next;
    p.Y[static_cast<std::size_t>(k) + 1] = p.Y[static_cast<std::size_t>(k)] + dY;
    // Log-Euler keeps Z positive and is exact for constant h.
    p.Z[static_cast<std::size_t>(k) + 1] =
        p.Z[static_cast<std::size_t>(k)] * std::exp(h * dY - 0.5 * h * h * dt);
    if (!std::isfinite(p.Z[static_cast<std::size_t>(k) + 1])) {
      throw simulation_error("simulate_path: density became non-finite", k);
    }
  }
  if (n >= 0 && static_cast<std::size_t>(n) < applied.size()) {
    // The terminal node never steps; keep the last applied value for export.
    applied[static_cast<std::size_t>(n)] = n > 0 ? applied[static_cast<std::size_t>(n) - 1] : 0.0;
  }
  if (control_out) *control_out = std::move(applied);
  return p;
}

PathState simulate_path(const Model& m, const Control& control, const TimeGrid& grid,
                        const NoisePath& noise, Measure measure) {
  return simulate_path_with_policy(
      m, [&](int k, const PathState&) { return control.at(0, k, grid); }, control.eta, grid,
      noise, measure, nullptr);
}

ObservationDensity simulate_observation_and_density(const Model& m,
                                                    const std::vector<double>& x_path,
                                                    const TimeGrid& grid, const NoisePath& noise,
                                                    Measure measure) {
  if (static_cast<int>(x_path.size()) != grid.steps + 1) {
    throw std::invalid_argument("simulate_observation_and_density: path does not fit the grid");
  }
  ObservationDensity out;
  out.Y.assign(static_cast<std::size_t>(grid.steps) + 1, 0.0);
  out.Z.assign(static_cast<std::size_t>(grid.steps) + 1, 1.0);
  for (int k = 0; k < grid.steps; ++k) {
    const double h = m.obs.h(grid.time(k), x_path[static_cast<std::size_t>(k)]);
    const double dY = measure == Measure::physical
                          ? h * grid.dt + noise.dW[static_cast<std::size_t>(k)]
                          : noise.dW[static_cast<std::size_t>(k)];
    out.Y[static_cast<std::size_t>(k) + 1] = out.Y[static_cast<std::size_t>(k)] + dY;
    out.Z[static_cast<std::size_t>(k) + 1] =
        out.Z[static_cast<std::size_t>(k)] * std::exp(h * dY - 0.5 * h * h * grid.dt);
  }
  return out;
}

namespace {

// simulate_path with a per-path control column (feedback controls).
PathState simulate_path_indexed(const Model& m, const Control& control, int path,
                                const TimeGrid& grid, const NoisePath& noise, Measure measure) {
  return simulate_path_with_policy(
      m, [&](int k, const PathState&) { return control.at(path, k, grid); }, control.eta, grid,
      noise, measure, nullptr);
}

}  // namespace

ForwardEnsemble simulate_ensemble(const Model& m, const Control& control, const TimeGrid& grid,
                                  std::uint64_t master_seed, int n_paths, Measure measure) {
  if (n_paths <= 0) throw std::domain_error("simulate_ensemble: need at least one path");
  ForwardEnsemble ens;
  ens.grid = grid;
  ens.measure = measure;
  ens.master_seed = master_seed;
  ens.paths.resize(static_cast<std::size_t>(n_paths));
  parallel_paths(n_paths, [&](int i) {
    const NoisePath noise = sample_noise(
        grid, SeedSpec{master_seed, static_cast<std::uint64_t>(i)}, m.jump_intensity, m.marks);
    ens.paths[static_cast<std::size_t>(i)] =
        simulate_path_indexed(m, control, i, grid, noise, measure);
  });
  return ens;
}

void for_each_path(const Model& m, const Control& control, const TimeGrid& grid,
                   std::uint64_t master_seed, int n_paths, Measure measure,
                   const std::function<void(int, const PathState&)>& visit) {
  for (int i = 0; i < n_paths; ++i) {
    const NoisePath noise = sample_noise(
        grid, SeedSpec{master_seed, static_cast<std::uint64_t>(i)}, m.jump_intensity, m.marks);
    visit(i, simulate_path_indexed(m, control, i, grid, noise, measure));
  }
}

std::vector<double> simulate_gamma(const Model& m, const PathState& path,
                                   const std::vector<double>& x1, const TimeGrid& grid) {
  const int n = grid.steps;
  std::vector<double> gamma(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 0; k < n; ++k) {
    const double hx = m.obs.hx(grid.time(k), path.x[static_cast<std::size_t>(k)]);
    gamma[static_cast<std::size_t>(k) + 1] =
        gamma[static_cast<std::size_t>(k)] +
        hx * x1[static_cast<std::size_t>(k)] * path.dW[static_cast<std::size_t>(k)];
  }
  return gamma;
}

std::vector<double> pathwise_cost(const Model& m, const Control& control,
                                  const ForwardEnsemble& ens) {
  const int n = ens.grid.steps;
  const double dt = ens.grid.dt;
  const bool weighted = ens.measure == Measure::reference;

  std::vector<double> out(static_cast<std::size_t>(ens.n_paths()));
  for (int i = 0; i < ens.n_paths(); ++i) {
    const PathState& p = ens.paths[static_cast<std::size_t>(i)];
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 0.5 : 1.0;  // trapezoid
      const double u = control.at(i, k, ens.grid);
      const double ud = control.at(i, k - ens.grid.steps_per_delay, ens.grid);
      const double run = m.cost.value(ens.grid.time(k), p.x[static_cast<std::size_t>(k)], u, ud);
      const double z = weighted ? p.Z[static_cast<std::size_t>(k)] : 1.0;
      acc += w * z * run * dt;
    }
    const double zT = weighted ? p.Z[static_cast<std::size_t>(n)] : 1.0;
    acc += zT * m.terminal.value(p.x[static_cast<std::size_t>(n)]);
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

CostEstimate estimate_cost(const Model& m, const Control& control, const ForwardEnsemble& ens) {
  if (ens.paths.empty()) throw std::domain_error("estimate_cost: empty ensemble");
  const std::vector<double> per_path = pathwise_cost(m, control, ens);
  double mean = 0.0;
  for (double v : per_path) mean += v;
  mean /= static_cast<double>(per_path.size());
  double var = 0.0;
  for (double v : per_path) var += (v - mean) * (v - mean);
  var = per_path.size() > 1 ? var / static_cast<double>(per_path.size() - 1) : 0.0;
  CostEstimate est;
  est.value = mean;
  est.std_error = std::sqrt(var / static_cast<double>(per_path.size()));
  est.n_paths = static_cast<int>(per_path.size());
  return est;
}

void ensemble_to_csv(const ForwardEnsemble& ens, const std::vector<std::vector<double>>* gamma,
                     const std::string& file, const std::string& comment) {
  CsvWriter csv(file);
  if (!comment.empty()) csv.comment(comment);
  csv.header({"path", "k", "t", "x", "Y", "Z", "Gamma"});
  for (int i = 0; i < ens.n_paths(); ++i) {
    const PathState& p = ens.paths[static_cast<std::size_t>(i)];
    for (int k = 0; k <= ens.grid.steps; ++k) {
      const double g = gamma ? (*gamma)[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]
                             : 0.0;
      csv.row({static_cast<double>(i), static_cast<double>(k), ens.grid.time(k),
               p.x[static_cast<std::size_t>(k)], p.Y[static_cast<std::size_t>(k)],
               p.Z[static_cast<std::size_t>(k)], g});
    }
  }
}

}  // namespace dsmp
