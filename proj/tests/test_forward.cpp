#include "doctest.h"
#include "dsmp/forward.hpp"
#include "dsmp/models.hpp"
#include "test_support.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

using namespace dsmp;

TEST_CASE("all-zero coefficients freeze the state") {
  Model m = make_delay_ode_model(0.0, 2.5);
  const TimeGrid grid = build_grid(1.0, 0.5, 4);
  const ForwardEnsemble ens =
      simulate_ensemble(m, Control::zero(), grid, 1, 16, Measure::physical);
  for (const auto& p : ens.paths) {
    for (double x : p.x) CHECK(x == 2.5);
  }
}

TEST_CASE("deterministic delay dynamics against the segment oracle") {
  // dx = x(t - 1/2) dt from a unit segment: x(1) = 2.125 by direct
  // integration, frozen here and cross-checked against the oracle.
  CHECK(oracle::delay_ode(1.0, 1.0, 0.5, 1.0, 1.0) == doctest::Approx(2.125).epsilon(1e-14));

  const Model m = make_delay_ode_model(1.0, 1.0);
  const TimeGrid grid = build_grid(1.0, 0.5, 50);  // dt = 0.01
  const ForwardEnsemble ens = simulate_ensemble(m, Control::zero(), grid, 1, 1);
  CHECK(ens.paths[0].x.back() == doctest::Approx(2.125).epsilon(0.01));

  // Interest-rate variant: dx = 0.3 x(t - 1/2) dt, x(1) = 1.31125.
  CHECK(oracle::delay_ode(0.3, 1.0, 0.5, 1.0, 1.0) == doctest::Approx(1.31125).epsilon(1e-14));
  const Model m2 = make_delay_ode_model(0.3, 1.0);
  const ForwardEnsemble ens2 = simulate_ensemble(m2, Control::zero(), grid, 1, 1);
  CHECK(ens2.paths[0].x.back() == doctest::Approx(1.31125).epsilon(0.01));
}

TEST_CASE("euler error halves with the step for the delay oracle") {
  const Model m = make_delay_ode_model(1.0, 1.0);
  const double exact = 2.125;
  auto error_at = [&](int steps_per_delay) {
    const TimeGrid grid = build_grid(1.0, 0.5, steps_per_delay);
    const ForwardEnsemble ens = simulate_ensemble(m, Control::zero(), grid, 1, 1);
    return std::abs(ens.paths[0].x.back() - exact);
  };
  const double e1 = error_at(50);
  const double e2 = error_at(100);
  CHECK(e2 > 0.35 * e1);
  CHECK(e2 < 0.65 * e1);
}

TEST_CASE("zero observation drift gives pure-noise observation and unit density") {
  Model m = builtin_model("bounded");
  m.obs = Observation::none();
  const TimeGrid grid = build_grid(1.0, 0.25, 5);
  const ForwardEnsemble ens =
      simulate_ensemble(m, Control::zero(), grid, 77, 8, Measure::physical);
  for (const auto& p : ens.paths) {
    double y = 0.0;
    for (int k = 0; k < grid.steps; ++k) {
      y += p.dW[static_cast<std::size_t>(k)];
      CHECK(p.Y[static_cast<std::size_t>(k) + 1] == doctest::Approx(y).epsilon(1e-14));
      CHECK(p.Z[static_cast<std::size_t>(k) + 1] == 1.0);
    }
  }
}

TEST_CASE("constant observation drift has the closed-form density") {
  // With h = c the density is exp(c W(T) + c^2 T / 2) pathwise, where W is
  // the observation stripped of its drift; holds in both conventions.
  Model m = builtin_model("bounded");
  const double c = 0.4;
  m.obs.h = [c](double, double) { return c; };
  m.obs.hx = [](double, double) { return 0.0; };
  m.obs.hxx = [](double, double) { return 0.0; };
  const TimeGrid grid = build_grid(1.0, 0.25, 5);
  for (Measure mode : {Measure::physical, Measure::reference}) {
    const ForwardEnsemble ens = simulate_ensemble(m, Control::zero(), grid, 5, 32, mode);
    for (const auto& p : ens.paths) {
      double w = 0.0;
      for (double dw : p.dW) w += dw;
      const double closed = std::exp(c * w + 0.5 * c * c * grid.horizon);
      CHECK(p.Z.back() == doctest::Approx(closed).epsilon(1e-12));
    }
  }
}

TEST_CASE("density is a unit-mean martingale under the reference convention") {
  const Model m = builtin_model("bounded");
  const TimeGrid grid = build_grid(1.0, 0.25, 5);
  const int paths = 20000;
  const int n = grid.steps;
  std::vector<double> sum(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> sumsq(static_cast<std::size_t>(n) + 1, 0.0);
  for_each_path(m, Control::zero(), grid, 99, paths, Measure::reference,
                [&](int, const PathState& p) {
                  for (int k = 0; k <= n; ++k) {
                    sum[static_cast<std::size_t>(k)] += p.Z[static_cast<std::size_t>(k)];
                    sumsq[static_cast<std::size_t>(k)] +=
                        p.Z[static_cast<std::size_t>(k)] * p.Z[static_cast<std::size_t>(k)];
                  }
                });
  for (int k = 1; k <= n; k += 4) {
    const double mean = sum[static_cast<std::size_t>(k)] / paths;
    const double var =
        (sumsq[static_cast<std::size_t>(k)] - paths * mean * mean) / (paths - 1.0);
    const double se = std::sqrt(var / paths);
    INFO("node ", k, " mean ", mean, " se ", se);
    CHECK(std::abs(mean - 1.0) < 4.0 * se);
  }
}

TEST_CASE("ratio process is a zero-mean martingale under the physical convention") {
  const Model m = builtin_model("bounded");
  const TimeGrid grid = build_grid(1.0, 0.25, 5);
  const ForwardEnsemble ens =
      simulate_ensemble(m, Control::zero(), grid, 31, 20000, Measure::physical);
  std::vector<double> ones(static_cast<std::size_t>(grid.steps) + 1, 1.0);
  double sum = 0.0, sumsq = 0.0;
  for (const auto& p : ens.paths) {
    const std::vector<double> gamma = simulate_gamma(m, p, ones, grid);
    sum += gamma.back();
    sumsq += gamma.back() * gamma.back();
  }
  const double mean = sum / ens.n_paths();
  const double se = std::sqrt((sumsq / ens.n_paths() - mean * mean) / ens.n_paths());
  CHECK(std::abs(mean) < 4.0 * se);

  // Degenerate inputs force the ratio to vanish.
  Model flat = m;
  flat.obs.hx = [](double, double) { return 0.0; };
  std::vector<double> zeros(static_cast<std::size_t>(grid.steps) + 1, 0.0);
  for (int i = 0; i < 4; ++i) {
    const auto g0 = simulate_gamma(flat, ens.paths[static_cast<std::size_t>(i)], ones, grid);
    const auto g1 = simulate_gamma(m, ens.paths[static_cast<std::size_t>(i)], zeros, grid);
    for (double v : g0) CHECK(v == 0.0);
    for (double v : g1) CHECK(v == 0.0);
  }
}

TEST_CASE("observation and density rebuild matches the coupled simulation") {
  const Model m = builtin_model("bounded");
  const TimeGrid grid = build_grid(1.0, 0.25, 5);
  for (Measure mode : {Measure::physical, Measure::reference}) {
    const NoisePath noise =
        sample_noise(grid, SeedSpec{202ULL, 3ULL}, m.jump_intensity, m.marks);
    const PathState p = simulate_path(m, Control::zero(), grid, noise, mode);
    const ObservationDensity od = simulate_observation_and_density(m, p.x, grid, noise, mode);
    for (int k = 0; k <= grid.steps; ++k) {
      CHECK(od.Y[static_cast<std::size_t>(k)] == p.Y[static_cast<std::size_t>(k)]);
      CHECK(od.Z[static_cast<std::size_t>(k)] == p.Z[static_cast<std::size_t>(k)]);
    }
  }
  CHECK_THROWS_AS(simulate_observation_and_density(
                      m, std::vector<double>(3, 0.0), grid,
                      sample_noise(grid, SeedSpec{1, 1}, 0.0, MarkDistribution::constant(1)),
                      Measure::physical),
                  std::invalid_argument);
}

TEST_CASE("cost estimates for degenerate functionals are exact") {
  const TimeGrid grid = build_grid(1.0, 0.5, 4);

  Model m = make_delay_ode_model(0.0, 1.0);
  m.terminal = TerminalCost::zero();
  m.cost = RunningCost::zero();
  m.cost.value = [](double, double, double, double) { return 1.0; };
  ForwardEnsemble ens = simulate_ensemble(m, Control::zero(), grid, 3, 64);
  CostEstimate j = estimate_cost(m, Control::zero(), ens);
  CHECK(j.value == doctest::Approx(grid.horizon).epsilon(1e-13));
  CHECK(j.std_error == doctest::Approx(0.0));

  Model m2 = make_delay_ode_model(0.0, 1.0);
  m2.terminal = TerminalCost::zero();
  m2.terminal.value = [](double) { return 1.0; };
  m2.terminal.dx = [](double) { return 0.0; };
  ForwardEnsemble ens2 = simulate_ensemble(m2, Control::zero(), grid, 3, 64);
  CostEstimate j2 = estimate_cost(m2, Control::zero(), ens2);
  CHECK(j2.value == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(j2.std_error == doctest::Approx(0.0));

  ForwardEnsemble empty;
  empty.grid = grid;
  CHECK_THROWS_AS(estimate_cost(m, Control::zero(), empty), std::domain_error);
}

TEST_CASE("compensated jumps keep the state centered") {
  Model m = make_delay_ode_model(0.0, 1.0);
  m.jump = JumpCoef::constant(0.3);
  m.jump_intensity = 2.0;
  m.marks = MarkDistribution::constant(1.0);
  const TimeGrid grid = build_grid(1.0, 0.25, 5);
  const ForwardEnsemble ens = simulate_ensemble(m, Control::zero(), grid, 8, 20000);
  double sum = 0.0, sumsq = 0.0;
  for (const auto& p : ens.paths) {
    sum += p.x.back();
    sumsq += p.x.back() * p.x.back();
  }
  const double mean = sum / ens.n_paths();
  const double se = std::sqrt((sumsq / ens.n_paths() - mean * mean) / ens.n_paths());
  CHECK(std::abs(mean - 1.0) < 4.0 * se);
}

TEST_CASE("eighth moments stay bounded under refinement") {
  const Model m = builtin_model("bounded");
  auto sup_moment = [&](int steps_per_delay) {
    const TimeGrid grid = build_grid(1.0, 0.25, steps_per_delay);
    const ForwardEnsemble ens = simulate_ensemble(m, Control::zero(), grid, 17, 4000);
    double worst = 0.0;
    for (int k = 0; k <= grid.steps; ++k) {
      double acc = 0.0;
      for (const auto& p : ens.paths) {
        acc += std::pow(p.x[static_cast<std::size_t>(k)], 8);
      }
      worst = std::max(worst, acc / ens.n_paths());
    }
    return worst;
  };
  const double coarse = sup_moment(5);
  const double fine = sup_moment(10);
  CHECK(fine < 2.0 * coarse);
  CHECK(coarse < 2.0 * fine);
}

TEST_CASE("perturbation growth is eighth order in the amplitude") {
  const Model m = builtin_model("bounded");
  const TimeGrid grid = build_grid(1.0, 0.25, 5);
  const Control base = Control::zero();
  const Control dir = Control::deterministic([](double t) { return std::sin(3.0 * t); });

  auto sup_ratio = [&](double eps) {
    const ForwardEnsemble a = simulate_ensemble(m, base, grid, 23, 2000, Measure::reference);
    const ForwardEnsemble b =
        simulate_ensemble(m, control_axpy(base, eps, dir), grid, 23, 2000, Measure::reference);
    double worst = 0.0;
    for (int k = 0; k <= grid.steps; ++k) {
      double acc = 0.0;
      for (int i = 0; i < a.n_paths(); ++i) {
        const double d = b.paths[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(k)] -
                         a.paths[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(k)];
        acc += std::pow(d, 8);
      }
      worst = std::max(worst, acc / a.n_paths());
    }
    return worst / std::pow(eps, 8);
  };
  const double r1 = sup_ratio(0.1);
  const double r2 = sup_ratio(0.05);
  const double r3 = sup_ratio(0.025);
  CHECK(r2 / r1 < 4.0);
  CHECK(r1 / r2 < 4.0);
  CHECK(r3 / r2 < 4.0);
  CHECK(r2 / r3 < 4.0);
}

TEST_CASE("non-finite coefficients raise a simulation error with the step") {
  Model m = make_delay_ode_model(0.0, 1.0);
  m.drift.value = [](double t, double, double, double, double) {
    return t > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  };
  const TimeGrid grid = build_grid(1.0, 0.5, 4);
  try {
    simulate_ensemble(m, Control::zero(), grid, 1, 1);
    FAIL("expected simulation_error");
  } catch (const simulation_error& err) {
    CHECK(err.step() >= 4);
    CHECK(std::string(err.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("ensembles are reproducible and exportable byte for byte") {
  const Model m = builtin_model("constcoef");
  const TimeGrid grid = build_grid(1.0, 0.25, 5);
  const ForwardEnsemble a = simulate_ensemble(m, Control::zero(), grid, 2718, 32);
  const ForwardEnsemble b = simulate_ensemble(m, Control::zero(), grid, 2718, 32);
  for (int i = 0; i < a.n_paths(); ++i) {
    for (int k = 0; k <= grid.steps; ++k) {
      CHECK(a.paths[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(k)] ==
            b.paths[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(k)]);
    }
  }

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dsmp_csv_test";
  fs::create_directories(dir);
  ensemble_to_csv(a, nullptr, (dir / "a.csv").string(), "seed=2718");
  ensemble_to_csv(b, nullptr, (dir / "b.csv").string(), "seed=2718");
  std::ifstream fa(dir / "a.csv"), fb(dir / "b.csv");
  std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(ca == cb);
  CHECK(ca.find("path,k,t,x,Y,Z,Gamma") != std::string::npos);
  fs::remove_all(dir);
}
