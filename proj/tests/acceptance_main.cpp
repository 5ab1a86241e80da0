// End-to-end acceptance suite. Each check prints one PASS/FAIL line with the
// measured numbers; the process exits with the number of failures.
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dsmp/experiments.hpp"
#include "test_support.hpp"

using namespace dsmp;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("[%s] %-4s %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return std::string(buf);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// C1: deterministic delay dynamics against the segment-integration value,
// one-percent accuracy at dt = 1/200 and first-order decay, under a second.
void criterion1() {
  Stopwatch watch;
  const double exact = 2.125;
  const Model m = make_delay_ode_model(1.0, 1.0);
  auto terminal_error = [&](int steps_per_delay) {
    const TimeGrid grid = build_grid(1.0, 0.5, steps_per_delay);
    const ForwardEnsemble ens = simulate_ensemble(m, Control::zero(), grid, 1, 1);
    return std::abs(ens.paths[0].x.back() - exact);
  };
  const double e200 = terminal_error(100);  // dt = 1/200
  const double e400 = terminal_error(200);  // dt = 1/400
  const double ratio = e200 / e400;
  const double elapsed = watch.seconds();
  const bool pass = e200 < 0.01 * exact && ratio > 1.0 / 0.65 && ratio < 1.0 / 0.35 &&
                    elapsed < 1.0;
  report("C1", pass,
         fmt("delay dynamics: |x(1)-2.125| = %.3e (tol %.3e), halving ratio %.2f in "
             "[1.54,2.86], %.2fs (<1s)",
             e200, 0.01 * exact, ratio, elapsed));
}

// C2: anticipated backward equation at r0 = 0.05, T = 1, delta = 0.4; the
// t = 0 value matches 0.515025 within max(2 dt, 3 SE) and the error is
// first order across two refinements, under thirty seconds.
void criterion2() {
  Stopwatch watch;
  const double exact = oracle::investment_adjoint_closed_form(0.05, 0.5, 0.0);
  const Model m = make_investment_adjoint_model(0.05, 0.5);
  RegressionConfig cfg;  // default degree-2 feature basis
  auto solve_q0 = [&](int steps_per_delay, double* se_out) {
    const TimeGrid grid = build_grid(1.0, 0.4, steps_per_delay);
    const ForwardEnsemble ens = simulate_ensemble(m, Control::zero(), grid, 2, 10000);
    const PSolution psol = solve_p_equation(m, Control::zero(), ens, cfg);
    const AbsdeSolution adj = solve_adjoint(m, Control::zero(), ens, psol, cfg);
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < ens.n_paths(); ++i) mean += adj.q[static_cast<std::size_t>(i)][0];
    mean /= ens.n_paths();
    for (int i = 0; i < ens.n_paths(); ++i) {
      const double d = adj.q[static_cast<std::size_t>(i)][0] - mean;
      var += d * d;
    }
    if (se_out) *se_out = std::sqrt(var / (ens.n_paths() - 1.0) / ens.n_paths());
    return mean;
  };
  double se = 0.0;
  const double q0 = solve_q0(20, &se);  // dt = 0.02
  const double dt = 0.02;
  const double tol = std::max(2.0 * dt, 3.0 * se);
  const double err20 = std::abs(q0 - exact);

  const double e10 = std::abs(solve_q0(10, nullptr) - exact);
  const double e20 = std::abs(solve_q0(20, nullptr) - exact);
  const double e40 = std::abs(solve_q0(40, nullptr) - exact);
  const double r1 = e10 / e20;
  const double r2 = e20 / e40;
  const double elapsed = watch.seconds();
  const bool first_order =
      r1 > 1.0 / 0.65 && r1 < 1.0 / 0.35 && r2 > 1.0 / 0.65 && r2 < 1.0 / 0.35;
  const bool pass = err20 <= tol && first_order && elapsed < 30.0;
  report("C2", pass,
         fmt("anticipated adjoint: q(0) = %.6f vs %.6f (err %.2e <= %.2e), refinement ratios "
             "%.2f/%.2f, %.1fs (<30s)",
             q0, exact, err20, tol, r1, r2, elapsed));
}

// C3: variance equation against the hyperbolic-tangent closed form (1e-6)
// and an independent ten-times-finer integration (1e-8), under a second.
void criterion3() {
  Stopwatch watch;
  const double sigma = 0.5, beta = 0.3;
  const TimeGrid grid_tanh = build_grid(1.0, 0.5, 100);
  const RiccatiSolution tanh_sol =
      solve_riccati(0.0, beta, [sigma](double) { return sigma; }, 0.0, grid_tanh);
  double tanh_rel = 0.0;
  for (int k = 1; k <= grid_tanh.steps; ++k) {
    const double t = grid_tanh.time(k);
    const double exact = sigma * beta * std::tanh(beta * t / sigma);
    tanh_rel = std::max(tanh_rel, std::abs(tanh_sol.at(k) - exact) / exact);
  }

  auto paper_sigma = [](double t) { return 0.3 * std::sin(2.0 * t) + 0.1; };
  const double alpha = 0.1, b2 = 0.2, g0 = 0.05;
  const TimeGrid grid = build_grid(1.0, 0.5, 250);  // dt = 0.002
  const RiccatiSolution sol = solve_riccati(alpha, b2, paper_sigma, g0, grid);
  auto rhs = [&](double t, double g) {
    const double s = paper_sigma(t);
    return 2.0 * alpha * g - g * g / (s * s) + b2 * b2;
  };
  const std::vector<double> fine = oracle::rk4(rhs, g0, 0.0, 1.0, grid.steps * 10);
  double paper_rel = 0.0;
  for (int k = 1; k <= grid.steps; ++k) {
    const double ref = fine[static_cast<std::size_t>(k) * 10];
    paper_rel = std::max(paper_rel, std::abs(sol.at(k) - ref) / std::abs(ref));
  }
  const double elapsed = watch.seconds();
  const bool pass = tanh_rel < 1e-6 && paper_rel < 1e-8 && elapsed < 1.0;
  report("C3", pass,
         fmt("variance equation: closed-form rel %.2e (<1e-6), fine-grid rel %.2e (<1e-8), "
             "%.2fs (<1s)",
             tanh_rel, paper_rel, elapsed));
}

// C4: the density is a unit-mean martingale under the observation-as-noise
// convention: ten checkpoints, 1e5 paths, four standard errors.
void criterion4() {
  Stopwatch watch;
  const Model m = builtin_model("bounded");
  const TimeGrid grid = build_grid(1.0, 0.25, 50);  // dt = 0.005, n = 200
  const int paths = 100000;
  const int n = grid.steps;
  std::vector<double> sum(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> sumsq(static_cast<std::size_t>(n) + 1, 0.0);
  for_each_path(m, Control::zero(), grid, 4, paths, Measure::reference,
                [&](int, const PathState& p) {
                  for (int k = 20; k <= n; k += 20) {
                    const double z = p.Z[static_cast<std::size_t>(k)];
                    sum[static_cast<std::size_t>(k)] += z;
                    sumsq[static_cast<std::size_t>(k)] += z * z;
                  }
                });
  bool pass = true;
  double worst_dev = 0.0, worst_se = 0.0;
  for (int k = 20; k <= n; k += 20) {
    const double mean = sum[static_cast<std::size_t>(k)] / paths;
    const double var =
        (sumsq[static_cast<std::size_t>(k)] - paths * mean * mean) / (paths - 1.0);
    const double se = std::sqrt(var / paths);
    if (std::abs(mean - 1.0) > 4.0 * se) pass = false;
    if (std::abs(mean - 1.0) > worst_dev) {
      worst_dev = std::abs(mean - 1.0);
      worst_se = se;
    }
  }
  const double elapsed = watch.seconds();
  pass = pass && elapsed < 60.0;
  report("C4", pass,
         fmt("density martingale: worst |mean-1| = %.2e vs 4 SE = %.2e over 10 checkpoints, "
             "%.1fs (<60s)",
             worst_dev, 4.0 * worst_se, elapsed));
}

// C5: the first-variation remainder shrinks at the fourth-power rate across
// halvings of the perturbation amplitude (factor in [4, 64], target 16).
void criterion5() {
  const Model m = builtin_model("bounded");
  const TimeGrid grid = build_grid(1.0, 0.25, 5);
  const Control u = Control::deterministic([](double) { return 0.1; });
  const Control dir = Control::deterministic([](double t) { return std::sin(3.0 * t); });
  const int paths = 10000;
  const ForwardEnsemble base = simulate_ensemble(m, u, grid, 5, paths, Measure::reference);
  const auto x1 = simulate_x1(m, u, dir, base);

  auto fourth_moment = [&](double eps) {
    const ForwardEnsemble bumped =
        simulate_ensemble(m, control_axpy(u, eps, dir), grid, 5, paths, Measure::reference);
    double worst = 0.0;
    for (int k = 0; k <= grid.steps; ++k) {
      double acc = 0.0;
      for (int i = 0; i < paths; ++i) {
        const double d =
            (bumped.paths[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(k)] -
             base.paths[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(k)]) /
                eps -
            x1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        acc += d * d * d * d;
      }
      worst = std::max(worst, acc / paths);
    }
    return worst;
  };
  const double m1 = fourth_moment(0.2);
  const double m2 = fourth_moment(0.1);
  const double m3 = fourth_moment(0.05);
  const double r1 = m1 / m2, r2 = m2 / m3;
  const bool pass = r1 >= 4.0 && r1 <= 64.0 && r2 >= 4.0 && r2 <= 64.0;
  report("C5", pass,
         fmt("first-variation rate: remainder ratios %.1f, %.1f in [4, 64] (target 16)", r1,
             r2));
}

// C6: Gateaux consistency; one-sided differences match J1 and centered
// second differences match 2 J2 within C eps + 4 SE across eight directions.
void criterion6() {
  const Model m = builtin_model("bounded");
  const TimeGrid grid = build_grid(1.0, 0.25, 5);
  const Control u = Control::deterministic([](double) { return 0.2; });
  const double eps = 0.05;
  const auto rows = run_gateaux_probe(m, u, eps, 8, grid, 6, 10000);
  // One-sided differences leave the eps J2 Taylor term; |J2| stays below
  // 1.1 over this direction family, so 1.5 bounds it with headroom. The
  // centered second difference leaves a third-order term, far smaller.
  const double c1 = 1.5, c2 = 1.0;
  bool pass = true;
  double worst1 = 0.0, worst2 = 0.0;
  for (const auto& row : rows) {
    if (std::abs(row.diff1) > c1 * eps + 4.0 * row.diff1_se) pass = false;
    if (std::abs(row.diff2) > c2 * eps + 4.0 * row.diff2_se) pass = false;
    worst1 = std::max(worst1, std::abs(row.diff1));
    worst2 = std::max(worst2, std::abs(row.diff2));
  }
  report("C6", pass,
         fmt("gateaux consistency: worst |fd-J1| = %.3e (tol %.3e), worst |fd-2J2| = %.3e "
             "(tol %.3e), 8 directions",
             worst1, c1 * eps, worst2, c2 * eps));
}

// C7: duality residual on the affine-coefficient delay model with jumps.
void criterion7() {
  const Model m = builtin_model("constcoef");
  const TimeGrid grid = build_grid(1.0, 0.25, 10);  // dt = 0.025
  const Control u = Control::zero();
  const ForwardEnsemble ens = simulate_ensemble(m, u, grid, 7, 10000, Measure::physical);
  RegressionConfig cfg;
  const PSolution psol = solve_p_equation(m, u, ens, cfg);
  const AbsdeSolution adj = solve_adjoint(m, u, ens, psol, cfg);
  const Control v =
      Control::deterministic([](double t) { return 0.8 + 0.5 * std::sin(2.0 * t); });
  const auto x1 = simulate_x1(m, u, v, ens);
  const DualityResult res = duality_check(m, u, v, ens, x1, adj, psol);
  const double tol = 4.0 * res.std_error + 2.0 * grid.dt;
  const bool pass = std::abs(res.residual) <= tol;
  report("C7", pass,
         fmt("duality: lhs %.4f rhs %.4f residual %.3e (tol %.3e)", res.lhs, res.rhs,
             res.residual, tol));
}

// C8: stationarity residual of the investment example at the formula
// control, and detection of a shifted control at every node.
void criterion8() {
  Config cfg;
  cfg.set("n_paths", "10000");
  cfg.set("master_seed", "8");
  const Example2Report rep = run_example2(cfg);
  const double tol = 1.0 * rep.dt + 4.0 * rep.residual.max_std_error;
  bool detected = true;
  double weakest = 1e300;
  for (const auto& row : rep.residual_perturbed.rows) {
    weakest = std::min(weakest, row.residual);
    if (row.residual < 0.15) detected = false;
  }
  const bool pass = rep.residual.max_abs_residual <= tol && detected;
  report("C8", pass,
         fmt("stationarity residual: max %.3e (tol %.3e); perturbed control detected at every "
             "node, weakest %.3f (>=0.15)",
             rep.residual.max_abs_residual, tol, weakest));
}

// C9: qualitative delay effect with the documented default constants; the
// objective decreases in the delay with at least three of four adjacent
// gaps significant against their paired errors, within five minutes.
void criterion9() {
  Stopwatch watch;
  Config cfg;
  cfg.set("n_paths", "10000");
  cfg.set("master_seed", "9");
  const SweepReport rep = run_delay_sweep(cfg);
  const double elapsed = watch.seconds();
  std::string gaps;
  for (const auto& g : rep.gaps) {
    gaps += fmt("%.2e(%.0fse) ", g.gap, g.std_error > 0 ? g.gap / g.std_error : 0.0);
  }
  const bool pass = rep.rows.size() == 5 && rep.monotone_decreasing &&
                    rep.significant_gaps >= 3 && elapsed < 300.0;
  report("C9", pass,
         fmt("delay effect: monotone=%d significant gaps %d/4, gaps %s, %.0fs (<300s)",
             rep.monotone_decreasing ? 1 : 0, rep.significant_gaps, gaps.c_str(), elapsed));
}

// C10: byte-identical reruns of the pipelines' file outputs.
void criterion10() {
  const fs::path dir_a = fs::temp_directory_path() / "dsmp_acceptance_a";
  const fs::path dir_b = fs::temp_directory_path() / "dsmp_acceptance_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  fs::create_directories(dir_a);
  fs::create_directories(dir_b);

  Config cfg;
  cfg.set("n_paths", "4000");
  cfg.set("master_seed", "10");
  cfg.set("out_dir", dir_a.string());
  run_example2(cfg);
  run_delay_sweep(cfg);
  cfg.set("out_dir", dir_b.string());
  run_example2(cfg);
  run_delay_sweep(cfg);

  bool pass = true;
  std::string detail;
  for (const char* name : {"filter.csv", "adjoint.csv", "example2.csv", "smp_residual.csv",
                           "smp_residual_perturbed.csv", "delay_sweep.csv"}) {
    const std::string a = slurp(dir_a / name);
    const std::string b = slurp(dir_b / name);
    const bool same = !a.empty() && a == b;
    if (!same) {
      pass = false;
      detail += std::string(name) + " differs; ";
    }
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  report("C10", pass,
         pass ? "determinism: six output files byte-identical across reruns"
              : "determinism: " + detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  std::printf("%d criteria failed\n", g_failures);
  return g_failures;
}
