#include "dsmp/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "dsmp/csv.hpp"

namespace dsmp {

namespace {

struct StageTimer {
  const char* label;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  explicit StageTimer(const char* l) : label(l) {}
  ~StageTimer() {
    const auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    std::fprintf(stderr, "[dsmp] %-28s %8.1f ms\n", label, static_cast<double>(us) / 1000.0);
  }
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - out.mean) * (x - out.mean);
  var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
  out.se = std::sqrt(var / static_cast<double>(v.size()));
  return out;
}

std::string run_comment(const Config& cfg) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(cfg.hash()));
  return "config_hash=" + std::string(buf) +
         " seed=" + std::to_string(cfg.get_u64("master_seed", 12345));
}

int steps_per_delay_for(double delta, double dt) {
  const double m_real = delta / dt;
  const double m_round = std::round(m_real);
  if (std::abs(m_real - m_round) > 1e-9 * std::max(1.0, m_real) || m_round < 1.0) {
    throw alignment_error("delay " + std::to_string(delta) +
                          " is not an integer multiple of dt = " + std::to_string(dt));
  }
  return static_cast<int>(m_round);
}

int checked_paths(const Config& cfg, int fallback) {
  const int n = cfg.get_int("n_paths", fallback);
  if (n < 10) throw std::domain_error("n_paths must be at least 10");
  if (n < 1000) {
    std::fprintf(stderr,
                 "[dsmp] warning: %d paths is below the 1000-path floor recommended for "
                 "statistical conclusions\n",
                 n);
  }
  return n;
}

}  // namespace

const std::set<std::string>& experiment_keys() {
  static const std::set<std::string> keys = {
      // grid and sampling
      "T", "delta", "delta_list", "dt", "n_paths", "master_seed", "threads",
      // regression bases
      "basis_degree", "intercept_basis", "y_lag",
      // investment example constants
      "alpha", "beta", "x0", "mu_hat0", "r0", "gamma0", "a_slope", "sigma_base", "sigma_amp",
      "sigma_freq", "mu0_random",
      // filtered nonlinear example constants
      "ex1_a", "ex1_b", "ex1_sigma0", "ex1_theta", "ex1_gamma", "ex1_lambda", "ex1_xi", "v_lo",
      "v_hi", "picard_iterations",
      // probes and residual reporting
      "probe_count", "probe_epsilon", "smp_perturbation", "with_residual", "check_monotone",
      "v_grid_count", "gateaux_epsilon", "gateaux_directions",
      // output
      "out_dir", "model",
  };
  return keys;
}

std::vector<double> refined_adjoint_ode(double r0, double qT, const TimeGrid& grid, int refine) {
  const int nf = grid.steps * refine;
  const int mf = grid.steps_per_delay * refine;
  const double dtf = grid.dt / static_cast<double>(refine);
  std::vector<double> q(static_cast<std::size_t>(nf) + 1, 0.0);
  q[static_cast<std::size_t>(nf)] = qT;
  for (int k = nf - 1; k >= 0; --k) {
    // The anticipated integrand vanishes on steps past the cutoff t = T -
    // delay; at k + mf == nf only the left endpoint touches the horizon and
    // the step integral is zero.
    double increment = 0.0;
    if (k + mf < nf) {
      increment = 0.5 * dtf * (r0 * q[static_cast<std::size_t>(k + mf)] +
                               r0 * q[static_cast<std::size_t>(k + 1 + mf)]);
    }
    q[static_cast<std::size_t>(k)] = q[static_cast<std::size_t>(k) + 1] + increment;
  }
  std::vector<double> out(static_cast<std::size_t>(grid.steps) + 1);
  for (int k = 0; k <= grid.steps; ++k) {
    out[static_cast<std::size_t>(k)] = q[static_cast<std::size_t>(k * refine)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Investment example
// ---------------------------------------------------------------------------

namespace {

struct Ex2Params {
  double T, delta, dt;
  int n_paths;
  std::uint64_t seed;
  double alpha, beta, x0, mu_hat0, r0, gamma0, a_slope;
  double sigma_base, sigma_amp, sigma_freq;
  bool mu0_random;
  bool intercept_basis;
  int basis_degree;
  double perturbation;

  double a(double t) const { return a_slope * t; }
  double sigma(double t) const { return sigma_amp * std::sin(sigma_freq * t) + sigma_base; }
};

Ex2Params parse_ex2(const Config& cfg, double delta_override) {
  Ex2Params p;
  p.T = cfg.get_double("T", 1.0);
  p.delta = delta_override > 0.0 ? delta_override : cfg.get_double("delta", 0.4);
  p.dt = cfg.get_double("dt", 0.02);
  p.n_paths = checked_paths(cfg, 10000);
  p.seed = cfg.get_u64("master_seed", 12345);
  p.alpha = cfg.get_double("alpha", 0.1);
  p.beta = cfg.get_double("beta", 0.2);
  p.x0 = cfg.get_double("x0", 1.0);
  p.mu_hat0 = cfg.get_double("mu_hat0", 0.15);
  p.r0 = cfg.get_double("r0", 0.05);
  p.gamma0 = cfg.get_double("gamma0", 0.05);
  p.a_slope = cfg.get_double("a_slope", 0.1);
  p.sigma_base = cfg.get_double("sigma_base", 0.1);
  p.sigma_amp = cfg.get_double("sigma_amp", 0.3);
  p.sigma_freq = cfg.get_double("sigma_freq", 2.0);
  p.mu0_random = cfg.get_bool("mu0_random", true);
  p.intercept_basis = cfg.get_bool("intercept_basis", false);
  p.basis_degree = cfg.get_int("basis_degree", 2);
  p.perturbation = cfg.get_double("smp_perturbation", 0.1);
  return p;
}

struct Ex2Paths {
  std::vector<std::vector<double>> mu, mu_hat, dnu;  // [path][...]
  RiccatiSolution riccati;
};

Ex2Paths simulate_filter_layer(const Ex2Params& p, const TimeGrid& grid) {
  Ex2Paths out;
  out.riccati = solve_riccati(p.alpha, p.beta, [p](double t) { return p.sigma(t); }, p.gamma0,
                              grid);
  const int n = grid.steps;
  out.mu.assign(static_cast<std::size_t>(p.n_paths),
                std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
  out.mu_hat = out.mu;
  out.dnu.assign(static_cast<std::size_t>(p.n_paths),
                 std::vector<double>(static_cast<std::size_t>(n), 0.0));

  for (int i = 0; i < p.n_paths; ++i) {
    auto eng = make_path_engine(SeedSpec{p.seed, static_cast<std::uint64_t>(i)});
    std::normal_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> incr(0.0, std::sqrt(grid.dt));

    // Fixed draw order: latent initial value, latent driver, price driver.
    const double z0 = unit(eng);
    std::vector<double> dwbar(static_cast<std::size_t>(n));
    std::vector<double> dw(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) dwbar[static_cast<std::size_t>(k)] = incr(eng);
    for (int k = 0; k < n; ++k) dw[static_cast<std::size_t>(k)] = incr(eng);

    auto& mu = out.mu[static_cast<std::size_t>(i)];
    mu[0] = p.mu_hat0 + (p.mu0_random ? std::sqrt(p.gamma0) * z0 : 0.0);
    std::vector<double> dlogS(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double t = grid.time(k);
      const double s = p.sigma(t);
      dlogS[static_cast<std::size_t>(k)] =
          (mu[static_cast<std::size_t>(k)] - 0.5 * s * s) * grid.dt +
          s * dw[static_cast<std::size_t>(k)];
      mu[static_cast<std::size_t>(k) + 1] = mu[static_cast<std::size_t>(k)] +
                                            p.alpha * mu[static_cast<std::size_t>(k)] * grid.dt +
                                            p.beta * dwbar[static_cast<std::size_t>(k)];
    }
    const FilterState st = run_kalman_bucy(out.riccati, dlogS, p.mu_hat0);
    out.mu_hat[static_cast<std::size_t>(i)] = st.mu_hat;
    out.dnu[static_cast<std::size_t>(i)] = st.innovations;
  }
  return out;
}

// Wealth recursion under a per-path control column, driven by the
// innovations; the initial segment is the constant x0.
std::vector<double> simulate_wealth(const Ex2Params& p, const TimeGrid& grid,
                                    const std::vector<double>& mu_hat,
                                    const std::vector<double>& dnu,
                                    const std::vector<double>& v) {
  const int n = grid.steps;
  const int m = grid.steps_per_delay;
  std::vector<double> x(static_cast<std::size_t>(n) + 1, 0.0);
  x[0] = p.x0;
  for (int k = 0; k < n; ++k) {
    const double t = grid.time(k);
    const double xd = k - m >= 0 ? x[static_cast<std::size_t>(k - m)] : p.x0;
    const double vk = v[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(k) + 1] =
        x[static_cast<std::size_t>(k)] +
        (p.r0 * (xd - vk) + mu_hat[static_cast<std::size_t>(k)] * vk) * grid.dt +
        p.sigma(t) * vk * dnu[static_cast<std::size_t>(k)];
  }
  return x;
}

ForwardEnsemble assemble_adjoint_ensemble(const Ex2Params& p, const TimeGrid& grid,
                                          const Ex2Paths& layer) {
  ForwardEnsemble ens;
  ens.grid = grid;
  ens.measure = Measure::physical;
  ens.master_seed = p.seed;
  ens.paths.resize(static_cast<std::size_t>(p.n_paths));
  const int n = grid.steps;
  for (int i = 0; i < p.n_paths; ++i) {
    PathState& path = ens.paths[static_cast<std::size_t>(i)];
    const auto& dnu = layer.dnu[static_cast<std::size_t>(i)];
    std::vector<double> v_a(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) v_a[static_cast<std::size_t>(k)] = p.a(grid.time(k));
    path.x = simulate_wealth(p, grid, layer.mu_hat[static_cast<std::size_t>(i)], dnu, v_a);
    path.Y.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 0; k < n; ++k) {
      path.Y[static_cast<std::size_t>(k) + 1] =
          path.Y[static_cast<std::size_t>(k)] + dnu[static_cast<std::size_t>(k)];
    }
    path.Z.assign(static_cast<std::size_t>(n) + 1, 1.0);
    path.dB.assign(static_cast<std::size_t>(n), 0.0);
    path.dW = dnu;
    path.dY = dnu;
  }
  return ens;
}

}  // namespace

Example2Report run_example2_at_delta(const Config& cfg, double delta, bool with_residual,
                                     const std::string& out_dir) {
  const Ex2Params p = parse_ex2(cfg, delta);
  const int m = steps_per_delay_for(p.delta, p.dt);
  const TimeGrid grid = build_grid(p.T, p.delta, m);
  const int n = grid.steps;

  Example2Report rep;
  rep.delta = p.delta;
  rep.dt = grid.dt;
  rep.config_hash = cfg.hash();

  Ex2Paths layer;
  {
    StageTimer timer("filter layer");
    layer = simulate_filter_layer(p, grid);
  }

  const std::vector<double> q_ref = refined_adjoint_ode(p.r0, 0.5, grid, 10);
  rep.q0_refined = q_ref[0];

  const Model model_adj = make_investment_adjoint_model(p.r0, 0.5);
  const Control control_a =
      Control::deterministic([p](double t) { return p.a(t); }, [](double) { return 0.0; });

  ForwardEnsemble ens_adj = assemble_adjoint_ensemble(p, grid, layer);
  RegressionConfig rcfg;
  rcfg.degree = p.basis_degree;
  rcfg.intercept_only = p.intercept_basis;

  PSolution psol;
  AbsdeSolution adj;
  {
    StageTimer timer("adjoint solve");
    psol = solve_p_equation(model_adj, control_a, ens_adj, rcfg);
    adj = solve_adjoint(model_adj, control_a, ens_adj, psol, rcfg);
  }
  {
    std::vector<double> q0(static_cast<std::size_t>(p.n_paths));
    for (int i = 0; i < p.n_paths; ++i) {
      q0[static_cast<std::size_t>(i)] = adj.q[static_cast<std::size_t>(i)][0];
    }
    rep.q0 = mean_se(q0).mean;
  }

  // Control from the stationarity formula, wealth under it, cost columns.
  std::vector<std::vector<double>> v(static_cast<std::size_t>(p.n_paths),
                                     std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
  std::vector<double> col1(static_cast<std::size_t>(p.n_paths));
  std::vector<double> col2(static_cast<std::size_t>(p.n_paths));
  rep.per_path_j.resize(static_cast<std::size_t>(p.n_paths));
  {
    StageTimer timer("wealth under control");
    for (int i = 0; i < p.n_paths; ++i) {
      const auto& mu_hat = layer.mu_hat[static_cast<std::size_t>(i)];
      auto& vi = v[static_cast<std::size_t>(i)];
      for (int k = 0; k <= n; ++k) {
        vi[static_cast<std::size_t>(k)] =
            (mu_hat[static_cast<std::size_t>(k)] - p.r0) * q_ref[static_cast<std::size_t>(k)] +
            p.a(grid.time(k));
      }
      const std::vector<double> wealth =
          simulate_wealth(p, grid, mu_hat, layer.dnu[static_cast<std::size_t>(i)], vi);
      double acc = 0.0;
      for (int k = 0; k <= n; ++k) {
        const double w = (k == 0 || k == n) ? 0.5 : 1.0;
        const double dev = vi[static_cast<std::size_t>(k)] - p.a(grid.time(k));
        acc -= w * dev * dev * grid.dt;
      }
      col1[static_cast<std::size_t>(i)] = acc;
      col2[static_cast<std::size_t>(i)] = wealth[static_cast<std::size_t>(n)];
      rep.per_path_j[static_cast<std::size_t>(i)] = acc + wealth[static_cast<std::size_t>(n)];
    }
  }
  const MeanSe m1 = mean_se(col1);
  const MeanSe m2 = mean_se(col2);
  const MeanSe mj = mean_se(rep.per_path_j);
  rep.cost_term = m1.mean;
  rep.cost_term_se = m1.se;
  rep.e_xT = m2.mean;
  rep.e_xT_se = m2.se;
  rep.j_sum = mj.mean;
  rep.j_sum_se = mj.se;
  rep.j_half = 0.5 * mj.mean;

  if (with_residual) {
    StageTimer timer("stationarity residual");
    // Tested in the convention whose running cost is -(v-a)^2 and terminal
    // cost x, i.e. twice the solved adjoint; the maximizer is unchanged.
    auto build = [&](double shift) {
      std::vector<std::vector<double>> values(
          static_cast<std::size_t>(n),
          std::vector<double>(static_cast<std::size_t>(p.n_paths), 0.0));
      for (int k = 0; k < n; ++k) {
        const double t = grid.time(k);
        const double s = p.sigma(t);
        for (int i = 0; i < p.n_paths; ++i) {
          const double mu_hat = layer.mu_hat[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
          const double vk = v[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] + shift;
          const double q_ls = adj.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
          const double rb_ls =
              adj.rbar[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
          values[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] =
              2.0 * (mu_hat - p.r0) * q_ls + 2.0 * s * rb_ls - 2.0 * (vk - p.a(t));
        }
      }
      return values;
    };
    std::vector<std::vector<std::vector<double>>> features(
        static_cast<std::size_t>(n),
        std::vector<std::vector<double>>(static_cast<std::size_t>(p.n_paths)));
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < p.n_paths; ++i) {
        features[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = {
            layer.mu_hat[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]};
      }
    }
    rep.residual = residual_report_from_values(build(0.0), features, grid, 2);
    rep.residual_perturbed = residual_report_from_values(build(p.perturbation), features, grid, 2);
  }

  if (!out_dir.empty()) {
    const std::string comment = run_comment(cfg);
    {
      CsvWriter csv(out_dir + "/filter.csv");
      csv.comment(comment);
      csv.header({"path", "k", "t", "mu_hat", "gamma"});
      for (int i = 0; i < p.n_paths; ++i) {
        for (int k = 0; k <= n; ++k) {
          csv.row({static_cast<double>(i), static_cast<double>(k), grid.time(k),
                   layer.mu_hat[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                   layer.riccati.at(k)});
        }
      }
    }
    absde_to_csv(adj, psol, ens_adj, out_dir + "/adjoint.csv", comment);
    {
      CsvWriter csv(out_dir + "/example2.csv");
      csv.comment(comment);
      csv.header({"delta", "cost_term", "cost_term_se", "e_xT", "e_xT_se", "J_sum", "J_sum_se",
                  "J_half", "q0", "q0_refined"});
      csv.row({rep.delta, rep.cost_term, rep.cost_term_se, rep.e_xT, rep.e_xT_se, rep.j_sum,
               rep.j_sum_se, rep.j_half, rep.q0, rep.q0_refined});
    }
    if (with_residual) {
      rep.residual.to_csv(out_dir + "/smp_residual.csv", comment);
      rep.residual_perturbed.to_csv(out_dir + "/smp_residual_perturbed.csv", comment);
    }
  }
  return rep;
}

Example2Report run_example2(const Config& cfg) {
  cfg.require_known_keys(experiment_keys());
  return run_example2_at_delta(cfg, cfg.get_double("delta", 0.4),
                               cfg.get_bool("with_residual", true),
                               cfg.get_string("out_dir", ""));
}

SweepReport run_delay_sweep(const Config& cfg) {
  cfg.require_known_keys(experiment_keys());
  const std::vector<double> deltas =
      cfg.get_double_list("delta_list", {0.38, 0.40, 0.42, 0.44, 0.48});
  const double dt = cfg.get_double("dt", 0.02);

  SweepReport out;
  for (double delta : deltas) {
    try {
      steps_per_delay_for(delta, dt);
    } catch (const alignment_error&) {
      std::fprintf(stderr, "[dsmp] delay sweep: skipping misaligned delta %.17g\n", delta);
      out.skipped.push_back(delta);
      continue;
    }
    out.rows.push_back(run_example2_at_delta(cfg, delta, false, ""));
  }

  for (std::size_t i = 0; i + 1 < out.rows.size(); ++i) {
    const auto& a = out.rows[i].per_path_j;
    const auto& b = out.rows[i + 1].per_path_j;
    std::vector<double> diff(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) diff[k] = a[k] - b[k];
    const MeanSe ms = mean_se(diff);
    SweepGap gap;
    gap.gap = ms.mean;
    gap.std_error = ms.se;
    gap.significant = ms.mean > 2.0 * ms.se;
    if (ms.mean <= 0.0) out.monotone_decreasing = false;
    if (gap.significant) ++out.significant_gaps;
    out.gaps.push_back(gap);
  }

  const std::string out_dir = cfg.get_string("out_dir", "");
  if (!out_dir.empty() && !out.rows.empty()) {
    CsvWriter csv(out_dir + "/delay_sweep.csv");
    csv.comment(run_comment(cfg));
    csv.header({"delta", "cost_term", "cost_term_se", "e_xT", "e_xT_se", "J_sum", "J_sum_se",
                "J_half"});
    for (const auto& row : out.rows) {
      csv.row({row.delta, row.cost_term, row.cost_term_se, row.e_xT, row.e_xT_se, row.j_sum,
               row.j_sum_se, row.j_half});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Filtered nonlinear example
// ---------------------------------------------------------------------------

namespace {

struct Ex1Params {
  double T, delta, dt;
  int n_paths;
  std::uint64_t seed;
  Example1Params model;
  int picard_iterations;
  int probe_count;
  double probe_epsilon;
  int basis_degree;
  int y_lag;
};

Ex1Params parse_ex1(const Config& cfg) {
  Ex1Params p;
  p.T = cfg.get_double("T", 1.0);
  p.delta = cfg.get_double("delta", 0.25);
  p.dt = cfg.get_double("dt", 0.05);
  p.n_paths = checked_paths(cfg, 4000);
  p.seed = cfg.get_u64("master_seed", 12345);
  p.model.a = cfg.get_double("ex1_a", 0.3);
  p.model.b = cfg.get_double("ex1_b", 0.5);
  p.model.sigma0 = cfg.get_double("ex1_sigma0", 0.2);
  p.model.theta = cfg.get_double("ex1_theta", 0.2);
  p.model.gamma = cfg.get_double("ex1_gamma", 0.1);
  p.model.lambda = cfg.get_double("ex1_lambda", 0.5);
  p.model.xi = cfg.get_double("ex1_xi", 1.0);
  p.model.delta = p.delta;
  p.model.v_lo = cfg.get_double("v_lo", -2.0);
  p.model.v_hi = cfg.get_double("v_hi", 2.0);
  p.picard_iterations = cfg.get_int("picard_iterations", 2);
  p.probe_count = cfg.get_int("probe_count", 8);
  p.probe_epsilon = cfg.get_double("probe_epsilon", 0.05);
  p.basis_degree = cfg.get_int("basis_degree", 2);
  p.y_lag = cfg.get_int("y_lag", -1);  // -1: use the delay shift
  return p;
}

// Frozen per-node feedback maps of the observation history.
struct FeedbackPolicy {
  std::vector<FitResult> fits;  // empty: control identically zero
  std::vector<int> y_lags;
  double scale = 1.0;
  ControlSet clamp;

  double eval(int k, const PathState& so_far) const {
    if (fits.empty()) return clamp.clamp(0.0);
    std::vector<double> feats;
    feats.reserve(y_lags.size());
    for (int lag : y_lags) {
      const int kk = std::max(0, k - lag);
      feats.push_back(so_far.Y[static_cast<std::size_t>(kk)]);
    }
    return clamp.clamp(scale * fits[static_cast<std::size_t>(k)].evaluate(feats));
  }
};

struct PolicyRun {
  ForwardEnsemble ens;
  Control control;
};

PolicyRun simulate_under_policy(const Model& model, const FeedbackPolicy& policy,
                                const Control& bump, double bump_eps, const TimeGrid& grid,
                                std::uint64_t seed, int n_paths) {
  PolicyRun run;
  run.ens.grid = grid;
  run.ens.measure = Measure::physical;
  run.ens.master_seed = seed;
  run.ens.paths.resize(static_cast<std::size_t>(n_paths));
  std::vector<std::vector<double>> values(static_cast<std::size_t>(n_paths));
  for (int i = 0; i < n_paths; ++i) {
    const NoisePath noise =
        sample_noise(grid, SeedSpec{seed, static_cast<std::uint64_t>(i)}, model.jump_intensity,
                     model.marks);
    auto policy_fn = [&](int k, const PathState& so_far) {
      double u = policy.eval(k, so_far);
      if (bump_eps != 0.0) u = model.control_set.clamp(u + bump_eps * bump.at(0, k, grid));
      return u;
    };
    run.ens.paths[static_cast<std::size_t>(i)] = simulate_path_with_policy(
        model, policy_fn, model.eta, grid, noise, Measure::physical,
        &values[static_cast<std::size_t>(i)]);
  }
  run.control = Control::feedback(std::move(values), model.eta);
  return run;
}

}  // namespace

Example1Report run_example1(const Config& cfg) {
  cfg.require_known_keys(experiment_keys());
  const Ex1Params p = parse_ex1(cfg);
  const Model model = make_example1_model(p.model);
  const int m = steps_per_delay_for(p.delta, p.dt);
  const TimeGrid grid = build_grid(p.T, p.delta, m);
  const int n = grid.steps;

  GConditionConfig gcfg;
  gcfg.y_lags = {0, p.y_lag >= 0 ? p.y_lag : grid.steps_per_delay};
  gcfg.degree = p.basis_degree;
  RegressionConfig rcfg;
  rcfg.degree = p.basis_degree;

  FeedbackPolicy policy;
  policy.y_lags = gcfg.y_lags;
  policy.scale = -0.5 * p.model.b;
  policy.clamp = model.control_set;

  const Control no_bump = Control::zero();

  PolicyRun run = simulate_under_policy(model, policy, no_bump, 0.0, grid, p.seed, p.n_paths);
  PSolution psol;
  AbsdeSolution adj;
  for (int pass = 0; pass < p.picard_iterations; ++pass) {
    StageTimer timer("picard pass");
    psol = solve_p_equation(model, run.control, run.ens, rcfg);
    adj = solve_adjoint(model, run.control, run.ens, psol, rcfg);
    policy.fits.assign(static_cast<std::size_t>(n) + 1, FitResult{});
    std::vector<double> qk(static_cast<std::size_t>(p.n_paths));
    for (int k = 0; k <= n; ++k) {
      for (int i = 0; i < p.n_paths; ++i) {
        qk[static_cast<std::size_t>(i)] =
            adj.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
      policy.fits[static_cast<std::size_t>(k)] =
          polynomial_regression(observation_features(run.ens, gcfg, k), qk, gcfg.degree);
    }
    run = simulate_under_policy(model, policy, no_bump, 0.0, grid, p.seed, p.n_paths);
  }

  // Final solve on the ensemble actually produced by the candidate control.
  psol = solve_p_equation(model, run.control, run.ens, rcfg);
  adj = solve_adjoint(model, run.control, run.ens, psol, rcfg);

  Example1Report rep;
  rep.config_hash = cfg.hash();
  const CostEstimate cost = estimate_cost(model, run.control, run.ens);
  rep.j_value = cost.value;
  rep.j_std_error = cost.std_error;
  for (int i = 0; i < p.n_paths; ++i) {
    rep.terminal_gap = std::max(
        rep.terminal_gap,
        std::abs(adj.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] - 1.0));
  }
  rep.residual = hamiltonian_u_residual(model, run.control, run.ens, adj, psol, gcfg);

  const std::vector<double> base_cost = pathwise_cost(model, run.control, run.ens);
  const std::vector<Control> bumps = standard_directions(p.probe_count, p.T);
  for (int d = 0; d < static_cast<int>(bumps.size()); ++d) {
    PolicyRun bumped = simulate_under_policy(model, policy, bumps[static_cast<std::size_t>(d)],
                                             p.probe_epsilon, grid, p.seed, p.n_paths);
    const std::vector<double> bumped_cost = pathwise_cost(model, bumped.control, bumped.ens);
    std::vector<double> diff(static_cast<std::size_t>(p.n_paths));
    for (int i = 0; i < p.n_paths; ++i) {
      diff[static_cast<std::size_t>(i)] = bumped_cost[static_cast<std::size_t>(i)] -
                                          base_cost[static_cast<std::size_t>(i)];
    }
    const MeanSe ms = mean_se(diff);
    ProbeResult probe;
    probe.direction = d;
    probe.epsilon = p.probe_epsilon;
    probe.delta_j = ms.mean;
    probe.std_error = ms.se;
    rep.probes.push_back(probe);
  }

  const std::string out_dir = cfg.get_string("out_dir", "");
  if (!out_dir.empty()) {
    const std::string comment = run_comment(cfg);
    rep.residual.to_csv(out_dir + "/smp_residual.csv", comment);
    ensemble_to_csv(run.ens, nullptr, out_dir + "/ensemble.csv", comment);
    absde_to_csv(adj, psol, run.ens, out_dir + "/adjoint.csv", comment);
    CsvWriter csv(out_dir + "/example1.csv");
    csv.comment(comment);
    csv.header({"J", "J_se", "terminal_gap", "max_residual"});
    csv.row({rep.j_value, rep.j_std_error, rep.terminal_gap, rep.residual.max_abs_residual});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Gateaux probe
// ---------------------------------------------------------------------------

std::vector<GateauxRow> run_gateaux_probe(const Model& m, const Control& u, double epsilon,
                                          int directions, const TimeGrid& grid,
                                          std::uint64_t master_seed, int n_paths) {
  const ForwardEnsemble base =
      simulate_ensemble(m, u, grid, master_seed, n_paths, Measure::reference);
  const std::vector<double> base_cost = pathwise_cost(m, u, base);

  std::vector<GateauxRow> rows;
  const std::vector<Control> dirs = standard_directions(directions, grid.horizon);
  for (int d = 0; d < static_cast<int>(dirs.size()); ++d) {
    const Control& w = dirs[static_cast<std::size_t>(d)];
    const VariationalPaths var = simulate_variational(m, u, w, base, m.second_order);
    const std::vector<double> j1 = pathwise_j1(m, u, w, base, var);
    const std::vector<double> j2 =
        m.second_order ? pathwise_j2(m, u, w, base, var) : std::vector<double>(j1.size(), 0.0);

    const Control up = control_axpy(u, epsilon, w);
    const Control dn = control_axpy(u, -epsilon, w);
    const ForwardEnsemble ens_up =
        simulate_ensemble(m, up, grid, master_seed, n_paths, Measure::reference);
    const ForwardEnsemble ens_dn =
        simulate_ensemble(m, dn, grid, master_seed, n_paths, Measure::reference);
    const std::vector<double> cost_up = pathwise_cost(m, up, ens_up);
    const std::vector<double> cost_dn = pathwise_cost(m, dn, ens_dn);

    const std::size_t N = base_cost.size();
    std::vector<double> fd1(N), fd2(N), d1(N), d2(N);
    for (std::size_t i = 0; i < N; ++i) {
      fd1[i] = (cost_up[i] - base_cost[i]) / epsilon;
      fd2[i] = (cost_up[i] - 2.0 * base_cost[i] + cost_dn[i]) / (epsilon * epsilon);
      d1[i] = fd1[i] - j1[i];
      d2[i] = fd2[i] - 2.0 * j2[i];
    }

    GateauxRow row;
    row.direction = d;
    row.epsilon = epsilon;
    const MeanSe mj1 = mean_se(j1), mj2 = mean_se(j2);
    const MeanSe mf1 = mean_se(fd1), mf2 = mean_se(fd2);
    const MeanSe md1 = mean_se(d1), md2 = mean_se(d2);
    row.j1 = mj1.mean;
    row.j1_se = mj1.se;
    row.j2 = mj2.mean;
    row.j2_se = mj2.se;
    row.fd_j1 = mf1.mean;
    row.fd_j1_se = mf1.se;
    row.fd_j2 = mf2.mean;
    row.fd_j2_se = mf2.se;
    row.diff1 = md1.mean;
    row.diff1_se = md1.se;
    row.diff2 = md2.mean;
    row.diff2_se = md2.se;
    rows.push_back(row);
  }
  return rows;
}

void gateaux_rows_to_csv(const std::vector<GateauxRow>& rows, const std::string& file,
                         const std::string& comment) {
  CsvWriter csv(file);
  if (!comment.empty()) csv.comment(comment);
  csv.header({"direction_id", "epsilon", "J1", "J1_se", "J2", "J2_se", "fd_J1", "fd_J1_se",
              "fd_J2", "fd_J2_se", "diff1", "diff1_se", "diff2", "diff2_se"});
  for (const auto& r : rows) {
    csv.row({static_cast<double>(r.direction), r.epsilon, r.j1, r.j1_se, r.j2, r.j2_se, r.fd_j1,
             r.fd_j1_se, r.fd_j2, r.fd_j2_se, r.diff1, r.diff1_se, r.diff2, r.diff2_se});
  }
}

}  // namespace dsmp
