#include "dsmp/absde.hpp"

#include <cmath>

#include "dsmp/csv.hpp"

namespace dsmp {

namespace {

FitResult condexp(const std::vector<std::vector<double>>& features,
                  const std::vector<double>& values, const RegressionConfig& cfg) {
  if (cfg.intercept_only) return intercept_regression(values);
  return polynomial_regression(features, values, cfg.degree);
}

// Count and mark-weighted sum of jumps of path p inside step k.
struct StepJumps {
  int count = 0;
  double mark_sum = 0.0;
};

StepJumps jumps_in_step(const PathState& p, int k) {
  StepJumps out;
  for (const auto& ev : p.jumps) {
    if (ev.step == k) {
      ++out.count;
      out.mark_sum += ev.mark;
    } else if (ev.step > k) {
      break;
    }
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> node_features(const Model& m, const ForwardEnsemble& ens, int k) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(ens.n_paths()));
  for (int i = 0; i < ens.n_paths(); ++i) {
    const PathState& p = ens.paths[static_cast<std::size_t>(i)];
    rows[static_cast<std::size_t>(i)] = {p.x[static_cast<std::size_t>(k)],
                                         ens.x_delayed(m, i, k),
                                         p.Y[static_cast<std::size_t>(k)]};
  }
  return rows;
}

PSolution solve_p_equation(const Model& m, const Control& control, const ForwardEnsemble& ens,
                           const RegressionConfig& cfg) {
  const int n = ens.grid.steps;
  const int paths = ens.n_paths();
  const double dt = ens.grid.dt;

  PSolution sol;
  sol.P.assign(static_cast<std::size_t>(paths),
               std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
  sol.Q = sol.P;
  sol.Qt = sol.P;

  for (int i = 0; i < paths; ++i) {
    sol.P[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] =
        m.terminal.value(ens.paths[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(n)]);
  }

  std::vector<double> target(static_cast<std::size_t>(paths));
  std::vector<double> run_cost(static_cast<std::size_t>(paths));
  std::vector<double> wtarget(static_cast<std::size_t>(paths));
  std::vector<double> btarget(static_cast<std::size_t>(paths));

  for (int k = n - 1; k >= 0; --k) {
    const auto features = node_features(m, ens, k);
    const double t = ens.grid.time(k);
    for (int i = 0; i < paths; ++i) {
      const PathState& p = ens.paths[static_cast<std::size_t>(i)];
      const double pn = sol.P[static_cast<std::size_t>(i)][static_cast<std::size_t>(k) + 1];
      const double u = control.at(i, k, ens.grid);
      const double ud = control.at(i, k - ens.grid.steps_per_delay, ens.grid);
      run_cost[static_cast<std::size_t>(i)] =
          m.cost.value(t, p.x[static_cast<std::size_t>(k)], u, ud);
      target[static_cast<std::size_t>(i)] = pn + run_cost[static_cast<std::size_t>(i)] * dt;
    }
    const FitResult fit_p = condexp(features, target, cfg);
    // Center the integrand targets at the fitted conditional mean: the
    // increments are conditionally centered, so this changes nothing in
    // expectation and removes the dominant regression noise.
    for (int i = 0; i < paths; ++i) {
      const PathState& p = ens.paths[static_cast<std::size_t>(i)];
      const double pn = sol.P[static_cast<std::size_t>(i)][static_cast<std::size_t>(k) + 1];
      const double centered = pn - (fit_p.fitted[static_cast<std::size_t>(i)] -
                                    run_cost[static_cast<std::size_t>(i)] * dt);
      wtarget[static_cast<std::size_t>(i)] = centered * p.dW[static_cast<std::size_t>(k)];
      btarget[static_cast<std::size_t>(i)] = centered * p.dB[static_cast<std::size_t>(k)];
    }
    const FitResult fit_w = condexp(features, wtarget, cfg);
    const FitResult fit_b = condexp(features, btarget, cfg);
    sol.rank_warning = sol.rank_warning || fit_p.rank_deficient || fit_w.rank_deficient ||
                       fit_b.rank_deficient;
    for (int i = 0; i < paths; ++i) {
      sol.P[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          fit_p.fitted[static_cast<std::size_t>(i)];
      sol.Qt[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          fit_w.fitted[static_cast<std::size_t>(i)] / dt;
      sol.Q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          fit_b.fitted[static_cast<std::size_t>(i)] / dt;
    }
  }
  return sol;
}

AbsdeSolution solve_adjoint(const Model& m, const Control& control, const ForwardEnsemble& ens,
                            const PSolution& psol, const RegressionConfig& cfg) {
  const int n = ens.grid.steps;
  const int mshift = ens.grid.steps_per_delay;
  const int paths = ens.n_paths();
  const double dt = ens.grid.dt;
  const double lambda = m.jump_intensity;
  const bool constant_marks = m.marks.kind == MarkDistribution::Kind::constant;

  if (!m.drift.has_first() || !m.diffusion_b.has_first() || !m.diffusion_w.has_first()) {
    throw std::domain_error("solve_adjoint: model lacks first derivatives");
  }

  AbsdeSolution sol;
  sol.q.assign(static_cast<std::size_t>(paths),
               std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
  sol.r = sol.q;
  sol.rbar = sol.q;
  sol.alpha = sol.q;

  for (int i = 0; i < paths; ++i) {
    sol.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] = m.terminal.dx(
        ens.paths[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(n)]);
  }

  // Coefficient arguments at node j of path i.
  auto args_at = [&](int i, int j, double& t, double& x, double& xd, double& u, double& ud) {
    t = ens.grid.time(j);
    x = ens.paths[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(j)];
    xd = ens.x_delayed(m, i, j);
    u = control.at(i, j, ens.grid);
    ud = control.at(i, j - mshift, ens.grid);
  };

  std::vector<double> tq(static_cast<std::size_t>(paths));
  std::vector<double> tb(static_cast<std::size_t>(paths));
  std::vector<double> tw(static_cast<std::size_t>(paths));
  std::vector<double> tj(static_cast<std::size_t>(paths));
  std::vector<double> tadv(static_cast<std::size_t>(paths));

  for (int k = n - 1; k >= 0; --k) {
    const auto features = node_features(m, ens, k);

    const bool have_advance = k + mshift <= n;
    for (int i = 0; i < paths; ++i) {
      tq[static_cast<std::size_t>(i)] =
          sol.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k) + 1];
    }
    const FitResult fit_q = condexp(features, tq, cfg);
    for (int i = 0; i < paths; ++i) {
      const PathState& p = ens.paths[static_cast<std::size_t>(i)];
      // Centered integrand targets, as in the auxiliary equation.
      const double qn = sol.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k) + 1] -
                        fit_q.fitted[static_cast<std::size_t>(i)];
      tb[static_cast<std::size_t>(i)] = qn * p.dB[static_cast<std::size_t>(k)];
      tw[static_cast<std::size_t>(i)] = qn * p.dW[static_cast<std::size_t>(k)];
      if (lambda > 0.0) {
        const StepJumps sj = jumps_in_step(p, k);
        const double compensated =
            constant_marks ? (static_cast<double>(sj.count) - lambda * dt)
                           : (sj.mark_sum - lambda * m.marks.mean_of([](double z) { return z; }) * dt);
        tj[static_cast<std::size_t>(i)] = qn * compensated;
      }
      if (have_advance) {
        // Anticipated payload at node j = k + m; the delayed arguments there
        // sit exactly at node k.
        const int j = k + mshift;
        double t, x, xd, u, ud;
        args_at(i, j, t, x, xd, u, ud);
        double payload =
            m.drift.deriv(Var::xd, t, x, xd, u, ud) * sol.q_ext(i, j) +
            m.diffusion_b.deriv(Var::xd, t, x, xd, u, ud) * sol.r_ext(i, j) +
            m.diffusion_w.deriv(Var::xd, t, x, xd, u, ud) *
                sol.rbar[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (lambda > 0.0 && m.jump.has_first()) {
          const double alpha_j =
              sol.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          const double gxd = constant_marks
                                 ? m.jump.deriv(Var::xd, t, x, xd, u, ud, m.marks.a)
                                 : m.marks.mean_of([&](double z) {
                                     return m.jump.deriv(Var::xd, t, x, xd, u, ud, z) * z;
                                   });
          payload += lambda * gxd * alpha_j;
        }
        tadv[static_cast<std::size_t>(i)] = payload;
      }
    }

    const FitResult fit_b = condexp(features, tb, cfg);
    const FitResult fit_w = condexp(features, tw, cfg);
    sol.rank_warning =
        sol.rank_warning || fit_q.rank_deficient || fit_b.rank_deficient || fit_w.rank_deficient;

    FitResult fit_j;
    if (lambda > 0.0) {
      fit_j = condexp(features, tj, cfg);
      sol.rank_warning = sol.rank_warning || fit_j.rank_deficient;
    }
    FitResult fit_adv;
    if (have_advance) {
      fit_adv = condexp(features, tadv, cfg);
      sol.rank_warning = sol.rank_warning || fit_adv.rank_deficient;
    }

    for (int i = 0; i < paths; ++i) {
      const double r_k = fit_b.fitted[static_cast<std::size_t>(i)] / dt;
      const double rbar_k = fit_w.fitted[static_cast<std::size_t>(i)] / dt;
      double alpha_k = 0.0;
      if (lambda > 0.0) {
        const double denom = constant_marks
                                 ? lambda * dt
                                 : lambda * m.marks.mean_of([](double z) { return z * z; }) * dt;
        alpha_k = fit_j.fitted[static_cast<std::size_t>(i)] / denom;
      }
      const double advance = have_advance ? fit_adv.fitted[static_cast<std::size_t>(i)] : 0.0;
      const double qplus = fit_q.fitted[static_cast<std::size_t>(i)];

      double t, x, xd, u, ud;
      args_at(i, k, t, x, xd, u, ud);
      double driver = m.drift.deriv(Var::x, t, x, xd, u, ud) * qplus +
                      m.diffusion_b.deriv(Var::x, t, x, xd, u, ud) * r_k +
                      m.diffusion_w.deriv(Var::x, t, x, xd, u, ud) * rbar_k +
                      m.cost.dx(t, x, u, ud) +
                      m.obs.hx(t, x) *
                          psol.Qt[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] +
                      advance;
      if (lambda > 0.0 && m.jump.has_first()) {
        const double gx = constant_marks
                              ? m.jump.deriv(Var::x, t, x, xd, u, ud, m.marks.a)
                              : m.marks.mean_of([&](double z) {
                                  return m.jump.deriv(Var::x, t, x, xd, u, ud, z) * z;
                                });
        driver += lambda * gx * alpha_k;
      }

      sol.r[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = r_k;
      sol.rbar[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = rbar_k;
      sol.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = alpha_k;
      sol.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = qplus + dt * driver;
    }
  }
  return sol;
}

DualityResult duality_check(const Model& m, const Control& control, const Control& direction,
                            const ForwardEnsemble& ens,
                            const std::vector<std::vector<double>>& x1,
                            const AbsdeSolution& adj, const PSolution& psol) {
  const int n = ens.grid.steps;
  const int mshift = ens.grid.steps_per_delay;
  const int paths = ens.n_paths();
  const double dt = ens.grid.dt;
  const double lambda = m.jump_intensity;
  const bool constant_marks = m.marks.kind == MarkDistribution::Kind::constant;

  std::vector<double> diff(static_cast<std::size_t>(paths));
  double lhs_acc = 0.0, rhs_acc = 0.0;

  for (int i = 0; i < paths; ++i) {
    const double lhs = x1[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] *
                       adj.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)];
    double rhs = 0.0;
    for (int k = 0; k < n; ++k) {
      const double t = ens.grid.time(k);
      const double x = ens.paths[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(k)];
      const double xd = ens.x_delayed(m, i, k);
      const double u = control.at(i, k, ens.grid);
      const double ud = control.at(i, k - mshift, ens.grid);
      const double v = direction.at(i, k, ens.grid);
      const double vd = k - mshift >= 0 ? direction.at(i, k - mshift, ens.grid) : 0.0;

      const double lx = m.cost.dx(t, x, u, ud);
      const double hx = m.obs.hx(t, x);
      const double qt = psol.Qt[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      double term = -(lx + qt * hx) * x1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      term += (m.drift.deriv(Var::u, t, x, xd, u, ud) * v +
               m.drift.deriv(Var::ud, t, x, xd, u, ud) * vd) *
              adj.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      term += (m.diffusion_b.deriv(Var::u, t, x, xd, u, ud) * v +
               m.diffusion_b.deriv(Var::ud, t, x, xd, u, ud) * vd) *
              adj.r[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      term += (m.diffusion_w.deriv(Var::u, t, x, xd, u, ud) * v +
               m.diffusion_w.deriv(Var::ud, t, x, xd, u, ud) * vd) *
              adj.rbar[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      if (lambda > 0.0 && m.jump.has_first()) {
        const double gu = constant_marks
                              ? m.jump.deriv(Var::u, t, x, xd, u, ud, m.marks.a)
                              : m.marks.mean_of([&](double z) {
                                  return m.jump.deriv(Var::u, t, x, xd, u, ud, z) * z;
                                });
        const double gud = constant_marks
                               ? m.jump.deriv(Var::ud, t, x, xd, u, ud, m.marks.a)
                               : m.marks.mean_of([&](double z) {
                                   return m.jump.deriv(Var::ud, t, x, xd, u, ud, z) * z;
                                 });
        term += lambda * (gu * v + gud * vd) *
                adj.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
      rhs += term * dt;
    }
    diff[static_cast<std::size_t>(i)] = lhs - rhs;
    lhs_acc += lhs;
    rhs_acc += rhs;
  }

  DualityResult res;
  res.lhs = lhs_acc / static_cast<double>(paths);
  res.rhs = rhs_acc / static_cast<double>(paths);
  res.residual = res.lhs - res.rhs;
  double var = 0.0;
  const double mean = res.residual;
  for (double d : diff) var += (d - mean) * (d - mean);
  var = paths > 1 ? var / static_cast<double>(paths - 1) : 0.0;
  res.std_error = std::sqrt(var / static_cast<double>(paths));
  return res;
}

void absde_to_csv(const AbsdeSolution& adj, const PSolution& psol, const ForwardEnsemble& ens,
                  const std::string& file, const std::string& comment) {
  CsvWriter csv(file);
  if (!comment.empty()) csv.comment(comment);
  csv.header({"path", "k", "t", "q", "r", "r_bar", "P", "Q_tilde"});
  for (int i = 0; i < ens.n_paths(); ++i) {
    for (int k = 0; k <= ens.grid.steps; ++k) {
      csv.row({static_cast<double>(i), static_cast<double>(k), ens.grid.time(k),
               adj.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
               adj.r[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
               adj.rbar[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
               psol.P[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
               psol.Qt[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]});
    }
  }
}

}  // namespace dsmp
