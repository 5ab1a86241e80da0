#include "dsmp/variational.hpp"

#include <cmath>
#include <stdexcept>

namespace dsmp {

namespace {

// First-derivative row of a coefficient in the driving convention of the
// ensemble: substituted drift for reference-measure ensembles, plain drift
// otherwise. sigma and theta derivatives are convention independent.
double drift_d1(const Model& m, Measure measure, Var v, double t, double x, double xd, double u,
                double ud) {
  if (measure == Measure::reference) return tilde_b_deriv(m, v, t, x, xd, u, ud);
  return m.drift.deriv(v, t, x, xd, u, ud);
}

double drift_d2(const Model& m, Measure measure, Var i, Var j, double t, double x, double xd,
                double u, double ud) {
  if (measure == Measure::reference) return tilde_b_deriv2(m, i, j, t, x, xd, u, ud);
  return m.drift.deriv2(i, j, t, x, xd, u, ud);
}

struct StepArgs {
  double t, x, xd, u, ud;
  double v, vd;       // direction values
  double x1, x1d;     // first variation, current and delayed
};

double first_variation(const std::function<double(Var)>& d, const StepArgs& a) {
  return d(Var::x) * a.x1 + d(Var::xd) * a.x1d + d(Var::u) * a.v + d(Var::ud) * a.vd;
}

// One half of the quadratic form sum_ij f_ij xi_i xi_j with
// xi = (x1, x1_delayed, v, v_delayed).
double half_quadratic(const std::function<double(Var, Var)>& d2, const StepArgs& a) {
  const double xi[4] = {a.x1, a.x1d, a.v, a.vd};
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      acc += d2(static_cast<Var>(i), static_cast<Var>(j)) * xi[i] * xi[j];
    }
  }
  return 0.5 * acc;
}

}  // namespace

std::vector<std::vector<double>> simulate_x1(const Model& m, const Control& u, const Control& v,
                                             const ForwardEnsemble& ens) {
  if (!m.drift.has_first() || !m.diffusion_b.has_first() || !m.diffusion_w.has_first()) {
    throw std::domain_error("simulate_x1: model lacks first derivatives");
  }
  const int n = ens.grid.steps;
  const int mshift = ens.grid.steps_per_delay;
  const double dt = ens.grid.dt;
  const double lambda = m.jump_intensity;

  std::vector<std::vector<double>> x1(
      static_cast<std::size_t>(ens.n_paths()),
      std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));

  for (int i = 0; i < ens.n_paths(); ++i) {
    const PathState& p = ens.paths[static_cast<std::size_t>(i)];
    auto& row = x1[static_cast<std::size_t>(i)];
    std::size_t cursor = 0;
    for (int k = 0; k < n; ++k) {
      StepArgs a;
      a.t = ens.grid.time(k);
      a.x = p.x[static_cast<std::size_t>(k)];
      a.xd = ens.x_delayed(m, i, k);
      a.u = u.at(i, k, ens.grid);
      a.ud = u.at(i, k - mshift, ens.grid);
      a.v = v.at(i, k, ens.grid);
      a.vd = k - mshift >= 0 ? v.at(i, k - mshift, ens.grid) : 0.0;
      a.x1 = row[static_cast<std::size_t>(k)];
      a.x1d = k - mshift >= 0 ? row[static_cast<std::size_t>(k - mshift)] : 0.0;

      const double b1 = first_variation(
          [&](Var w) { return drift_d1(m, ens.measure, w, a.t, a.x, a.xd, a.u, a.ud); }, a);
      const double s1 = first_variation(
          [&](Var w) { return m.diffusion_b.deriv(w, a.t, a.x, a.xd, a.u, a.ud); }, a);
      const double t1 = first_variation(
          [&](Var w) { return m.diffusion_w.deriv(w, a.t, a.x, a.xd, a.u, a.ud); }, a);

      double jump1 = 0.0;
      while (cursor < p.jumps.size() && p.jumps[cursor].step == k) {
        const double z = p.jumps[cursor].mark;
        jump1 += first_variation(
            [&](Var w) { return m.jump.deriv(w, a.t, a.x, a.xd, a.u, a.ud, z); }, a);
        ++cursor;
      }
      if (lambda > 0.0) {
        jump1 -= lambda * dt *
                 m.marks.mean_of([&](double z) {
                   return first_variation(
                       [&](Var w) { return m.jump.deriv(w, a.t, a.x, a.xd, a.u, a.ud, z); }, a);
                 });
      }

      const double driver = ens.measure == Measure::reference
                                ? p.dY[static_cast<std::size_t>(k)]
                                : p.dW[static_cast<std::size_t>(k)];
      row[static_cast<std::size_t>(k) + 1] =
          a.x1 + b1 * dt + s1 * p.dB[static_cast<std::size_t>(k)] + t1 * driver + jump1;
    }
  }
  return x1;
}

std::vector<std::vector<double>> simulate_z1(const Model& m, const ForwardEnsemble& ens,
                                             const std::vector<std::vector<double>>& x1) {
  const int n = ens.grid.steps;
  std::vector<std::vector<double>> z1(
      static_cast<std::size_t>(ens.n_paths()),
      std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
  for (int i = 0; i < ens.n_paths(); ++i) {
    const PathState& p = ens.paths[static_cast<std::size_t>(i)];
    auto& row = z1[static_cast<std::size_t>(i)];
    for (int k = 0; k < n; ++k) {
      const double t = ens.grid.time(k);
      const double x = p.x[static_cast<std::size_t>(k)];
      const double h = m.obs.h(t, x);
      const double hx = m.obs.hx(t, x);
      row[static_cast<std::size_t>(k) + 1] =
          row[static_cast<std::size_t>(k)] +
          (row[static_cast<std::size_t>(k)] * h +
           p.Z[static_cast<std::size_t>(k)] * hx * x1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]) *
              p.dY[static_cast<std::size_t>(k)];
    }
  }
  return z1;
}

std::vector<std::vector<double>> simulate_x2(const Model& m, const Control& u, const Control& v,
                                             const ForwardEnsemble& ens,
                                             const std::vector<std::vector<double>>& x1) {
  if (!m.second_order || !m.drift.has_second() || !m.diffusion_b.has_second() ||
      !m.diffusion_w.has_second()) {
    throw std::domain_error("simulate_x2: model is first-order only");
  }
  const int n = ens.grid.steps;
  const int mshift = ens.grid.steps_per_delay;
  const double dt = ens.grid.dt;
  const double lambda = m.jump_intensity;

  std::vector<std::vector<double>> x2(
      static_cast<std::size_t>(ens.n_paths()),
      std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));

  for (int i = 0; i < ens.n_paths(); ++i) {
    const PathState& p = ens.paths[static_cast<std::size_t>(i)];
    auto& row = x2[static_cast<std::size_t>(i)];
    std::size_t cursor = 0;
    for (int k = 0; k < n; ++k) {
      StepArgs a;
      a.t = ens.grid.time(k);
      a.x = p.x[static_cast<std::size_t>(k)];
      a.xd = ens.x_delayed(m, i, k);
      a.u = u.at(i, k, ens.grid);
      a.ud = u.at(i, k - mshift, ens.grid);
      a.v = v.at(i, k, ens.grid);
      a.vd = k - mshift >= 0 ? v.at(i, k - mshift, ens.grid) : 0.0;
      a.x1 = x1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      a.x1d = k - mshift >= 0
                  ? x1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k - mshift)]
                  : 0.0;
      const double x2k = row[static_cast<std::size_t>(k)];
      const double x2d = k - mshift >= 0 ? row[static_cast<std::size_t>(k - mshift)] : 0.0;

      auto second = [&](auto d1fn, auto d2fn) {
        return d1fn(Var::x) * x2k + d1fn(Var::xd) * x2d +
               half_quadratic([&](Var a_, Var b_) { return d2fn(a_, b_); }, a);
      };

      const double b2 = second(
          [&](Var w) { return drift_d1(m, ens.measure, w, a.t, a.x, a.xd, a.u, a.ud); },
          [&](Var w1, Var w2) {
            return drift_d2(m, ens.measure, w1, w2, a.t, a.x, a.xd, a.u, a.ud);
          });
      const double s2 = second(
          [&](Var w) { return m.diffusion_b.deriv(w, a.t, a.x, a.xd, a.u, a.ud); },
          [&](Var w1, Var w2) { return m.diffusion_b.deriv2(w1, w2, a.t, a.x, a.xd, a.u, a.ud); });
      const double t2 = second(
          [&](Var w) { return m.diffusion_w.deriv(w, a.t, a.x, a.xd, a.u, a.ud); },
          [&](Var w1, Var w2) { return m.diffusion_w.deriv2(w1, w2, a.t, a.x, a.xd, a.u, a.ud); });

      double jump2 = 0.0;
      while (cursor < p.jumps.size() && p.jumps[cursor].step == k) {
        const double z = p.jumps[cursor].mark;
        jump2 += second(
            [&](Var w) { return m.jump.deriv(w, a.t, a.x, a.xd, a.u, a.ud, z); },
            [&](Var w1, Var w2) { return m.jump.deriv2(w1, w2, a.t, a.x, a.xd, a.u, a.ud, z); });
        ++cursor;
      }
      if (lambda > 0.0) {
        jump2 -= lambda * dt *
                 m.marks.mean_of([&](double z) {
                   return second(
                       [&](Var w) { return m.jump.deriv(w, a.t, a.x, a.xd, a.u, a.ud, z); },
                       [&](Var w1, Var w2) {
                         return m.jump.deriv2(w1, w2, a.t, a.x, a.xd, a.u, a.ud, z);
                       });
                 });
      }

      const double driver = ens.measure == Measure::reference
                                ? p.dY[static_cast<std::size_t>(k)]
                                : p.dW[static_cast<std::size_t>(k)];
      row[static_cast<std::size_t>(k) + 1] =
          x2k + b2 * dt + s2 * p.dB[static_cast<std::size_t>(k)] + t2 * driver + jump2;
    }
  }
  return x2;
}

std::vector<std::vector<double>> simulate_z2(const Model& m, const ForwardEnsemble& ens,
                                             const std::vector<std::vector<double>>& x1,
                                             const std::vector<std::vector<double>>& x2,
                                             const std::vector<std::vector<double>>& z1) {
  const int n = ens.grid.steps;
  std::vector<std::vector<double>> z2(
      static_cast<std::size_t>(ens.n_paths()),
      std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
  for (int i = 0; i < ens.n_paths(); ++i) {
    const PathState& p = ens.paths[static_cast<std::size_t>(i)];
    auto& row = z2[static_cast<std::size_t>(i)];
    for (int k = 0; k < n; ++k) {
      const double t = ens.grid.time(k);
      const double x = p.x[static_cast<std::size_t>(k)];
      const double h = m.obs.h(t, x);
      const double hx = m.obs.hx(t, x);
      const double hxx = m.obs.hxx(t, x);
      const double x1k = x1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      const double x2k = x2[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      // epsilon^2 coefficient of Z^eps h(x^eps): Z2 h + Z1 h_x x1
      //   + Z (h_x x2 + h_xx x1^2 / 2).
      const double integrand =
          row[static_cast<std::size_t>(k)] * h +
          z1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * hx * x1k +
          p.Z[static_cast<std::size_t>(k)] * (hx * x2k + 0.5 * hxx * x1k * x1k);
      row[static_cast<std::size_t>(k) + 1] =
          row[static_cast<std::size_t>(k)] + integrand * p.dY[static_cast<std::size_t>(k)];
    }
  }
  return z2;
}

Z1GammaPaths simulate_z1_gamma(const Model& m, const ForwardEnsemble& ens,
                               const std::vector<std::vector<double>>& x1) {
  Z1GammaPaths out;
  out.z1 = simulate_z1(m, ens, x1);
  out.gamma.resize(static_cast<std::size_t>(ens.n_paths()));
  for (int i = 0; i < ens.n_paths(); ++i) {
    const PathState& p = ens.paths[static_cast<std::size_t>(i)];
    out.gamma[static_cast<std::size_t>(i)] =
        simulate_gamma(m, p, x1[static_cast<std::size_t>(i)], ens.grid);
    for (int k = 0; k <= ens.grid.steps; ++k) {
      const double quotient = out.z1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] /
                              p.Z[static_cast<std::size_t>(k)];
      out.max_quotient_gap = std::max(
          out.max_quotient_gap,
          std::abs(quotient -
                   out.gamma[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]));
    }
  }
  return out;
}

VariationalPaths simulate_variational(const Model& m, const Control& u, const Control& v,
                                      const ForwardEnsemble& ens, bool second_order) {
  VariationalPaths out;
  out.x1 = simulate_x1(m, u, v, ens);
  out.z1 = simulate_z1(m, ens, out.x1);
  if (second_order) {
    out.x2 = simulate_x2(m, u, v, ens, out.x1);
    out.z2 = simulate_z2(m, ens, out.x1, out.x2, out.z1);
    out.second_order = true;
  }
  return out;
}

namespace {

GateauxEstimate summarize(const std::vector<double>& per_path) {
  GateauxEstimate est;
  for (double v : per_path) est.value += v;
  est.value /= static_cast<double>(per_path.size());
  double var = 0.0;
  for (double v : per_path) var += (v - est.value) * (v - est.value);
  var = per_path.size() > 1 ? var / static_cast<double>(per_path.size() - 1) : 0.0;
  est.std_error = std::sqrt(var / static_cast<double>(per_path.size()));
  return est;
}

void require_reference(const ForwardEnsemble& ens, const char* who) {
  if (ens.measure != Measure::reference) {
    throw std::invalid_argument(std::string(who) +
                                ": needs a reference-measure ensemble (the density expansion "
                                "is the derivative of the sampled cost only under that law)");
  }
}

}  // namespace

std::vector<double> pathwise_j1(const Model& m, const Control& u, const Control& v,
                                const ForwardEnsemble& ens, const VariationalPaths& var) {
  require_reference(ens, "pathwise_j1");
  const int n = ens.grid.steps;
  const int mshift = ens.grid.steps_per_delay;
  const double dt = ens.grid.dt;

  std::vector<double> out(static_cast<std::size_t>(ens.n_paths()));
  for (int i = 0; i < ens.n_paths(); ++i) {
    const PathState& p = ens.paths[static_cast<std::size_t>(i)];
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 0.5 : 1.0;
      const double t = ens.grid.time(k);
      const double x = p.x[static_cast<std::size_t>(k)];
      const double uu = u.at(i, k, ens.grid);
      const double uud = u.at(i, k - mshift, ens.grid);
      const double vv = v.at(i, k, ens.grid);
      const double vvd = k - mshift >= 0 ? v.at(i, k - mshift, ens.grid) : 0.0;
      const double x1k = var.x1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      const double run = m.cost.value(t, x, uu, uud);
      const double run1 = m.cost.dx(t, x, uu, uud) * x1k + m.cost.du(t, x, uu, uud) * vv +
                          m.cost.dud(t, x, uu, uud) * vvd;
      acc += w * dt *
             (var.z1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * run +
              p.Z[static_cast<std::size_t>(k)] * run1);
    }
    const double xn = p.x[static_cast<std::size_t>(n)];
    acc += var.z1[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] * m.terminal.value(xn);
    acc += p.Z[static_cast<std::size_t>(n)] * m.terminal.dx(xn) *
           var.x1[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

std::vector<double> pathwise_j2(const Model& m, const Control& u, const Control& v,
                                const ForwardEnsemble& ens, const VariationalPaths& var) {
  require_reference(ens, "pathwise_j2");
  if (!var.second_order) throw std::domain_error("pathwise_j2: second-order paths missing");
  const int n = ens.grid.steps;
  const int mshift = ens.grid.steps_per_delay;
  const double dt = ens.grid.dt;

  std::vector<double> out(static_cast<std::size_t>(ens.n_paths()));
  for (int i = 0; i < ens.n_paths(); ++i) {
    const PathState& p = ens.paths[static_cast<std::size_t>(i)];
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 0.5 : 1.0;
      const double t = ens.grid.time(k);
      const double x = p.x[static_cast<std::size_t>(k)];
      const double uu = u.at(i, k, ens.grid);
      const double uud = u.at(i, k - mshift, ens.grid);
      const double vv = v.at(i, k, ens.grid);
      const double vvd = k - mshift >= 0 ? v.at(i, k - mshift, ens.grid) : 0.0;
      const double x1k = var.x1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      const double x2k = var.x2[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];

      const double run = m.cost.value(t, x, uu, uud);
      const double run1 = m.cost.dx(t, x, uu, uud) * x1k + m.cost.du(t, x, uu, uud) * vv +
                          m.cost.dud(t, x, uu, uud) * vvd;
      // epsilon^2 coefficient of the running cost along the expansion.
      const double quad = m.cost.dxx(t, x, uu, uud) * x1k * x1k +
                          2.0 * m.cost.dxu(t, x, uu, uud) * x1k * vv +
                          2.0 * m.cost.dxud(t, x, uu, uud) * x1k * vvd +
                          m.cost.duu(t, x, uu, uud) * vv * vv +
                          2.0 * m.cost.duud(t, x, uu, uud) * vv * vvd +
                          m.cost.dudud(t, x, uu, uud) * vvd * vvd;
      const double run2 = m.cost.dx(t, x, uu, uud) * x2k + 0.5 * quad;

      acc += w * dt *
             (var.z2[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * run +
              var.z1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * run1 +
              p.Z[static_cast<std::size_t>(k)] * run2);
    }
    const double xn = p.x[static_cast<std::size_t>(n)];
    const double x1n = var.x1[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)];
    const double x2n = var.x2[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)];
    acc += var.z2[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] * m.terminal.value(xn);
    acc += var.z1[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] * m.terminal.dx(xn) * x1n;
    acc += p.Z[static_cast<std::size_t>(n)] *
           (m.terminal.dx(xn) * x2n + 0.5 * m.terminal.dxx(xn) * x1n * x1n);
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

GateauxEstimate estimate_j1(const Model& m, const Control& u, const Control& v,
                            const ForwardEnsemble& ens, const VariationalPaths& var) {
  return summarize(pathwise_j1(m, u, v, ens, var));
}

GateauxEstimate estimate_j2(const Model& m, const Control& u, const Control& v,
                            const ForwardEnsemble& ens, const VariationalPaths& var) {
  return summarize(pathwise_j2(m, u, v, ens, var));
}

std::vector<Control> standard_directions(int count, double horizon) {
  std::vector<Control> out;
  out.reserve(static_cast<std::size_t>(count));
  const double pi = 3.14159265358979323846;
  for (int d = 0; d < count; ++d) {
    if (d == 0) {
      out.push_back(Control::deterministic([](double) { return 1.0; }));
    } else if (d == 1) {
      out.push_back(Control::deterministic([horizon](double t) { return t / horizon; }));
    } else if (d == 2) {
      out.push_back(
          Control::deterministic([horizon, pi](double t) { return std::sin(pi * t / horizon); }));
    } else if (d == 3) {
      out.push_back(Control::deterministic(
          [horizon, pi](double t) { return std::cos(2.0 * pi * t / horizon); }));
    } else {
      // Dyadic bumps: indicator of [j/8, (j+1)/8) scaled to the horizon.
      const int j = (d - 4) % 8;
      const double lo = horizon * static_cast<double>(j) / 8.0;
      const double hi = horizon * static_cast<double>(j + 1) / 8.0;
      out.push_back(Control::deterministic(
          [lo, hi](double t) { return (t >= lo && t < hi) ? 1.0 : 0.0; }));
    }
  }
  return out;
}

OptimalityProbe check_local_optimality(const Model& m, const Control& u,
                                       const std::vector<Control>& directions,
                                       const ForwardEnsemble& ens, double j1_tol, double j2_tol) {
  OptimalityProbe probe;
  for (const Control& v : directions) {
    const VariationalPaths var = simulate_variational(m, u, v, ens, m.second_order);
    const GateauxEstimate j1 = estimate_j1(m, u, v, ens, var);
    probe.j1_values.push_back(j1.value);
    probe.j1_errors.push_back(j1.std_error);
    if (std::abs(j1.value) > j1_tol + 4.0 * j1.std_error) probe.j1_zero = false;
    if (m.second_order) {
      const GateauxEstimate j2 = estimate_j2(m, u, v, ens, var);
      probe.j2_values.push_back(j2.value);
      probe.j2_errors.push_back(j2.std_error);
      if (j2.value > j2_tol + 4.0 * j2.std_error) probe.j2_nonpositive = false;
    }
  }
  return probe;
}

}  // namespace dsmp
