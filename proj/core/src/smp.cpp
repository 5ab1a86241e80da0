#include "dsmp/smp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dsmp/csv.hpp"
#include "dsmp/filtering.hpp"

namespace dsmp {

namespace {

double jump_pairing(const Model& m, const HamiltonianInputs& in, Var slot, bool derivative) {
  if (m.jump_intensity <= 0.0) return 0.0;
  const bool constant = m.marks.kind == MarkDistribution::Kind::constant;
  auto eval = [&](double z) {
    return derivative ? m.jump.deriv(slot, in.t, in.x, in.xd, in.u, in.ud, z)
                      : m.jump.value(in.t, in.x, in.xd, in.u, in.ud, z);
  };
  if (constant) return m.jump_intensity * eval(m.marks.a) * in.alpha;
  // Mark-dependent case: integrand taken linear in the mark, scalar
  // representative alpha multiplies the mark-weighted mean.
  return m.jump_intensity * m.marks.mean_of([&](double z) { return eval(z) * z; }) * in.alpha;
}

}  // namespace

double hamiltonian(const Model& m, const HamiltonianInputs& in) {
  double out = m.drift.value(in.t, in.x, in.xd, in.u, in.ud) * in.q +
               m.diffusion_b.value(in.t, in.x, in.xd, in.u, in.ud) * in.r +
               m.diffusion_w.value(in.t, in.x, in.xd, in.u, in.ud) * in.rbar +
               m.cost.value(in.t, in.x, in.u, in.ud) + m.obs.h(in.t, in.x) * in.Qt;
  out += jump_pairing(m, in, Var::x /*unused*/, false);
  return out;
}

double hamiltonian_u(const Model& m, const HamiltonianInputs& in) {
  double out = m.drift.deriv(Var::u, in.t, in.x, in.xd, in.u, in.ud) * in.q +
               m.diffusion_b.deriv(Var::u, in.t, in.x, in.xd, in.u, in.ud) * in.r +
               m.diffusion_w.deriv(Var::u, in.t, in.x, in.xd, in.u, in.ud) * in.rbar +
               m.cost.du(in.t, in.x, in.u, in.ud);
  out += jump_pairing(m, in, Var::u, true);
  return out;
}

double hamiltonian_ud(const Model& m, const HamiltonianInputs& in) {
  double out = m.drift.deriv(Var::ud, in.t, in.x, in.xd, in.u, in.ud) * in.q +
               m.diffusion_b.deriv(Var::ud, in.t, in.x, in.xd, in.u, in.ud) * in.r +
               m.diffusion_w.deriv(Var::ud, in.t, in.x, in.xd, in.u, in.ud) * in.rbar +
               m.cost.dud(in.t, in.x, in.u, in.ud);
  out += jump_pairing(m, in, Var::ud, true);
  return out;
}

void ResidualReport::to_csv(const std::string& file, const std::string& comment) const {
  CsvWriter csv(file);
  if (!comment.empty()) csv.comment(comment);
  csv.header({"k", "t", "residual", "SE", "window_flag"});
  for (const auto& row : rows) {
    csv.row({static_cast<double>(row.k), row.t, row.residual, row.std_error,
             row.coupled ? 1.0 : 0.0});
  }
}

namespace {

HamiltonianInputs node_inputs(const Model& m, const Control& control, const ForwardEnsemble& ens,
                              const AbsdeSolution& adj, const PSolution& psol, int i, int k) {
  const int mshift = ens.grid.steps_per_delay;
  HamiltonianInputs in;
  in.t = ens.grid.time(k);
  in.x = ens.paths[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(k)];
  in.xd = ens.x_delayed(m, i, k);
  in.u = control.at(i, k, ens.grid);
  in.ud = control.at(i, k - mshift, ens.grid);
  in.q = adj.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  in.r = adj.r[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  in.rbar = adj.rbar[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  in.alpha = adj.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  in.Qt = psol.Qt[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  return in;
}

ResidualRow summarize_node(const std::vector<double>& values,
                           const std::vector<std::vector<double>>& features, int degree, int k,
                           double t, bool coupled) {
  const FitResult fit = polynomial_regression(features, values, degree);
  double rms = 0.0, mean = 0.0;
  for (double f : fit.fitted) rms += f * f;
  rms = std::sqrt(rms / static_cast<double>(fit.fitted.size()));
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = values.size() > 1 ? var / static_cast<double>(values.size() - 1) : 0.0;

  ResidualRow row;
  row.k = k;
  row.t = t;
  row.residual = rms;
  row.mean = mean;
  row.std_error = std::sqrt(var / static_cast<double>(values.size()));
  row.coupled = coupled;
  return row;
}

}  // namespace

std::vector<std::vector<double>> observation_features(const ForwardEnsemble& ens,
                                                      const GConditionConfig& cfg, int k) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(ens.n_paths()));
  for (int i = 0; i < ens.n_paths(); ++i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    row.reserve(cfg.y_lags.size());
    for (int lag : cfg.y_lags) {
      const int kk = std::max(0, k - lag);
      row.push_back(ens.paths[static_cast<std::size_t>(i)].Y[static_cast<std::size_t>(kk)]);
    }
  }
  return rows;
}

ResidualReport hamiltonian_u_residual(const Model& m, const Control& control,
                                      const ForwardEnsemble& ens, const AbsdeSolution& adj,
                                      const PSolution& psol, const GConditionConfig& cfg) {
  const int n = ens.grid.steps;
  const int mshift = ens.grid.steps_per_delay;

  ResidualReport report;
  std::vector<double> values(static_cast<std::size_t>(ens.n_paths()));
  for (int k = 0; k < n; ++k) {
    const bool coupled = k + mshift <= n;
    for (int i = 0; i < ens.n_paths(); ++i) {
      double val = hamiltonian_u(m, node_inputs(m, control, ens, adj, psol, i, k));
      if (coupled) {
        val += hamiltonian_ud(m, node_inputs(m, control, ens, adj, psol, i, k + mshift));
      }
      values[static_cast<std::size_t>(i)] = val;
    }
    const auto features = observation_features(ens, cfg, k);
    ResidualRow row = summarize_node(values, features, cfg.degree, k, ens.grid.time(k), coupled);
    report.max_abs_residual = std::max(report.max_abs_residual, row.residual);
    report.max_std_error = std::max(report.max_std_error, row.std_error);
    report.rows.push_back(row);
  }
  return report;
}

ResidualReport residual_report_from_values(
    const std::vector<std::vector<double>>& values,
    const std::vector<std::vector<std::vector<double>>>& features, const TimeGrid& grid,
    int degree) {
  ResidualReport report;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const bool coupled = static_cast<int>(k) + grid.steps_per_delay <= grid.steps;
    ResidualRow row = summarize_node(values[k], features[k], degree, static_cast<int>(k),
                                     grid.time(static_cast<int>(k)), coupled);
    report.max_abs_residual = std::max(report.max_abs_residual, row.residual);
    report.max_std_error = std::max(report.max_std_error, row.std_error);
    report.rows.push_back(row);
  }
  return report;
}

double boundary_violation(const Model& m, const Control& control, const ForwardEnsemble& ens,
                          const AbsdeSolution& adj, const PSolution& psol,
                          const GConditionConfig& cfg, int v_count) {
  const std::vector<double> vg = make_v_grid(m.control_set.lo, m.control_set.hi, v_count);
  const int n = ens.grid.steps;
  double worst = 0.0;
  std::vector<double> values(static_cast<std::size_t>(ens.n_paths()));
  for (int k = 0; k < n; ++k) {
    const auto features = observation_features(ens, cfg, k);
    for (double vc : vg) {
      for (int i = 0; i < ens.n_paths(); ++i) {
        const HamiltonianInputs in = node_inputs(m, control, ens, adj, psol, i, k);
        values[static_cast<std::size_t>(i)] = hamiltonian_u(m, in) * (vc - in.u);
      }
      const FitResult fit = polynomial_regression(features, values, cfg.degree);
      for (double f : fit.fitted) worst = std::max(worst, f);
    }
  }
  return worst;
}

double pointwise_h_maximize(const Model& m, const HamiltonianInputs& fixed,
                            const std::vector<double>& v_grid) {
  if (v_grid.empty()) throw std::domain_error("pointwise_h_maximize: empty control grid");
  double best_v = v_grid.front();
  double best_h = -std::numeric_limits<double>::infinity();
  for (double v : v_grid) {
    HamiltonianInputs in = fixed;
    in.u = v;
    const double h = hamiltonian(m, in);
    if (h > best_h) {  // strict: ties keep the smallest control
      best_h = h;
      best_v = v;
    }
  }
  return best_v;
}

std::vector<double> make_v_grid(double lo, double hi, int count) {
  if (count < 2 || !(hi > lo)) throw std::domain_error("make_v_grid: bad grid request");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

}  // namespace dsmp
