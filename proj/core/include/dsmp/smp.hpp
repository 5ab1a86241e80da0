// Hamiltonian evaluation and the first-order optimality residuals of the
// maximum principle, conditioned on the observation filtration.
//
// On nodes with t <= T - delta the tested quantity couples the control
// partial at t with the delayed-control partial at t + delta; past T - delta
// the delayed term is zero by the solution's zero extension and the single
// term form applies.
#pragma once

#include <string>
#include <vector>

#include "dsmp/absde.hpp"
#include "dsmp/forward.hpp"
#include "dsmp/model.hpp"

namespace dsmp {

struct HamiltonianInputs {
  double t = 0.0;
  double x = 0.0, xd = 0.0;
  double u = 0.0, ud = 0.0;
  double q = 0.0, r = 0.0, rbar = 0.0;
  double alpha = 0.0;  // jump integrand representative
  double Qt = 0.0;     // integrand of the auxiliary cost equation
};

// b q + sigma r + theta rbar + l + h Qt + jump integral. With constant marks
// the jump integral is lambda gamma alpha; with mark-dependent coefficients
// the integrand is taken linear in the mark.
double hamiltonian(const Model& m, const HamiltonianInputs& in);

// Partial derivatives in the control slots, same adjoint pairing.
double hamiltonian_u(const Model& m, const HamiltonianInputs& in);
double hamiltonian_ud(const Model& m, const HamiltonianInputs& in);

struct ResidualRow {
  int k = 0;
  double t = 0.0;
  double residual = 0.0;  // RMS of the fitted conditional expectation
  double mean = 0.0;      // plain mean of the tested quantity
  double std_error = 0.0; // standard error of that mean
  bool coupled = false;   // delay-coupled window (t <= T - delta)
};

struct ResidualReport {
  std::vector<ResidualRow> rows;
  double max_abs_residual = 0.0;
  double max_std_error = 0.0;

  void to_csv(const std::string& file, const std::string& comment) const;
};

struct GConditionConfig {
  std::vector<int> y_lags = {0};  // observation lags, in grid steps
  int degree = 2;
};

// Observation-history feature rows at node k: Y at the configured lags,
// clipped at time zero.
std::vector<std::vector<double>> observation_features(const ForwardEnsemble& ens,
                                                      const GConditionConfig& cfg, int k);

// Conditional-expectation residual of the stationarity condition along the
// supplied control: per node, regression of H_u(t) (+ H_u'(t + delta) on the
// coupled window) on observation-history features.
ResidualReport hamiltonian_u_residual(const Model& m, const Control& control,
                                      const ForwardEnsemble& ens, const AbsdeSolution& adj,
                                      const PSolution& psol, const GConditionConfig& cfg);

// Same reporting for externally assembled per-node values: values[k][i] is
// the tested quantity for path i at node k; features[k][i] its feature row.
ResidualReport residual_report_from_values(
    const std::vector<std::vector<double>>& values,
    const std::vector<std::vector<std::vector<double>>>& features, const TimeGrid& grid,
    int degree);

// Variational-inequality probe for boundary controls: largest positive value
// of the fitted conditional expectation of H_u (v - u) over a grid of
// constant feasible controls v.
double boundary_violation(const Model& m, const Control& control, const ForwardEnsemble& ens,
                          const AbsdeSolution& adj, const PSolution& psol,
                          const GConditionConfig& cfg, int v_count);

// Grid-search maximizer of the Hamiltonian in the control slot, ties broken
// toward the smallest value. Throws std::domain_error on an empty grid.
double pointwise_h_maximize(const Model& m, const HamiltonianInputs& fixed,
                            const std::vector<double>& v_grid);

std::vector<double> make_v_grid(double lo, double hi, int count);

}  // namespace dsmp
