// Backward-in-time solvers for the adjoint system with anticipated term and
// for the auxiliary cost equation, by explicit backward Euler with
// least-squares Monte Carlo conditional expectations.
//
// The scheme, per backward step k (dt = grid step, m = delay shift):
//   r_k     = E_k[ q_{k+1} dB_k ] / dt
//   rbar_k  = E_k[ q_{k+1} dW_k ] / dt
//   alpha_k = E_k[ q_{k+1} (dN_k - lambda dt) ] / (lambda dt)   (constant marks)
//   A_k     = E_k[ b_x'(k+m) q_{k+m} + sigma_x'(k+m) r_{k+m}
//                 + theta_x'(k+m) rbar_{k+m} + jump analog ],   zero once k+m > n
//   q_k     = E_k[q_{k+1}] + dt ( b_x q+ + sigma_x r_k + theta_x rbar_k
//                 + jump term + l_x + h_x Qt_k + A_k ),   q+ = E_k[q_{k+1}]
// with E_k the regression projection on node-k features. Terminal data are
// exact pathwise and the solution is extended by zero beyond the horizon.
#pragma once

#include <string>
#include <vector>

#include "dsmp/forward.hpp"
#include "dsmp/model.hpp"
#include "dsmp/regression.hpp"

namespace dsmp {

struct RegressionConfig {
  int degree = 2;
  bool intercept_only = false;  // variance reduction for deterministic adjoints
};

// Feature rows at a node: (x_k, x_{k-m}, Y_k); constant columns (e.g. the
// delayed state still on its initial segment) are dropped by the regression.
std::vector<std::vector<double>> node_features(const Model& m, const ForwardEnsemble& ens, int k);

struct PSolution {
  // [path][node], nodes 0..n. P_n = phi(x_n) pathwise; Q, Qt live on 0..n-1
  // with the terminal column zero.
  std::vector<std::vector<double>> P, Q, Qt;
  bool rank_warning = false;
};

struct AbsdeSolution {
  // [path][node]; terminal column q_n = phi_x(x_n), r = rbar = alpha = 0
  // there. Reads beyond node n are zero by convention (q_ext).
  std::vector<std::vector<double>> q, r, rbar, alpha;
  bool rank_warning = false;

  double q_ext(int path, int k) const {
    if (k >= static_cast<int>(q[static_cast<std::size_t>(path)].size())) return 0.0;
    return q[static_cast<std::size_t>(path)][static_cast<std::size_t>(k)];
  }
  double r_ext(int path, int k) const {
    if (k >= static_cast<int>(r[static_cast<std::size_t>(path)].size())) return 0.0;
    return r[static_cast<std::size_t>(path)][static_cast<std::size_t>(k)];
  }
};

PSolution solve_p_equation(const Model& m, const Control& control, const ForwardEnsemble& ens,
                           const RegressionConfig& cfg);

AbsdeSolution solve_adjoint(const Model& m, const Control& control, const ForwardEnsemble& ens,
                            const PSolution& psol, const RegressionConfig& cfg);

struct DualityResult {
  double lhs = 0.0;       // mean of x1(T) q(T)
  double rhs = 0.0;       // mean of the control-variation integral
  double residual = 0.0;  // lhs - rhs
  double std_error = 0.0; // paired standard error of the per-path difference
};

// Monte Carlo check of the integration-by-parts identity linking the first
// variation to the adjoint: on shared noise, mean[x1(T) q(T)] equals the
// integral of -(l_x + Qt h_x) x1 + (b_u v + b_u' v_delayed) q + ... dt.
// The per-path difference gives a paired standard error.
DualityResult duality_check(const Model& m, const Control& control, const Control& direction,
                            const ForwardEnsemble& ens,
                            const std::vector<std::vector<double>>& x1,
                            const AbsdeSolution& adj, const PSolution& psol);

// CSV export, columns: path,k,t,q,r,r_bar,P,Q_tilde.
void absde_to_csv(const AbsdeSolution& adj, const PSolution& psol, const ForwardEnsemble& ens,
                  const std::string& file, const std::string& comment);

}  // namespace dsmp
