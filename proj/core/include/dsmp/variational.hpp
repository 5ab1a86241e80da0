// First- and second-order variational processes along a control direction,
// and the Monte Carlo Gateaux derivative estimators built from them.
//
// The recursions are the exact epsilon-derivatives of the forward Euler map,
// so finite differences of the simulated cost against these estimators leave
// only O(epsilon) remainders at a fixed grid. On a reference-measure
// ensemble the perturbed paths share the observation increments and the
// derivative of the state map is taken through the substituted drift, which
// carries an extra -theta h_x x1 term relative to the physical-measure form;
// on a physical-measure ensemble the sampled noise is shared and the plain
// coefficient derivatives apply. The first form is the one whose density
// companions (Z1, Gamma) reproduce the derivative of the cost; the second is
// the one the adjoint duality identity pairs with.
#pragma once

#include <vector>

#include "dsmp/forward.hpp"
#include "dsmp/model.hpp"

namespace dsmp {

struct VariationalPaths {
  std::vector<std::vector<double>> x1;  // [path][node]
  std::vector<std::vector<double>> z1;
  std::vector<std::vector<double>> x2;  // present when second_order
  std::vector<std::vector<double>> z2;
  bool second_order = false;
};

// First variation of the state along direction v (zero on the initial
// segment). Requires first derivatives of the coefficients.
std::vector<std::vector<double>> simulate_x1(const Model& m, const Control& u, const Control& v,
                                             const ForwardEnsemble& ens);

// First variation of the density: dZ1 = [Z1 h + Z h_x x1] dY, Z1(0) = 0.
std::vector<std::vector<double>> simulate_z1(const Model& m, const ForwardEnsemble& ens,
                                             const std::vector<std::vector<double>>& x1);

// Second variation of the state (the epsilon^2 Taylor coefficient, i.e. one
// half of the second derivative). Requires second derivatives; throws
// std::domain_error for first-order-only models.
std::vector<std::vector<double>> simulate_x2(const Model& m, const Control& u, const Control& v,
                                             const ForwardEnsemble& ens,
                                             const std::vector<std::vector<double>>& x1);

// Second variation of the density.
std::vector<std::vector<double>> simulate_z2(const Model& m, const ForwardEnsemble& ens,
                                             const std::vector<std::vector<double>>& x1,
                                             const std::vector<std::vector<double>>& x2,
                                             const std::vector<std::vector<double>>& z1);

struct Z1GammaPaths {
  std::vector<std::vector<double>> z1;
  std::vector<std::vector<double>> gamma;
  double max_quotient_gap = 0.0;  // worst |gamma - z1/Z| over paths and nodes
};

// Density variation and ratio process together, with their cross-consistency
// measured (two discretizations of the same quotient).
Z1GammaPaths simulate_z1_gamma(const Model& m, const ForwardEnsemble& ens,
                               const std::vector<std::vector<double>>& x1);

VariationalPaths simulate_variational(const Model& m, const Control& u, const Control& v,
                                      const ForwardEnsemble& ens, bool second_order);

struct GateauxEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// First Gateaux derivative of the cost. Reference-measure ensembles only:
// the estimator averages the Z-weighted integrands whose plain mean is the
// derivative under that sampling law.
GateauxEstimate estimate_j1(const Model& m, const Control& u, const Control& v,
                            const ForwardEnsemble& ens, const VariationalPaths& var);

// Second Gateaux coefficient (epsilon^2 term of the Taylor expansion).
GateauxEstimate estimate_j2(const Model& m, const Control& u, const Control& v,
                            const ForwardEnsemble& ens, const VariationalPaths& var);

// Per-path integrands behind the two estimators (for paired comparisons).
std::vector<double> pathwise_j1(const Model& m, const Control& u, const Control& v,
                                const ForwardEnsemble& ens, const VariationalPaths& var);
std::vector<double> pathwise_j2(const Model& m, const Control& u, const Control& v,
                                const ForwardEnsemble& ens, const VariationalPaths& var);

// Deterministic direction family for stationarity probes: dyadic bumps plus
// sine and linear profiles, all vanishing on the initial segment.
std::vector<Control> standard_directions(int count, double horizon);

struct OptimalityProbe {
  bool j1_zero = true;        // |J1| <= j1_tol + 4 SE on every direction
  bool j2_nonpositive = true; // J2 <= j2_tol + 4 SE on every direction
  std::vector<double> j1_values, j1_errors, j2_values, j2_errors;
};

// Sampled-direction check of the local optimality condition (J1 = 0 and
// J2 <= 0 along every probed direction).
OptimalityProbe check_local_optimality(const Model& m, const Control& u,
                                       const std::vector<Control>& directions,
                                       const ForwardEnsemble& ens, double j1_tol, double j2_tol);

}  // namespace dsmp
