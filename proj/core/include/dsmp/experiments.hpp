// Configuration-driven experiment pipelines: the filtered nonlinear example,
// the delayed-investment example with its delay sweep, and the CSV surface
// the command line exposes.
#pragma once

#include <string>
#include <vector>

#include "dsmp/absde.hpp"
#include "dsmp/config.hpp"
#include "dsmp/filtering.hpp"
#include "dsmp/forward.hpp"
#include "dsmp/models.hpp"
#include "dsmp/smp.hpp"
#include "dsmp/variational.hpp"

namespace dsmp {

// Every key any pipeline understands; parsers reject the rest.
const std::set<std::string>& experiment_keys();

struct ProbeResult {
  int direction = 0;
  double epsilon = 0.0;
  double delta_j = 0.0;     // J(u + eps w) - J(u), paired
  double std_error = 0.0;   // paired standard error
};

struct Example1Report {
  double j_value = 0.0;
  double j_std_error = 0.0;
  double terminal_gap = 0.0;  // max |q(T) - 1| over paths
  ResidualReport residual;
  std::vector<ProbeResult> probes;
  std::uint64_t config_hash = 0;
};

// Picard passes of: simulate under the current feedback, solve the auxiliary
// and adjoint equations, refresh the feedback -b/2 E[q | observation] and
// resimulate on the same noise. Reports the cost, the terminal condition
// check, the stationarity residual and common-random-number probes.
Example1Report run_example1(const Config& cfg);

struct Example2Report {
  double delta = 0.0;
  double dt = 0.0;
  double q0 = 0.0;            // least-squares adjoint at t = 0 (terminal 1/2)
  double q0_refined = 0.0;    // fine-grid anticipated-recursion value
  double cost_term = 0.0, cost_term_se = 0.0;  // E[-int (v-a)^2 dt]
  double e_xT = 0.0, e_xT_se = 0.0;            // E[x(T)]
  double j_sum = 0.0, j_sum_se = 0.0;          // cost_term + e_xT
  double j_half = 0.0;                          // objective with the 1/2 factor
  std::vector<double> per_path_j;               // j_sum contributions, paired across runs
  ResidualReport residual;            // stationarity at the formed control
  ResidualReport residual_perturbed;  // control shifted by smp_perturbation
  std::uint64_t config_hash = 0;
};

Example2Report run_example2(const Config& cfg);
Example2Report run_example2_at_delta(const Config& cfg, double delta, bool with_residual,
                                     const std::string& out_dir);

struct SweepGap {
  double gap = 0.0;        // J(delta_i) - J(delta_{i+1}), paired
  double std_error = 0.0;  // paired
  bool significant = false;
};

struct SweepReport {
  std::vector<Example2Report> rows;
  std::vector<SweepGap> gaps;
  std::vector<double> skipped;  // misaligned deltas
  bool monotone_decreasing = true;
  int significant_gaps = 0;
};

// One run per delta with a common master seed so adjacent comparisons are
// common-random-number paired; misaligned deltas are skipped with a warning.
SweepReport run_delay_sweep(const Config& cfg);

// Fine-grid backward recursion for the deterministic anticipated adjoint
// q'(t) = -r0 q(t + delta), q(T) = qT, zero beyond the horizon: trapezoidal
// steps on a refine-times-finer grid, decimated back to the given one.
std::vector<double> refined_adjoint_ode(double r0, double qT, const TimeGrid& grid, int refine);

struct GateauxRow {
  int direction = 0;
  double epsilon = 0.0;
  double j1 = 0.0, j1_se = 0.0;
  double j2 = 0.0, j2_se = 0.0;
  double fd_j1 = 0.0, fd_j1_se = 0.0;
  double fd_j2 = 0.0, fd_j2_se = 0.0;
  double diff1 = 0.0, diff1_se = 0.0;  // fd_j1 - j1, paired per path
  double diff2 = 0.0, diff2_se = 0.0;  // fd_j2 - 2 j2, paired per path
};

// Variational estimators against their common-random-number finite
// difference oracles across the standard direction family.
std::vector<GateauxRow> run_gateaux_probe(const Model& m, const Control& u, double epsilon,
                                          int directions, const TimeGrid& grid,
                                          std::uint64_t master_seed, int n_paths);

void gateaux_rows_to_csv(const std::vector<GateauxRow>& rows, const std::string& file,
                         const std::string& comment);

}  // namespace dsmp
