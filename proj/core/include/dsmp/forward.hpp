// Euler simulation of the delay state, observation and density processes.
//
// Two driving conventions are supported. Under Measure::physical the sampled
// pair (dB, dW) are the primitive Brownian increments and the observation is
// assembled as dY = h dt + dW; plain path averages then estimate the
// expectations written with a bar in the adjoint and Hamiltonian identities,
// and the backward regressions need no weights. Under Measure::reference the
// second sampled array is used as the observation increments themselves
// (the observation is the primitive Brownian motion), dW := dY - h dt is
// derived, and the density Z is a martingale with unit mean under the
// sampling law; cost functionals are then averaged with their Z weights.
// Both conventions produce the same state path law up to the measure change
// and share all coefficient code.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dsmp/grid.hpp"
#include "dsmp/model.hpp"
#include "dsmp/noise.hpp"

namespace dsmp {

enum class Measure { physical, reference };

class simulation_error : public std::runtime_error {
public:
  simulation_error(const std::string& what, int step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  int step() const { return step_; }

private:
  int step_ = 0;
};

struct PathState {
  std::vector<double> x;   // nodes 0..n
  std::vector<double> Y;   // observation, Y[0] = 0
  std::vector<double> Z;   // density, Z[0] = 1, positive throughout
  std::vector<double> dB;  // per step
  std::vector<double> dW;  // per step (derived in reference mode)
  std::vector<double> dY;  // per step (derived in physical mode)
  std::vector<JumpEvent> jumps;
};

struct ForwardEnsemble {
  TimeGrid grid;
  Measure measure = Measure::physical;
  std::uint64_t master_seed = 0;
  std::vector<PathState> paths;

  int n_paths() const { return static_cast<int>(paths.size()); }

  // Delayed state read: node k - m, falling back to the segment xi.
  double x_delayed(const Model& m, int path, int k) const;
};

// Single-path simulation on supplied noise; x(t) = xi(t) on the segment,
// jumps compensated by lambda * E[gamma] dt, Z evolved multiplicatively so it
// stays positive. Throws simulation_error when a step stops being finite.
PathState simulate_path(const Model& m, const Control& control, const TimeGrid& grid,
                        const NoisePath& noise, Measure measure);

// Stepping with the control supplied step by step. The callback sees the
// node index and the partially filled path (entries 0..k valid), so
// observation-feedback policies can read the running history. The values it
// returns are recorded into the result's control snapshot.
PathState simulate_path_with_policy(
    const Model& m, const std::function<double(int k, const PathState& so_far)>& policy,
    const Segment& control_history, const TimeGrid& grid, const NoisePath& noise, Measure measure,
    std::vector<double>* control_out = nullptr);

struct ObservationDensity {
  std::vector<double> Y;  // nodes 0..n, Y[0] = 0
  std::vector<double> Z;  // nodes 0..n, Z[0] = 1
};

// Rebuild the observation and density processes along an already simulated
// state path with the same noise: Y accumulates h dt + dW, Z is the
// log-stepped exponential of the h integrals against dY.
ObservationDensity simulate_observation_and_density(const Model& m,
                                                    const std::vector<double>& x_path,
                                                    const TimeGrid& grid, const NoisePath& noise,
                                                    Measure measure);

ForwardEnsemble simulate_ensemble(const Model& m, const Control& control, const TimeGrid& grid,
                                  std::uint64_t master_seed, int n_paths,
                                  Measure measure = Measure::physical);

// Streaming variant for large ensembles: paths are visited in index order
// without being retained. The visitor may not depend on visit order.
void for_each_path(const Model& m, const Control& control, const TimeGrid& grid,
                   std::uint64_t master_seed, int n_paths, Measure measure,
                   const std::function<void(int, const PathState&)>& visit);

// Ratio process driven by the innovation-style increments dW = dY - h dt:
// Gamma_{k+1} = Gamma_k + h_x(t_k, x_k) x1_k dW_k, Gamma_0 = 0.
std::vector<double> simulate_gamma(const Model& m, const PathState& path,
                                   const std::vector<double>& x1, const TimeGrid& grid);

struct CostEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int n_paths = 0;
};

// Monte Carlo performance functional with trapezoidal time quadrature. On
// reference-measure ensembles the running and terminal terms carry their Z
// weights; on physical-measure ensembles the weights are identically one.
CostEstimate estimate_cost(const Model& m, const Control& control, const ForwardEnsemble& ens);

// Per-path cost functionals (the averages behind estimate_cost).
std::vector<double> pathwise_cost(const Model& m, const Control& control,
                                  const ForwardEnsemble& ens);

// CSV export, columns: path,k,t,x,Y,Z,Gamma.
void ensemble_to_csv(const ForwardEnsemble& ens, const std::vector<std::vector<double>>* gamma,
                     const std::string& file, const std::string& comment);

// Number of worker threads used for ensemble loops (1 disables threading).
void set_simulation_threads(int threads);
int simulation_threads();

}  // namespace dsmp
