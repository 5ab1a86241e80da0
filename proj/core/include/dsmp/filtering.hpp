// Kalman-Bucy filtering for a latent mean-reverting appreciation rate
// observed through log prices, plus the generic regression-based conditional
// expectation given the observation filtration.
#pragma once

#include <functional>
#include <vector>

#include "dsmp/grid.hpp"
#include "dsmp/regression.hpp"

namespace dsmp {

struct RiccatiSolution {
  TimeGrid grid;
  double alpha = 0.0;                    // drift constant of the latent rate
  double beta = 0.0;                     // diffusion constant of the latent rate
  std::function<double(double)> sigma;   // observation volatility, positive on [0, T]
  std::vector<double> gamma;             // filter variance at grid nodes

  double at(int k) const { return gamma[static_cast<std::size_t>(k)]; }
};

// RK4 integration of gamma' = 2 alpha gamma - gamma^2 / sigma(t)^2 + beta^2.
// sigma must be positive at every node and midpoint.
RiccatiSolution solve_riccati(double alpha, double beta, std::function<double(double)> sigma,
                              double gamma0, const TimeGrid& grid);

struct FilterState {
  std::vector<double> mu_hat;       // filtered mean at nodes 0..n
  std::vector<double> innovations;  // d nu per step
};

// Filter recursion driven by the innovations extracted from the log-price
// increments: d nu = dlogS / sigma - (mu_hat - sigma^2/2) dt / sigma,
// mu_hat_{k+1} = mu_hat_k + alpha mu_hat_k dt + (gamma_k / sigma_k) d nu_k.
FilterState run_kalman_bucy(const RiccatiSolution& riccati, const std::vector<double>& dlogS,
                            double mu_hat0);

// Least-squares estimate of E[ values | features ] with a polynomial basis;
// returns fitted values per path. Needs >= 10 paths per basis function.
FitResult conditional_expectation_g(const std::vector<double>& values,
                                    const std::vector<std::vector<double>>& features, int degree);

}  // namespace dsmp
