#include "dsmp/filtering.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dsmp {

RiccatiSolution solve_riccati(double alpha, double beta, std::function<double(double)> sigma,
                              double gamma0, const TimeGrid& grid) {
  if (gamma0 < 0.0) throw std::domain_error("solve_riccati: negative initial variance");
  for (int k = 0; k <= 2 * grid.steps; ++k) {
    const double t = 0.5 * grid.dt * static_cast<double>(k);
    if (sigma(t) <= 0.0) {
      throw std::domain_error("solve_riccati: sigma(t) <= 0 at t = " + std::to_string(t));
    }
  }

  auto rhs = [&](double t, double g) {
    const double s = sigma(t);
    return 2.0 * alpha * g - g * g / (s * s) + beta * beta;
  };

  RiccatiSolution sol;
  sol.grid = grid;
  sol.alpha = alpha;
  sol.beta = beta;
  sol.sigma = sigma;
  sol.gamma.resize(static_cast<std::size_t>(grid.steps) + 1);
  sol.gamma[0] = gamma0;
  const double h = grid.dt;
  for (int k = 0; k < grid.steps; ++k) {
    const double t = grid.time(k);
    const double g = sol.gamma[static_cast<std::size_t>(k)];
    const double k1 = rhs(t, g);
    const double k2 = rhs(t + 0.5 * h, g + 0.5 * h * k1);
    const double k3 = rhs(t + 0.5 * h, g + 0.5 * h * k2);
    const double k4 = rhs(t + h, g + h * k3);
    sol.gamma[static_cast<std::size_t>(k) + 1] = g + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return sol;
}

FilterState run_kalman_bucy(const RiccatiSolution& riccati, const std::vector<double>& dlogS,
                            double mu_hat0) {
  const TimeGrid& grid = riccati.grid;
  if (static_cast<int>(dlogS.size()) != grid.steps) {
    throw std::invalid_argument("run_kalman_bucy: increments do not match the grid");
  }
  FilterState st;
  st.mu_hat.resize(static_cast<std::size_t>(grid.steps) + 1);
  st.innovations.resize(static_cast<std::size_t>(grid.steps));
  st.mu_hat[0] = mu_hat0;
  const double dt = grid.dt;
  for (int k = 0; k < grid.steps; ++k) {
    const double t = grid.time(k);
    const double s = riccati.sigma(t);
    const double mu = st.mu_hat[static_cast<std::size_t>(k)];
    const double dnu =
        dlogS[static_cast<std::size_t>(k)] / s - (mu - 0.5 * s * s) * dt / s;
    st.innovations[static_cast<std::size_t>(k)] = dnu;
    st.mu_hat[static_cast<std::size_t>(k) + 1] =
        mu + riccati.alpha * mu * dt + riccati.at(k) / s * dnu;
  }
  return st;
}

FitResult conditional_expectation_g(const std::vector<double>& values,
                                    const std::vector<std::vector<double>>& features, int degree) {
  return polynomial_regression(features, values, degree);
}

}  // namespace dsmp
