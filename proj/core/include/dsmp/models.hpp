// Built-in model definitions: the two worked examples and the fixed test
// systems used by the verification suites and the command line tool.
#pragma once

#include <string>

#include "dsmp/model.hpp"

namespace dsmp {

struct Example1Params {
  double a = 0.3;        // delayed-state drift weight
  double b = 0.5;        // control drift weight
  double sigma0 = 0.2;   // proportional diffusion
  double theta = 0.2;    // observation-noise diffusion (constant)
  double gamma = 0.1;    // jump size (constant)
  double lambda = 0.5;   // jump intensity
  double xi = 1.0;       // constant initial state segment
  double delta = 0.25;
  double v_lo = -2.0;
  double v_hi = 2.0;
};

// State drift sin(x) + a x(t-delta) + b v, diffusion sigma0 x, constant
// theta, constant jumps, observation drift cos(x), running cost v^2 and
// terminal cost x.
Model make_example1_model(const Example1Params& p);

// Deterministic delay dynamics dx = c x(t-delta) dt from a constant initial
// segment; every stochastic coefficient vanishes.
Model make_delay_ode_model(double c, double xi);

// Bounded nonlinear test system with full second-order data: all coefficient
// derivatives bounded, observation drift bounded, used by the moment,
// variation-rate and Gateaux checks.
Model make_bounded_model();

// Affine-coefficient delay system with constant-mark jumps and a bounded
// observation drift; the duality identity test model.
Model make_constcoef_model();

// Linear-in-control drift with quadratic control cost and linear terminal
// cost; the closed-form Gateaux test case (no noise).
Model make_quadratic_cost_model(double a_level);

// Coefficient skeleton of the delayed-investment adjoint: only the delayed
// state enters the drift (weight r0), the innovation noise sits in the
// theta slot, terminal cost is half the wealth.
Model make_investment_adjoint_model(double r0, double terminal_slope);

// Lookup by name for the command line: example1, delay-ode, bounded,
// constcoef. Throws std::invalid_argument for unknown names.
Model builtin_model(const std::string& name);

}  // namespace dsmp
