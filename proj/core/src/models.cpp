#include "dsmp/models.hpp"

#include <cmath>

namespace dsmp {

namespace {

// Shorthand for filling every derivative of an affine coefficient
// c0 + cx x + cxd x' + cu u + cud u'.
Coef affine(double c0, double cx, double cxd, double cu, double cud) {
  Coef c;
  c.value = [=](double, double x, double xd, double u, double ud) {
    return c0 + cx * x + cxd * xd + cu * u + cud * ud;
  };
  c.set_d1(Var::x, Coef::constant(cx).value);
  c.set_d1(Var::xd, Coef::constant(cxd).value);
  c.set_d1(Var::u, Coef::constant(cu).value);
  c.set_d1(Var::ud, Coef::constant(cud).value);
  auto z = [](double, double, double, double, double) { return 0.0; };
  for (auto& f : c.d2) f = z;
  return c;
}

}  // namespace

Model make_example1_model(const Example1Params& p) {
  Model m;
  m.name = "example1";
  m.second_order = true;

  const double a = p.a, b = p.b, s0 = p.sigma0;

  m.drift.value = [a, b](double, double x, double xd, double u, double) {
    return std::sin(x) + a * xd + b * u;
  };
  m.drift.set_d1(Var::x, [](double, double x, double, double, double) { return std::cos(x); });
  m.drift.set_d1(Var::xd, Coef::constant(a).value);
  m.drift.set_d1(Var::u, Coef::constant(b).value);
  m.drift.set_d1(Var::ud, Coef::constant(0.0).value);
  {
    auto z = [](double, double, double, double, double) { return 0.0; };
    for (auto& f : m.drift.d2) f = z;
    m.drift.set_d2(Var::x, Var::x,
                   [](double, double x, double, double, double) { return -std::sin(x); });
  }

  m.diffusion_b = affine(0.0, s0, 0.0, 0.0, 0.0);
  m.diffusion_w = Coef::constant(p.theta);
  m.jump = JumpCoef::constant(p.gamma);
  m.jump_intensity = p.lambda;
  m.marks = MarkDistribution::constant(1.0);

  m.obs.h = [](double, double x) { return std::cos(x); };
  m.obs.hx = [](double, double x) { return -std::sin(x); };
  m.obs.hxx = [](double, double x) { return -std::cos(x); };
  m.obs.bounded = true;
  m.obs.bound = 1.0 + 1e-9;

  m.cost = RunningCost::zero();
  m.cost.value = [](double, double, double u, double) { return u * u; };
  m.cost.du = [](double, double, double u, double) { return 2.0 * u; };
  m.cost.duu = [](double, double, double, double) { return 2.0; };

  m.terminal = TerminalCost::linear(1.0);

  m.delay = p.delta;
  const double xi = p.xi;
  m.xi = [xi](double) { return xi; };
  m.eta = [](double) { return 0.0; };
  m.control_set = ControlSet{p.v_lo, p.v_hi};
  return m;
}

Model make_delay_ode_model(double c, double xi) {
  Model m;
  m.name = "delay-ode";
  m.second_order = true;
  m.drift = affine(0.0, 0.0, c, 0.0, 0.0);
  m.diffusion_b = Coef::zero();
  m.diffusion_w = Coef::zero();
  m.jump = JumpCoef::zero();
  m.obs = Observation::none();
  m.cost = RunningCost::zero();
  m.terminal = TerminalCost::linear(1.0);
  m.xi = [xi](double) { return xi; };
  m.eta = [](double) { return 0.0; };
  return m;
}

Model make_bounded_model() {
  Model m;
  m.name = "bounded";
  m.second_order = true;

  m.drift.value = [](double, double x, double xd, double u, double ud) {
    return std::sin(x) + 0.5 * std::cos(xd) + u + 0.25 * std::sin(ud);
  };
  m.drift.set_d1(Var::x, [](double, double x, double, double, double) { return std::cos(x); });
  m.drift.set_d1(Var::xd,
                 [](double, double, double xd, double, double) { return -0.5 * std::sin(xd); });
  m.drift.set_d1(Var::u, Coef::constant(1.0).value);
  m.drift.set_d1(Var::ud,
                 [](double, double, double, double, double ud) { return 0.25 * std::cos(ud); });
  {
    auto z = [](double, double, double, double, double) { return 0.0; };
    for (auto& f : m.drift.d2) f = z;
    m.drift.set_d2(Var::x, Var::x,
                   [](double, double x, double, double, double) { return -std::sin(x); });
    m.drift.set_d2(Var::xd, Var::xd,
                   [](double, double, double xd, double, double) { return -0.5 * std::cos(xd); });
    m.drift.set_d2(Var::ud, Var::ud,
                   [](double, double, double, double, double ud) { return -0.25 * std::sin(ud); });
  }

  m.diffusion_b.value = [](double, double x, double, double, double) {
    return 0.3 * std::cos(x);
  };
  m.diffusion_b.set_d1(Var::x,
                       [](double, double x, double, double, double) { return -0.3 * std::sin(x); });
  m.diffusion_b.set_d1(Var::xd, Coef::constant(0.0).value);
  m.diffusion_b.set_d1(Var::u, Coef::constant(0.0).value);
  m.diffusion_b.set_d1(Var::ud, Coef::constant(0.0).value);
  {
    auto z = [](double, double, double, double, double) { return 0.0; };
    for (auto& f : m.diffusion_b.d2) f = z;
    m.diffusion_b.set_d2(Var::x, Var::x,
                         [](double, double x, double, double, double) { return -0.3 * std::cos(x); });
  }

  m.diffusion_w.value = [](double, double x, double, double, double) {
    return 0.2 + 0.1 * std::sin(x);
  };
  m.diffusion_w.set_d1(Var::x,
                       [](double, double x, double, double, double) { return 0.1 * std::cos(x); });
  m.diffusion_w.set_d1(Var::xd, Coef::constant(0.0).value);
  m.diffusion_w.set_d1(Var::u, Coef::constant(0.0).value);
  m.diffusion_w.set_d1(Var::ud, Coef::constant(0.0).value);
  {
    auto z = [](double, double, double, double, double) { return 0.0; };
    for (auto& f : m.diffusion_w.d2) f = z;
    m.diffusion_w.set_d2(Var::x, Var::x,
                         [](double, double x, double, double, double) { return -0.1 * std::sin(x); });
  }

  m.jump = JumpCoef::zero();
  m.jump_intensity = 0.0;

  m.obs.h = [](double, double x) { return 0.5 * std::cos(x); };
  m.obs.hx = [](double, double x) { return -0.5 * std::sin(x); };
  m.obs.hxx = [](double, double x) { return -0.5 * std::cos(x); };
  m.obs.bounded = true;
  m.obs.bound = 0.5 + 1e-9;

  m.cost = RunningCost::zero();
  m.cost.value = [](double, double x, double u, double) { return std::cos(x) - 0.5 * u * u; };
  m.cost.dx = [](double, double x, double, double) { return -std::sin(x); };
  m.cost.du = [](double, double, double u, double) { return -u; };
  m.cost.dxx = [](double, double x, double, double) { return -std::cos(x); };
  m.cost.duu = [](double, double, double, double) { return -1.0; };

  m.terminal.value = [](double x) { return std::sin(x); };
  m.terminal.dx = [](double x) { return std::cos(x); };
  m.terminal.dxx = [](double x) { return -std::sin(x); };

  m.xi = [](double) { return 0.5; };
  m.eta = [](double) { return 0.0; };
  m.control_set = ControlSet{-2.0, 2.0};
  return m;
}

Model make_constcoef_model() {
  Model m;
  m.name = "constcoef";
  m.second_order = true;
  m.drift = affine(0.05, -0.3, 0.2, 0.4, 0.15);
  m.diffusion_b = affine(0.25, 0.1, 0.0, 0.2, 0.0);
  m.diffusion_w = affine(0.2, 0.05, 0.0, 0.0, 0.1);

  m.jump.value = [](double, double, double xd, double u, double, double) {
    return 0.1 + 0.05 * xd + 0.1 * u;
  };
  {
    auto z6 = [](double, double, double, double, double, double) { return 0.0; };
    m.jump.set_d1(Var::x, z6);
    m.jump.set_d1(Var::xd, [](double, double, double, double, double, double) { return 0.05; });
    m.jump.set_d1(Var::u, [](double, double, double, double, double, double) { return 0.1; });
    m.jump.set_d1(Var::ud, z6);
    for (auto& f : m.jump.d2) f = z6;
  }
  m.jump_intensity = 0.4;
  m.marks = MarkDistribution::constant(1.0);

  m.obs.h = [](double, double x) { return 0.4 * std::tanh(x); };
  m.obs.hx = [](double, double x) {
    const double c = std::cosh(x);
    return 0.4 / (c * c);
  };
  m.obs.hxx = [](double, double x) {
    const double c = std::cosh(x);
    return -0.8 * std::tanh(x) / (c * c);
  };
  m.obs.bounded = true;
  m.obs.bound = 0.4 + 1e-9;

  m.cost = RunningCost::zero();
  m.cost.value = [](double, double x, double u, double ud) {
    return 0.3 * x - 0.5 * u * u - 0.1 * u * ud;
  };
  m.cost.dx = [](double, double, double, double) { return 0.3; };
  m.cost.du = [](double, double, double u, double ud) { return -u - 0.1 * ud; };
  m.cost.dud = [](double, double, double u, double) { return -0.1 * u; };
  m.cost.duu = [](double, double, double, double) { return -1.0; };
  m.cost.duud = [](double, double, double, double) { return -0.1; };

  m.terminal = TerminalCost::linear(0.5);

  m.xi = [](double) { return 1.0; };
  m.eta = [](double) { return 0.0; };
  m.control_set = ControlSet{-3.0, 3.0};
  return m;
}

Model make_quadratic_cost_model(double a_level) {
  Model m;
  m.name = "quadratic-cost";
  m.second_order = true;
  m.drift = affine(0.0, 0.0, 0.0, 1.0, 0.0);
  m.diffusion_b = Coef::zero();
  m.diffusion_w = Coef::zero();
  m.jump = JumpCoef::zero();
  m.obs = Observation::none();

  m.cost = RunningCost::zero();
  m.cost.value = [a_level](double, double, double u, double) {
    const double d = u - a_level;
    return -0.5 * d * d;
  };
  m.cost.du = [a_level](double, double, double u, double) { return -(u - a_level); };
  m.cost.duu = [](double, double, double, double) { return -1.0; };

  m.terminal = TerminalCost::linear(1.0);
  m.xi = [](double) { return 0.0; };
  m.eta = [](double) { return 0.0; };
  return m;
}

Model make_investment_adjoint_model(double r0, double terminal_slope) {
  Model m;
  m.name = "investment-adjoint";
  m.second_order = false;
  m.drift = affine(0.0, 0.0, r0, 0.0, 0.0);
  m.diffusion_b = Coef::zero();
  m.diffusion_w = Coef::zero();  // the innovation increments drive this slot
  m.jump = JumpCoef::zero();
  m.obs = Observation::none();
  m.cost = RunningCost::zero();
  m.terminal = TerminalCost::linear(terminal_slope);
  m.xi = [](double) { return 1.0; };
  m.eta = [](double) { return 0.0; };
  return m;
}

Model builtin_model(const std::string& name) {
  if (name == "example1") return make_example1_model(Example1Params{});
  if (name == "delay-ode") return make_delay_ode_model(1.0, 1.0);
  if (name == "bounded") return make_bounded_model();
  if (name == "constcoef") return make_constcoef_model();
  throw std::invalid_argument("builtin_model: unknown model '" + name + "'");
}

}  // namespace dsmp
