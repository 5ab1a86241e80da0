#include "dsmp/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace dsmp {

namespace {
constexpr double kFdStep = 6.0e-6;  // ~cbrt(eps), balances truncation and roundoff

double central_diff(const std::function<double(double)>& f, double x0) {
  return (f(x0 + kFdStep) - f(x0 - kFdStep)) / (2.0 * kFdStep);
}
}  // namespace

// ---------------------------------------------------------------------------
// Coef / JumpCoef
// ---------------------------------------------------------------------------

bool Coef::has_first() const {
  for (const auto& f : d1)
    if (!f) return false;
  return true;
}

bool Coef::has_second() const {
  for (const auto& f : d2)
    if (!f) return false;
  return true;
}

Coef& Coef::set_d1(Var v, CoefFn fn) {
  d1[static_cast<int>(v)] = std::move(fn);
  return *this;
}

Coef& Coef::set_d2(Var i, Var j, CoefFn fn) {
  d2[4 * static_cast<int>(i) + static_cast<int>(j)] = fn;
  d2[4 * static_cast<int>(j) + static_cast<int>(i)] = std::move(fn);
  return *this;
}

double Coef::deriv(Var v, double t, double x, double xd, double u, double ud) const {
  const auto& f = d1[static_cast<int>(v)];
  if (!f) throw std::domain_error("Coef: missing first derivative");
  return f(t, x, xd, u, ud);
}

double Coef::deriv2(Var i, Var j, double t, double x, double xd, double u, double ud) const {
  const auto& f = d2[4 * static_cast<int>(i) + static_cast<int>(j)];
  if (!f) throw std::domain_error("Coef: missing second derivative");
  return f(t, x, xd, u, ud);
}

Coef Coef::zero() { return constant(0.0); }

Coef Coef::constant(double c) {
  Coef out;
  out.value = [c](double, double, double, double, double) { return c; };
  auto z = [](double, double, double, double, double) { return 0.0; };
  for (auto& f : out.d1) f = z;
  for (auto& f : out.d2) f = z;
  return out;
}

bool JumpCoef::has_first() const {
  for (const auto& f : d1)
    if (!f) return false;
  return true;
}

bool JumpCoef::has_second() const {
  for (const auto& f : d2)
    if (!f) return false;
  return true;
}

JumpCoef& JumpCoef::set_d1(Var v, JumpFn fn) {
  d1[static_cast<int>(v)] = std::move(fn);
  return *this;
}

JumpCoef& JumpCoef::set_d2(Var i, Var j, JumpFn fn) {
  d2[4 * static_cast<int>(i) + static_cast<int>(j)] = fn;
  d2[4 * static_cast<int>(j) + static_cast<int>(i)] = std::move(fn);
  return *this;
}

double JumpCoef::deriv(Var v, double t, double x, double xd, double u, double ud,
                       double mark) const {
  const auto& f = d1[static_cast<int>(v)];
  if (!f) throw std::domain_error("JumpCoef: missing first derivative");
  return f(t, x, xd, u, ud, mark);
}

double JumpCoef::deriv2(Var i, Var j, double t, double x, double xd, double u, double ud,
                        double mark) const {
  const auto& f = d2[4 * static_cast<int>(i) + static_cast<int>(j)];
  if (!f) throw std::domain_error("JumpCoef: missing second derivative");
  return f(t, x, xd, u, ud, mark);
}

JumpCoef JumpCoef::zero() { return constant(0.0); }

JumpCoef JumpCoef::constant(double c) {
  JumpCoef out;
  out.value = [c](double, double, double, double, double, double) { return c; };
  auto z = [](double, double, double, double, double, double) { return 0.0; };
  for (auto& f : out.d1) f = z;
  for (auto& f : out.d2) f = z;
  return out;
}

Observation Observation::none() {
  Observation o;
  o.h = [](double, double) { return 0.0; };
  o.hx = [](double, double) { return 0.0; };
  o.hxx = [](double, double) { return 0.0; };
  o.bounded = true;
  o.bound = 0.0;
  return o;
}

bool RunningCost::has_second() const {
  return dxx && dxu && dxud && duu && duud && dudud;
}

RunningCost RunningCost::zero() {
  RunningCost c;
  auto z = [](double, double, double, double) { return 0.0; };
  c.value = z;
  c.dx = c.du = c.dud = z;
  c.dxx = c.dxu = c.dxud = c.duu = c.duud = c.dudud = z;
  return c;
}

TerminalCost TerminalCost::zero() {
  TerminalCost t;
  t.value = [](double) { return 0.0; };
  t.dx = [](double) { return 0.0; };
  t.dxx = [](double) { return 0.0; };
  return t;
}

TerminalCost TerminalCost::linear(double slope) {
  TerminalCost t;
  t.value = [slope](double x) { return slope * x; };
  t.dx = [slope](double) { return slope; };
  t.dxx = [](double) { return 0.0; };
  return t;
}

// ---------------------------------------------------------------------------
// Substituted drift
// ---------------------------------------------------------------------------

double tilde_b(const Model& m, double t, double x, double xd, double u, double ud) {
  return m.drift.value(t, x, xd, u, ud) - m.diffusion_w.value(t, x, xd, u, ud) * m.obs.h(t, x);
}

double tilde_b_deriv(const Model& m, Var v, double t, double x, double xd, double u, double ud) {
  double out = m.drift.deriv(v, t, x, xd, u, ud) -
               m.diffusion_w.deriv(v, t, x, xd, u, ud) * m.obs.h(t, x);
  if (v == Var::x) {
    out -= m.diffusion_w.value(t, x, xd, u, ud) * m.obs.hx(t, x);
  }
  return out;
}

double tilde_b_deriv2(const Model& m, Var i, Var j, double t, double x, double xd, double u,
                      double ud) {
  const double h = m.obs.h(t, x);
  double out = m.drift.deriv2(i, j, t, x, xd, u, ud) -
               m.diffusion_w.deriv2(i, j, t, x, xd, u, ud) * h;
  const double hx = m.obs.hx(t, x);
  if (i == Var::x) out -= m.diffusion_w.deriv(j, t, x, xd, u, ud) * hx;
  if (j == Var::x) out -= m.diffusion_w.deriv(i, t, x, xd, u, ud) * hx;
  if (i == Var::x && j == Var::x) {
    out -= m.diffusion_w.value(t, x, xd, u, ud) * m.obs.hxx(t, x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Control
// ---------------------------------------------------------------------------

double Control::at(int path, int k, const TimeGrid& grid) const {
  if (k < 0) {
    if (eta) return eta(grid.time(k));
    return 0.0;
  }
  if (kind == Kind::deterministic) return fn ? fn(grid.time(k)) : 0.0;
  return values[static_cast<std::size_t>(path)][static_cast<std::size_t>(k)];
}

Control Control::deterministic(std::function<double(double)> f, Segment eta_seg) {
  Control c;
  c.kind = Kind::deterministic;
  c.fn = std::move(f);
  c.eta = std::move(eta_seg);
  return c;
}

Control Control::zero() {
  return deterministic([](double) { return 0.0; });
}

Control Control::feedback(std::vector<std::vector<double>> vals, Segment eta_seg) {
  Control c;
  c.kind = Kind::observation_feedback;
  c.values = std::move(vals);
  c.eta = std::move(eta_seg);
  return c;
}

Control Control::arbitrary(std::vector<std::vector<double>> vals, Segment eta_seg) {
  Control c;
  c.kind = Kind::arbitrary;
  c.values = std::move(vals);
  c.eta = std::move(eta_seg);
  return c;
}

Control control_axpy(const Control& base, double scale, const Control& dir) {
  if (base.kind != Control::Kind::deterministic || dir.kind != Control::Kind::deterministic) {
    throw std::invalid_argument("control_axpy: both controls must be deterministic");
  }
  auto bf = base.fn;
  auto df = dir.fn;
  Control out;
  out.kind = Control::Kind::deterministic;
  out.fn = [bf, df, scale](double t) {
    return (bf ? bf(t) : 0.0) + scale * (df ? df(t) : 0.0);
  };
  out.eta = base.eta;
  return out;
}

void check_admissible(const Model& m, const Control& c, const TimeGrid& grid) {
  if (c.kind == Control::Kind::arbitrary) {
    throw std::invalid_argument(
        "control is not admissible: built from full-information data rather than a "
        "deterministic function or observation feedback");
  }
  if (c.kind == Control::Kind::deterministic) {
    for (int k = 0; k <= grid.steps; ++k) {
      const double v = c.at(0, k, grid);
      if (v < m.control_set.lo - 1e-12 || v > m.control_set.hi + 1e-12) {
        throw std::invalid_argument("control leaves the control set at node " + std::to_string(k));
      }
    }
    return;
  }
  for (std::size_t p = 0; p < c.values.size(); ++p) {
    for (double v : c.values[p]) {
      if (v < m.control_set.lo - 1e-12 || v > m.control_set.hi + 1e-12) {
        throw std::invalid_argument("control leaves the control set on path " + std::to_string(p));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

struct Point {
  double t, x, xd, u, ud;
};

const char* var_name(Var v) {
  switch (v) {
    case Var::x: return "x";
    case Var::xd: return "x'";
    case Var::u: return "u";
    case Var::ud: return "u'";
  }
  return "?";
}

// One validation record: relative mismatch of an analytic partial vs central
// differences, tracked with the offending symbol name.
struct MismatchTracker {
  double worst = 0.0;
  std::string symbol;

  void update(double analytic, double numeric, double scale, const std::string& name) {
    const double denom = std::max({1.0, std::abs(analytic), scale});
    const double rel = std::abs(analytic - numeric) / denom;
    if (rel > worst) {
      worst = rel;
      symbol = name;
    }
  }
};

void check_coef(const std::string& base, const Coef& c, const std::vector<Point>& pts,
                bool second_order, MismatchTracker& first, MismatchTracker& second) {
  if (!c.has_first()) return;
  for (const auto& p : pts) {
    const double scale = std::abs(c.value(p.t, p.x, p.xd, p.u, p.ud));
    for (int iv = 0; iv < 4; ++iv) {
      const Var v = static_cast<Var>(iv);
      auto line = [&](double s) {
        Point q = p;
        switch (v) {
          case Var::x: q.x += s; break;
          case Var::xd: q.xd += s; break;
          case Var::u: q.u += s; break;
          case Var::ud: q.ud += s; break;
        }
        return c.value(q.t, q.x, q.xd, q.u, q.ud);
      };
      const double numeric = central_diff([&](double s) { return line(s); }, 0.0);
      const double analytic = c.deriv(v, p.t, p.x, p.xd, p.u, p.ud);
      first.update(analytic, numeric, scale, base + "_" + var_name(v));

      if (second_order && c.has_second()) {
        for (int jv = 0; jv < 4; ++jv) {
          const Var w = static_cast<Var>(jv);
          auto dline = [&](double s) {
            Point q = p;
            switch (w) {
              case Var::x: q.x += s; break;
              case Var::xd: q.xd += s; break;
              case Var::u: q.u += s; break;
              case Var::ud: q.ud += s; break;
            }
            return c.deriv(v, q.t, q.x, q.xd, q.u, q.ud);
          };
          const double num2 = central_diff([&](double s) { return dline(s); }, 0.0);
          const double an2 = c.deriv2(v, w, p.t, p.x, p.xd, p.u, p.ud);
          second.update(an2, num2, scale, base + "_" + var_name(v) + var_name(w));
        }
      }
    }
  }
}

}  // namespace

ValidationReport validate_model(const Model& m, int sample_count) {
  ValidationOptions opt;
  opt.sample_count = sample_count;
  return validate_model(m, opt);
}

ValidationReport validate_model(const Model& m, const ValidationOptions& opt) {
  std::mt19937_64 eng(opt.seed);
  std::uniform_real_distribution<double> ubox(-opt.box, opt.box);
  std::uniform_real_distribution<double> utime(0.0, opt.t_hi);
  std::uniform_real_distribution<double> uctrl(
      std::max(m.control_set.lo, -opt.box), std::min(m.control_set.hi, opt.box));

  std::vector<Point> pts(static_cast<std::size_t>(opt.sample_count));
  for (auto& p : pts) {
    p = Point{utime(eng), ubox(eng), ubox(eng), uctrl(eng), uctrl(eng)};
  }

  ValidationReport rep;
  MismatchTracker first, second;

  check_coef("b", m.drift, pts, m.second_order, first, second);
  check_coef("sigma", m.diffusion_b, pts, m.second_order, first, second);
  check_coef("theta", m.diffusion_w, pts, m.second_order, first, second);

  // Jump coefficient at the mean mark.
  if (m.jump.has_first()) {
    Coef at_mark;
    const JumpCoef* jc = &m.jump;
    const double mark = m.marks.kind == MarkDistribution::Kind::constant
                            ? m.marks.a
                            : 0.5 * (m.marks.a + m.marks.b);
    at_mark.value = [jc, mark](double t, double x, double xd, double u, double ud) {
      return jc->value(t, x, xd, u, ud, mark);
    };
    for (int i = 0; i < 4; ++i) {
      at_mark.d1[i] = [jc, mark, i](double t, double x, double xd, double u, double ud) {
        return jc->d1[i](t, x, xd, u, ud, mark);
      };
    }
    if (m.jump.has_second()) {
      for (int i = 0; i < 16; ++i) {
        at_mark.d2[i] = [jc, mark, i](double t, double x, double xd, double u, double ud) {
          return jc->d2[i](t, x, xd, u, ud, mark);
        };
      }
    }
    check_coef("gamma", at_mark, pts, m.second_order, first, second);
  }

  // Running cost partials (three arguments).
  if (m.cost.has_first()) {
    for (const auto& p : pts) {
      const double scale = std::abs(m.cost.value(p.t, p.x, p.u, p.ud));
      auto fd = [&](int slot) {
        return central_diff(
            [&](double s) {
              return m.cost.value(p.t, p.x + (slot == 0 ? s : 0.0), p.u + (slot == 1 ? s : 0.0),
                                  p.ud + (slot == 2 ? s : 0.0));
            },
            0.0);
      };
      first.update(m.cost.dx(p.t, p.x, p.u, p.ud), fd(0), scale, "l_x");
      first.update(m.cost.du(p.t, p.x, p.u, p.ud), fd(1), scale, "l_u");
      first.update(m.cost.dud(p.t, p.x, p.u, p.ud), fd(2), scale, "l_u'");
    }
  }

  // Terminal cost and observation derivatives.
  for (const auto& p : pts) {
    if (m.terminal.dx) {
      const double numeric = central_diff([&](double s) { return m.terminal.value(p.x + s); }, 0.0);
      first.update(m.terminal.dx(p.x), numeric, std::abs(m.terminal.value(p.x)), "phi_x");
    }
    if (m.obs.hx) {
      const double numeric = central_diff([&](double s) { return m.obs.h(p.t, p.x + s); }, 0.0);
      first.update(m.obs.hx(p.t, p.x), numeric, std::abs(m.obs.h(p.t, p.x)), "h_x");
    }
    rep.h_max = std::max(rep.h_max, std::abs(m.obs.h(p.t, p.x)));
  }

  // Lipschitz ratio estimate over random point pairs.
  for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
    const Point& p = pts[i];
    const Point& q = pts[i + 1];
    const double denom = std::sqrt(std::abs(p.t - q.t)) + std::abs(p.x - q.x) +
                         std::abs(p.xd - q.xd) + std::abs(p.u - q.u) + std::abs(p.ud - q.ud);
    if (denom < 1e-12) continue;
    const double df = std::abs(m.drift.value(p.t, p.x, p.xd, p.u, p.ud) -
                               m.drift.value(q.t, q.x, q.xd, q.u, q.ud));
    rep.lipschitz_ratio = std::max(rep.lipschitz_ratio, df / denom);
  }

  rep.max_first_mismatch = first.worst;
  rep.max_second_mismatch = second.worst;
  rep.worst_symbol = first.worst >= second.worst ? first.symbol : second.symbol;

  if (first.worst > opt.rel_tolerance) {
    rep.passed = false;
    rep.failures.push_back("first derivative mismatch in " + first.symbol + " (rel " +
                           std::to_string(first.worst) + ")");
  }
  if (second.worst > opt.rel_tolerance) {
    rep.passed = false;
    rep.failures.push_back("second derivative mismatch in " + second.symbol + " (rel " +
                           std::to_string(second.worst) + ")");
  }
  if (m.obs.bounded && m.obs.bound > 0.0 && rep.h_max > m.obs.bound) {
    rep.passed = false;
    rep.failures.push_back("observation drift exceeds its declared bound");
  }
  return rep;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << (passed ? "ok" : "FAILED") << " first=" << max_first_mismatch
     << " second=" << max_second_mismatch;
  if (!worst_symbol.empty()) os << " worst=" << worst_symbol;
  os << " lipschitz=" << lipschitz_ratio << " h_max=" << h_max;
  for (const auto& f : failures) os << "\n  " << f;
  return os.str();
}

}  // namespace dsmp
