// Declarative description of a controlled delay system.
//
// A coefficient f(t, x, x', u, u') carries its value together with optional
// analytic first and second partials with respect to the four non-time
// arguments; validate_model cross-checks the supplied partials against
// central finite differences at random sample points. The jump coefficient
// takes an extra scalar mark, the observation drift h depends on (t, x), the
// running cost on (t, x, u, u') and the terminal cost on x alone.
#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dsmp/grid.hpp"
#include "dsmp/noise.hpp"

namespace dsmp {

// Argument slots of a state coefficient, in signature order after time.
enum class Var : int { x = 0, xd = 1, u = 2, ud = 3 };

using CoefFn = std::function<double(double t, double x, double xd, double u, double ud)>;
using JumpFn = std::function<double(double t, double x, double xd, double u, double ud, double mark)>;

struct Coef {
  CoefFn value;
  std::array<CoefFn, 4> d1{};     // indexed by Var
  std::array<CoefFn, 16> d2{};    // d2[4*i + j] = second partial w.r.t. (Var i, Var j)

  bool has_first() const;
  bool has_second() const;
  Coef& set_d1(Var v, CoefFn fn);
  Coef& set_d2(Var i, Var j, CoefFn fn);  // fills both symmetric slots
  double deriv(Var v, double t, double x, double xd, double u, double ud) const;
  double deriv2(Var i, Var j, double t, double x, double xd, double u, double ud) const;

  static Coef zero();
  static Coef constant(double c);
};

struct JumpCoef {
  JumpFn value;
  std::array<JumpFn, 4> d1{};
  std::array<JumpFn, 16> d2{};

  bool has_first() const;
  bool has_second() const;
  JumpCoef& set_d1(Var v, JumpFn fn);
  JumpCoef& set_d2(Var i, Var j, JumpFn fn);
  double deriv(Var v, double t, double x, double xd, double u, double ud, double mark) const;
  double deriv2(Var i, Var j, double t, double x, double xd, double u, double ud, double mark) const;

  static JumpCoef zero();
  static JumpCoef constant(double c);
};

struct Observation {
  std::function<double(double t, double x)> h;
  std::function<double(double t, double x)> hx;
  std::function<double(double t, double x)> hxx;
  bool bounded = true;   // when set, validate_model checks |h| stays below `bound`
  double bound = 0.0;    // 0 means "no numeric bound declared"

  static Observation none();
};

struct RunningCost {
  // Arguments (t, x, u, ud); the delayed state does not enter the cost.
  std::function<double(double t, double x, double u, double ud)> value;
  std::function<double(double, double, double, double)> dx, du, dud;
  std::function<double(double, double, double, double)> dxx, dxu, dxud, duu, duud, dudud;

  bool has_first() const { return static_cast<bool>(dx) && static_cast<bool>(du) && static_cast<bool>(dud); }
  bool has_second() const;
  static RunningCost zero();
};

struct TerminalCost {
  std::function<double(double x)> value;
  std::function<double(double x)> dx;
  std::function<double(double x)> dxx;

  static TerminalCost zero();
  static TerminalCost linear(double slope);  // slope * x
};

// Deterministic function on [-delta, 0] supplying the initial history.
using Segment = std::function<double(double t)>;

struct ControlSet {
  double lo = -1e18;
  double hi = 1e18;
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
  bool bounded() const { return lo > -1e17 && hi < 1e17; }
};

struct Model {
  std::string name;
  Coef drift;               // b
  Coef diffusion_b;         // sigma, multiplies dB
  Coef diffusion_w;         // theta, multiplies the observation-noise driver
  JumpCoef jump;            // gamma
  Observation obs;          // h
  RunningCost cost;         // ell
  TerminalCost terminal;    // phi
  double delay = 0.0;
  Segment xi;               // state history on [-delta, 0]
  Segment eta;              // control history on [-delta, 0]
  double jump_intensity = 0.0;       // lambda
  MarkDistribution marks = MarkDistribution::constant(1.0);
  ControlSet control_set;
  bool second_order = false;  // second derivatives supplied and usable
};

// b~ = b - theta * h, the drift of the state once the observation noise is
// substituted by the observation increments.
double tilde_b(const Model& m, double t, double x, double xd, double u, double ud);

// First and second partials of b~ assembled from the parts of b, theta, h by
// the product rule; used by the variational recursions.
double tilde_b_deriv(const Model& m, Var v, double t, double x, double xd, double u, double ud);
double tilde_b_deriv2(const Model& m, Var i, Var j, double t, double x, double xd, double u,
                      double ud);

// ---------------------------------------------------------------------------
// Controls
// ---------------------------------------------------------------------------

// Admissible controls are adapted to the observation filtration by
// construction: either deterministic functions of time or per-path values
// produced by an observation-driven feedback pipeline. Paths built from
// arbitrary full-information data carry Kind::arbitrary and are rejected by
// check_admissible.
struct Control {
  enum class Kind { deterministic, observation_feedback, arbitrary };
  Kind kind = Kind::deterministic;
  std::function<double(double t)> fn;             // deterministic case
  std::vector<std::vector<double>> values;        // [path][node], feedback case
  Segment eta;                                    // history on [-delta, 0)

  double at(int path, int k, const TimeGrid& grid) const;

  static Control deterministic(std::function<double(double)> f, Segment eta_seg = nullptr);
  static Control zero();
  static Control feedback(std::vector<std::vector<double>> vals, Segment eta_seg = nullptr);
  static Control arbitrary(std::vector<std::vector<double>> vals, Segment eta_seg = nullptr);
};

// Throws std::invalid_argument for controls outside the admissible class
// (arbitrary full-information paths, values outside the control set).
void check_admissible(const Model& m, const Control& c, const TimeGrid& grid);

// base + scale * dir for deterministic controls; the history stays base's
// (directions vanish on the segment).
Control control_axpy(const Control& base, double scale, const Control& dir);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationReport {
  bool passed = true;
  double max_first_mismatch = 0.0;    // relative, over all coefficients and partials
  double max_second_mismatch = 0.0;
  std::string worst_symbol;           // e.g. "b_x" where the largest mismatch occurred
  double lipschitz_ratio = 0.0;       // max observed |df| / (|dt|^0.5 + sum |dargs|)
  double h_max = 0.0;                 // max |h| over the sampled domain
  std::vector<std::string> failures;  // human-readable violations

  std::string summary() const;
};

struct ValidationOptions {
  int sample_count = 256;
  double rel_tolerance = 1e-5;
  double box = 2.0;          // arguments sampled uniformly in [-box, box]
  double t_hi = 1.0;
  std::uint64_t seed = 0x5eedu;
};

// Pure and idempotent: compares analytic partials against central finite
// differences, estimates Lipschitz ratios over random point pairs and checks
// the declared bound on h.
ValidationReport validate_model(const Model& m, int sample_count);
ValidationReport validate_model(const Model& m, const ValidationOptions& opt);

}  // namespace dsmp
