#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbsde/barriers.hpp"
#include "rbsde/lattice.hpp"

namespace rbsde {

using DriftFn = std::function<double(Node, double y, double z)>;
/// Integrated drift over one step [t_i, t_{i+1}] from node (i, j).
using DriftIncrementFn = std::function<double(Node, double y, double z, double dt)>;
/// g(t, y_left, y) integrated against an atomic measure.
using MeasureFn = std::function<double(Node, double y_left, double y)>;

/// One g dA-type term: the atom of `measure` at t_{i+1} is weighted by g at node (i, j).
struct MeasureTerm {
  std::string label;
  IncreasingProcess measure;
  MeasureFn g;
};

/// Domination data for the drivers:
///   |f(t, L v y ^ U, z)| <= eta_t + C_t z^2,  |g(t, x, y)| <= beta_t on atoms of A.
struct GrowthBounds {
  AdaptedProcess eta;
  AdaptedProcess c;
  AdaptedProcess beta;
  IncreasingProcess a;
  std::function<double(double)> phi;  // empty unless produced by dominate_growth
};

/// Generator pair (f, g dA) plus any further measure terms. Immutable; the
/// closures hold their parameters by value so evaluation is thread-safe.
class Driver {
 public:
  Driver() = default;
  explicit Driver(DriftFn f, DriftIncrementFn increment = {}, std::vector<MeasureTerm> terms = {});

  double f(Node n, double y, double z) const { return f_(n, y, z); }
  /// f dt unless the catalog entry supplies a lattice-consistent increment.
  double drift_increment(Node n, double y, double z, double dt) const {
    return increment_ ? increment_(n, y, z, dt) : f_(n, y, z) * dt;
  }
  double measure_increment(Node n, double y_left, double y) const;
  /// Everything the step from level i+1 to i adds to Y_i, with both g arguments at y.
  double step_increment(Node n, double y, double z, double dt) const {
    return drift_increment(n, y, z, dt) + measure_increment(n, y, y);
  }

  const std::vector<MeasureTerm>& terms() const { return terms_; }
  const MeasureTerm* term(const std::string& label) const;
  const std::optional<GrowthBounds>& bounds() const { return bounds_; }

  Driver with_term(MeasureTerm term) const;
  Driver with_bounds(GrowthBounds bounds) const;
  /// f + c, keeping terms and bounds.
  Driver shifted(double c) const;

 private:
  DriftFn f_ = [](Node, double, double) { return 0.0; };
  DriftIncrementFn increment_;
  std::vector<MeasureTerm> terms_;
  std::optional<GrowthBounds> bounds_;
};

namespace drivers {

Driver zero();
/// f = a y + b z + c.
Driver linear(double a, double b, double c);
/// f = c z^2 with the exponential-transform increment
/// (1/(2c)) log cosh(2c z sqrt(dt)), which makes exp(2cY) an exact lattice martingale.
Driver quadratic(double c);
/// f = c z^2 with the plain increment c z^2 dt.
Driver quadratic_euler(double c);
/// f(t, y, z) = h(node).
Driver tabulated(AdaptedProcess h);

/// g = x_coef * y_left + y_coef * y + c.
MeasureFn g_linear(double x_coef, double y_coef, double c);
/// Attaches the generator g against A under the label "g".
Driver with_measure(const Driver& d, IncreasingProcess a, MeasureFn g);

}  // namespace drivers

/// Running max over the ancestor cone: max of x over all nodes (k, j') that some
/// path through n visits at k <= i. Nondecreasing along every path and the smallest
/// node-adapted process dominating each path's running max.
AdaptedProcess running_cone_max(const AdaptedProcess& x);

/// eta = phi(D) eta~, C = phi(D) C~, beta = phi(D) eta^, D_t = 2 sup_{s<=t} (U+_s + L-_s).
/// Throws NonMonotonePhi when probing finds phi decreasing; L and U must be finite.
GrowthBounds dominate_growth(const std::function<double(double)>& phi, const AdaptedProcess& eta_tilde,
                             const AdaptedProcess& c_tilde, const AdaptedProcess& eta_hat, const ExtAdapted& lower,
                             const ExtAdapted& upper, IncreasingProcess a = {});

/// The witness S = S_0 + V- - V+ + sum gamma dB. In a recombining model S has to be a
/// node function, so forward reconstruction is checked for consistency.
class SemimartingaleSpec {
 public:
  /// Throws NonRecombiningWitness if the two parents of a node disagree.
  static SemimartingaleSpec from_components(const Lattice& lattice, double s0, IncreasingProcess v_plus,
                                            IncreasingProcess v_minus, PredictableProcess gamma);
  /// Canonical decomposition: gamma from the up/down spread, the one-step drift
  /// S_i - E[S_{i+1}] split into its positive (V+) and negative (V-) parts.
  static SemimartingaleSpec from_values(const Lattice& lattice, AdaptedProcess s);

  /// S_T replaced by xi; the last step is re-decomposed.
  SemimartingaleSpec with_terminal(const Lattice& lattice, std::span<const double> xi) const;

  double s0() const { return values_[{0, 0}]; }
  const AdaptedProcess& values() const { return values_; }
  const IncreasingProcess& v_plus() const { return v_plus_; }
  const IncreasingProcess& v_minus() const { return v_minus_; }
  const PredictableProcess& gamma() const { return gamma_; }
  /// V+ and V- vanish (up to tol): the hypothesis (A) martingale case.
  bool is_martingale(double tol = 0.0) const;

 private:
  AdaptedProcess values_;
  IncreasingProcess v_plus_;
  IncreasingProcess v_minus_;
  PredictableProcess gamma_;
};

enum class Orientation { lower, upper };

/// Driver of the penalized equations without the penalty:
///   upper: f = eta + 4 C gamma^2 + (m/2)(z - gamma)^2, measure part dV+ + dV- + beta dA;
///   lower: the negation of both.
/// The quadratic part is integrated over a step as (1/m) log cosh(m (z - gamma) sqrt(dt)).
/// m_t = 1 + 8 sup_{r<=t} |C_r| over the ancestor cone.
Driver build_dominated_driver(const GrowthBounds& bounds, const SemimartingaleSpec& spec, Orientation orientation);

/// m = 1 + 8 running_cone_max(|C|).
AdaptedProcess penalty_weight_m(const AdaptedProcess& c);

struct AuditViolation {
  std::string check;  // "A1a", "A2a", "A2c", "A3"
  Node node;
  double y = 0.0;
  double z = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct AuditReport {
  std::size_t probes = 0;
  bool bounds_checked = false;
  std::vector<AuditViolation> violations;

  bool passed() const { return violations.empty(); }
  std::size_t count(const std::string& check) const;
};

/// Sampling-based falsification of the growth, monotonicity and witness assumptions.
/// Probe values: 0 and +-10^e for e = -3, -2.5, ..., 3, crossed over (z, y, x) and
/// cycled over the nodes of levels 0..N-1.
AuditReport audit_assumptions(const Lattice& lattice, const Driver& driver, const BarrierSet& barriers,
                              const SemimartingaleSpec* spec, std::size_t probes = 1000);

/// The probe values used by audit_assumptions.
std::vector<double> audit_probe_values();

}  // namespace rbsde
