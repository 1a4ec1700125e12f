#include "rbsde/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

#include "rbsde/errors.hpp"

namespace rbsde {

namespace {

// log(cosh(x)) without overflow.
double log_cosh(double x) {
  const double a = std::fabs(x);
  if (a < 1.0) return std::log(std::cosh(a));
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

double clamp_to(double y, ExtReal lo, ExtReal hi) {
  if (lo.finite() && y < lo.value()) return lo.value();
  if (hi.finite() && y > hi.value()) return hi.value();
  return y;
}

std::vector<Node> interior_nodes(int steps) {
  std::vector<Node> out;
  for (int i = 0; i < steps; ++i)
    for (int j = 0; j <= i; ++j) out.push_back({i, j});
  return out;
}

}  // namespace

Driver::Driver(DriftFn f, DriftIncrementFn increment, std::vector<MeasureTerm> terms)
    : f_(std::move(f)), increment_(std::move(increment)), terms_(std::move(terms)) {
  if (!f_) throw std::invalid_argument("Driver: empty f");
}

double Driver::measure_increment(Node n, double y_left, double y) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    const double w = t.measure.atom(n);
    if (w > 0.0) sum += t.g(n, y_left, y) * w;
  }
  return sum;
}

const MeasureTerm* Driver::term(const std::string& label) const {
  for (const auto& t : terms_)
    if (t.label == label) return &t;
  return nullptr;
}

Driver Driver::with_term(MeasureTerm term) const {
  Driver out = *this;
  out.terms_.push_back(std::move(term));
  return out;
}

Driver Driver::with_bounds(GrowthBounds bounds) const {
  Driver out = *this;
  out.bounds_ = std::move(bounds);
  return out;
}

Driver Driver::shifted(double c) const {
  Driver out = *this;
  auto f = f_;
  out.f_ = [f, c](Node n, double y, double z) { return f(n, y, z) + c; };
  if (increment_) {
    auto inc = increment_;
    out.increment_ = [inc, c](Node n, double y, double z, double dt) { return inc(n, y, z, dt) + c * dt; };
  }
  return out;
}

namespace drivers {

Driver zero() { return Driver([](Node, double, double) { return 0.0; }); }

Driver linear(double a, double b, double c) {
  return Driver([a, b, c](Node, double y, double z) { return a * y + b * z + c; });
}

Driver quadratic(double c) {
  if (c == 0.0) return zero();
  return Driver([c](Node, double, double z) { return c * z * z; },
                [c](Node, double, double z, double dt) { return log_cosh(2.0 * c * z * std::sqrt(dt)) / (2.0 * c); });
}

Driver quadratic_euler(double c) {
  return Driver([c](Node, double, double z) { return c * z * z; });
}

Driver tabulated(AdaptedProcess h) {
  auto table = std::make_shared<const AdaptedProcess>(std::move(h));
  return Driver([table](Node n, double, double) { return (*table)[n]; });
}

MeasureFn g_linear(double x_coef, double y_coef, double c) {
  return [x_coef, y_coef, c](Node, double x, double y) { return x_coef * x + y_coef * y + c; };
}

Driver with_measure(const Driver& d, IncreasingProcess a, MeasureFn g) {
  return d.with_term({"g", std::move(a), std::move(g)});
}

}  // namespace drivers

AdaptedProcess running_cone_max(const AdaptedProcess& x) {
  AdaptedProcess out = x;
  for (int i = 1; i <= x.steps(); ++i)
    for (int j = 0; j <= i; ++j) {
      double m = out[{i, j}];
      if (j >= 1) m = std::max(m, out[{i - 1, j - 1}]);
      if (j <= i - 1) m = std::max(m, out[{i - 1, j}]);
      out[{i, j}] = m;
    }
  return out;
}

GrowthBounds dominate_growth(const std::function<double(double)>& phi, const AdaptedProcess& eta_tilde,
                             const AdaptedProcess& c_tilde, const AdaptedProcess& eta_hat, const ExtAdapted& lower,
                             const ExtAdapted& upper, IncreasingProcess a) {
  if (!phi) throw std::invalid_argument("dominate_growth: empty phi");
  const int n = eta_tilde.steps();
  AdaptedProcess spread(n, 0.0);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= i; ++j) {
      const ExtReal l = lower[{i, j}], u = upper[{i, j}];
      if (!l.finite() || !u.finite())
        throw std::invalid_argument("dominate_growth: barriers must be finite, got infinite value at node " +
                                    to_string(Node{i, j}));
      spread[{i, j}] = std::max(u.value(), 0.0) + std::max(-l.value(), 0.0);
    }
  AdaptedProcess d = running_cone_max(spread);
  double d_max = 0.0;
  std::vector<double> probes;
  for (int i = 0; i <= n; ++i)
    for (double& v : d.level(i)) {
      v *= 2.0;
      d_max = std::max(d_max, v);
      probes.push_back(v);
    }
  for (int k = 0; k <= 256; ++k) probes.push_back(d_max * k / 256.0);
  std::sort(probes.begin(), probes.end());
  for (std::size_t k = 1; k < probes.size(); ++k)
    if (phi(probes[k]) < phi(probes[k - 1]))
      throw NonMonotonePhi("phi decreases between " + std::to_string(probes[k - 1]) + " and " +
                           std::to_string(probes[k]));

  GrowthBounds out{eta_tilde, c_tilde, eta_hat, a.steps() == 0 ? IncreasingProcess(n) : std::move(a), phi};
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double scale = phi(d[{i, j}]);
      out.eta[{i, j}] *= scale;
      out.c[{i, j}] *= scale;
      out.beta[{i, j}] *= scale;
    }
  return out;
}

SemimartingaleSpec SemimartingaleSpec::from_components(const Lattice& lattice, double s0, IncreasingProcess v_plus,
                                                       IncreasingProcess v_minus, PredictableProcess gamma) {
  const int n = lattice.steps();
  if (v_plus.steps() != n || v_minus.steps() != n || gamma.steps() != n)
    throw std::invalid_argument("SemimartingaleSpec: component step counts differ from the lattice");
  AdaptedProcess s(n, 0.0);
  s[{0, 0}] = s0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const Node node{i, j};
      const double drift = v_minus.atom(node) - v_plus.atom(node);
      const double diffusion = gamma.for_step(node) * lattice.sqrt_dt();
      const double up = s[node] + drift + diffusion;
      const double down = s[node] + drift - diffusion;
      s[Lattice::down(node)] = down;
      if (j == i) s[Lattice::up(node)] = up;
      // (i+1, j+1) is also the down child of (i, j+1).
      if (j + 1 <= i) {
        const Node sibling{i, j + 1};
        const double other = s[sibling] + v_minus.atom(sibling) - v_plus.atom(sibling) -
                             gamma.for_step(sibling) * lattice.sqrt_dt();
        const double scale = std::max({1.0, std::fabs(up), std::fabs(other)});
        if (std::fabs(up - other) > 1e-12 * scale)
          throw NonRecombiningWitness("parents disagree on S (" + std::to_string(up) + " vs " +
                                          std::to_string(other) + ")",
                                      Lattice::up(node));
      }
    }
  }
  SemimartingaleSpec out;
  out.values_ = std::move(s);
  out.v_plus_ = std::move(v_plus);
  out.v_minus_ = std::move(v_minus);
  out.gamma_ = std::move(gamma);
  return out;
}

SemimartingaleSpec SemimartingaleSpec::from_values(const Lattice& lattice, AdaptedProcess s) {
  const int n = lattice.steps();
  if (s.steps() != n) throw std::invalid_argument("SemimartingaleSpec: S step count differs from the lattice");
  PredictableProcess vp(n, 0.0), vm(n, 0.0), gamma(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const Node node{i, j};
      const double e = conditional_expectation(s, node);
      const double drift = s[node] - e;  // = dV+ - dV-
      vp.for_step(node) = std::max(drift, 0.0);
      vm.for_step(node) = std::max(-drift, 0.0);
      gamma.for_step(node) = martingale_increment_coefficient(lattice, s, node);
    }
  SemimartingaleSpec out;
  out.values_ = std::move(s);
  out.v_plus_ = IncreasingProcess(std::move(vp));
  out.v_minus_ = IncreasingProcess(std::move(vm));
  out.gamma_ = std::move(gamma);
  return out;
}

SemimartingaleSpec SemimartingaleSpec::with_terminal(const Lattice& lattice, std::span<const double> xi) const {
  const int n = lattice.steps();
  if (static_cast<int>(xi.size()) != n + 1) throw std::invalid_argument("with_terminal: xi must have N+1 values");
  SemimartingaleSpec out = *this;
  for (int j = 0; j <= n; ++j) out.values_[{n, j}] = xi[j];
  PredictableProcess vp = v_plus_.atoms(), vm = v_minus_.atoms();
  for (int j = 0; j < n; ++j) {
    const Node node{n - 1, j};
    const double e = conditional_expectation(out.values_, node);
    const double drift = out.values_[node] - e;
    vp.for_step(node) = std::max(drift, 0.0);
    vm.for_step(node) = std::max(-drift, 0.0);
    out.gamma_.for_step(node) = martingale_increment_coefficient(lattice, out.values_, node);
  }
  out.v_plus_ = IncreasingProcess(std::move(vp));
  out.v_minus_ = IncreasingProcess(std::move(vm));
  return out;
}

bool SemimartingaleSpec::is_martingale(double tol) const {
  for (int i = 0; i < v_plus_.steps(); ++i)
    for (int j = 0; j <= i; ++j)
      if (v_plus_.atom({i, j}) > tol || v_minus_.atom({i, j}) > tol) return false;
  return true;
}

AdaptedProcess penalty_weight_m(const AdaptedProcess& c) {
  AdaptedProcess abs_c = c;
  for (int i = 0; i <= c.steps(); ++i)
    for (double& v : abs_c.level(i)) v = std::fabs(v);
  AdaptedProcess m = running_cone_max(abs_c);
  for (int i = 0; i <= c.steps(); ++i)
    for (double& v : m.level(i)) v = 1.0 + 8.0 * v;
  return m;
}

Driver build_dominated_driver(const GrowthBounds& bounds, const SemimartingaleSpec& spec, Orientation orientation) {
  struct Data {
    AdaptedProcess eta, c, beta, m;
    PredictableProcess gamma;
  };
  auto data = std::make_shared<const Data>(
      Data{bounds.eta, bounds.c, bounds.beta, penalty_weight_m(bounds.c), spec.gamma()});
  const double sign = orientation == Orientation::upper ? 1.0 : -1.0;
  Driver d(
      [data, sign](Node n, double, double z) {
        const double g = data->gamma.for_step(n);
        const double shift = z - g;
        return sign * (data->eta[n] + 4.0 * data->c[n] * g * g + 0.5 * data->m[n] * shift * shift);
      },
      [data, sign](Node n, double, double z, double dt) {
        const double g = data->gamma.for_step(n);
        const double m = data->m[n];
        const double base = (data->eta[n] + 4.0 * data->c[n] * g * g) * dt;
        return sign * (base + log_cosh(m * (z - g) * std::sqrt(dt)) / m);
      });
  d = d.with_term({"V+", spec.v_plus(), [sign](Node, double, double) { return sign; }})
          .with_term({"V-", spec.v_minus(), [sign](Node, double, double) { return sign; }})
          .with_term({"beta dA", bounds.a, [data, sign](Node n, double, double) { return sign * data->beta[n]; }});
  return d.with_bounds(bounds);
}

std::size_t AuditReport::count(const std::string& check) const {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(), [&](const AuditViolation& v) { return v.check == check; }));
}

std::vector<double> audit_probe_values() {
  std::vector<double> out{0.0};
  for (int k = 0; k <= 12; ++k) {
    const double v = std::pow(10.0, -3.0 + 0.5 * k);
    out.push_back(v);
    out.push_back(-v);
  }
  return out;
}

AuditReport audit_assumptions(const Lattice& lattice, const Driver& driver, const BarrierSet& barriers,
                              const SemimartingaleSpec* spec, std::size_t probes) {
  if (probes < 1) throw std::invalid_argument("audit_assumptions: probes must be >= 1");
  AuditReport report;
  report.probes = probes;
  const auto values = audit_probe_values();
  const std::size_t nv = values.size();
  const auto nodes = interior_nodes(lattice.steps());
  const auto& bounds = driver.bounds();
  report.bounds_checked = bounds.has_value();
  const MeasureTerm* g_term = driver.term("g");

  for (std::size_t k = 0; k < probes; ++k) {
    const Node n = nodes[k % nodes.size()];
    const double y = values[k % nv];
    const double z = values[(k / nv) % nv];
    const double x = values[(k / (nv * nv)) % nv];
    const ExtReal lo = barriers.lower()[n], hi = barriers.upper()[n];
    const double yc = clamp_to(y, lo, hi);

    if (bounds) {
      const double lhs = std::fabs(driver.f(n, yc, z));
      const double rhs = bounds->eta[n] + bounds->c[n] * z * z;
      if (!(lhs <= rhs * (1.0 + 1e-12) + 1e-300)) report.violations.push_back({"A1a", n, yc, z, lhs, rhs});
    }
    if (g_term && g_term->measure.has_atom(n)) {
      const double w = g_term->measure.atom(n);
      const double xc = clamp_to(x, lo, hi);
      if (bounds) {
        const double lhs = std::fabs(g_term->g(n, xc, yc));
        const double rhs = bounds->beta[n];
        if (!(lhs <= rhs * (1.0 + 1e-12))) report.violations.push_back({"A2a", n, yc, xc, lhs, rhs});
      }
      const double h = 1e-6 * std::max(1.0, std::fabs(y));
      const double before = y + g_term->g(n, x, y) * w;
      const double after = (y + h) + g_term->g(n, x, y + h) * w;
      if (after - before < -1e-12 * std::max(1.0, std::fabs(before)))
        report.violations.push_back({"A2c", n, y, x, after, before});
    }
  }
  if (spec && !dom_membership(spec->values(), barriers))
    report.violations.push_back({"A3", Node{0, 0}, spec->s0(), 0.0, 0.0, 0.0});
  return report;
}

}  // namespace rbsde
