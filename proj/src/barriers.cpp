#include "rbsde/barriers.hpp"

#include <string>
#include <utility>

#include "rbsde/errors.hpp"

namespace rbsde {

namespace {

void require_steps(int expected, int got, const char* what) {
  if (expected != got)
    throw std::invalid_argument(std::string("BarrierSet: ") + what + " has " + std::to_string(got) +
                                " steps, expected " + std::to_string(expected));
}

// lower/upper interval on Y_{t_{level+1}-} at one node.
std::pair<ExtReal, ExtReal> effective_at(const BarrierSet& b, Node n) {
  ExtReal lo = b.lower()[n];
  ExtReal hi = b.upper()[n];
  if (b.delta().has_atom(n)) lo = max(lo, b.lower_predictable().for_step(n));
  if (b.alpha().has_atom(n)) hi = min(hi, b.upper_predictable().for_step(n));
  return {lo, hi};
}

}  // namespace

BarrierSet::BarrierSet(ExtAdapted lower, ExtAdapted upper, ExtPredictable lower_predictable, IncreasingProcess delta,
                       ExtPredictable upper_predictable, IncreasingProcess alpha, std::vector<double> terminal)
    : lower_(std::move(lower)),
      upper_(std::move(upper)),
      lower_predictable_(std::move(lower_predictable)),
      delta_(std::move(delta)),
      upper_predictable_(std::move(upper_predictable)),
      alpha_(std::move(alpha)),
      terminal_(std::move(terminal)) {
  const int n = steps();
  if (n < 1) throw std::invalid_argument("BarrierSet: terminal values must cover a level N >= 1");
  require_steps(n, lower_.steps(), "L");
  require_steps(n, upper_.steps(), "U");
  require_steps(n, lower_predictable_.steps(), "l");
  require_steps(n, upper_predictable_.steps(), "u");
  require_steps(n, delta_.steps(), "delta");
  require_steps(n, alpha_.steps(), "alpha");
  for (int j = 0; j <= n; ++j) {
    lower_[{n, j}] = terminal_[j];
    upper_[{n, j}] = terminal_[j];
  }
  for (int i = 0; i < n; ++i) effective_barriers(*this, i);
}

BarrierSet BarrierSet::unconstrained(int steps, std::vector<double> terminal) {
  return BarrierSet(ExtAdapted(steps, ExtReal::neg_inf()), ExtAdapted(steps, ExtReal::pos_inf()),
                    ExtPredictable(steps, ExtReal::neg_inf()), IncreasingProcess(steps),
                    ExtPredictable(steps, ExtReal::pos_inf()), IncreasingProcess(steps), std::move(terminal));
}

EnvelopeResult envelope_n(const SampledFunction& g, double n) {
  const std::size_t m = g.times.size();
  if (g.values.size() != m || g.atoms.size() != m)
    throw std::invalid_argument("envelope_n: times, values and atoms must have the same length");
  EnvelopeResult out{n, std::vector<ExtReal>(m), std::vector<ExtReal>(m)};
  ExtReal running = ExtReal::neg_inf();  // max of g(s) + n s over atoms s seen so far
  for (std::size_t k = 0; k < m; ++k) {
    const double t = g.times[k];
    out.left_limit_values[k] = running - n * t;
    if (g.atoms[k] > 0.0) running = max(running, g.values[k] + n * g.times[k]);
    out.values[k] = running - n * t;
  }
  return out;
}

EnvelopeResult envelope_star(const SampledFunction& g) {
  const std::size_t m = g.times.size();
  if (g.values.size() != m || g.atoms.size() != m)
    throw std::invalid_argument("envelope_star: times, values and atoms must have the same length");
  EnvelopeResult out{std::nullopt, std::vector<ExtReal>(m, ExtReal::neg_inf()),
                     std::vector<ExtReal>(m, ExtReal::neg_inf())};
  for (std::size_t k = 0; k < m; ++k)
    if (g.atoms[k] > 0.0) out.values[k] = g.values[k];
  return out;
}

EffectiveLevel effective_barriers(const BarrierSet& b, int level) {
  if (level < 0 || level >= b.steps())
    throw std::out_of_range("effective_barriers: level " + std::to_string(level) + " outside 0.." +
                            std::to_string(b.steps() - 1));
  EffectiveLevel out{std::vector<ExtReal>(level + 1), std::vector<ExtReal>(level + 1)};
  for (int j = 0; j <= level; ++j) {
    auto [lo, hi] = effective_at(b, {level, j});
    if (hi < lo)
      throw InfeasibleBarriers("empty effective interval [" + to_string(lo) + ", " + to_string(hi) + "]",
                               Node{level, j});
    out.lower[j] = lo;
    out.upper[j] = hi;
  }
  return out;
}

EffectiveBarriers effective_barriers(const BarrierSet& b) {
  const int n = b.steps();
  EffectiveBarriers out{ExtAdapted(n, ExtReal{}), ExtAdapted(n, ExtReal{})};
  for (int i = 0; i < n; ++i) {
    auto level = effective_barriers(b, i);
    for (int j = 0; j <= i; ++j) {
      out.lower[{i, j}] = level.lower[j];
      out.upper[{i, j}] = level.upper[j];
    }
  }
  for (int j = 0; j <= n; ++j) {
    out.lower[{n, j}] = b.terminal()[j];
    out.upper[{n, j}] = b.terminal()[j];
  }
  return out;
}

bool check_left_constraint(const AdaptedProcess& y, const ExtPredictable& g, const IncreasingProcess& rho) {
  for (int i = 0; i < rho.steps(); ++i)
    for (int j = 0; j <= i; ++j) {
      const Node n{i, j};
      if (rho.has_atom(n) && g.for_step(n) > ExtReal(y[n])) return false;
    }
  return true;
}

bool check_left_constraint_above(const AdaptedProcess& y, const ExtPredictable& g, const IncreasingProcess& rho) {
  for (int i = 0; i < rho.steps(); ++i)
    for (int j = 0; j <= i; ++j) {
      const Node n{i, j};
      if (rho.has_atom(n) && g.for_step(n) < ExtReal(y[n])) return false;
    }
  return true;
}

bool check_left_constraint_pointwise(const Lattice& lattice, const AdaptedProcess& y, const ExtPredictable& g,
                                     const IncreasingProcess& rho) {
  const int n = lattice.steps();
  std::vector<double> times(n), atoms(n);
  std::vector<ExtReal> values(n);
  for (int k = 0; k < n; ++k) times[k] = lattice.time(k + 1);
  const std::uint64_t paths = std::uint64_t{1} << n;
  for (std::uint64_t bits = 0; bits < paths; ++bits) {
    const Path path(bits, n);
    for (int k = 0; k < n; ++k) {
      const Node node = path.node_at(k);
      values[k] = g.for_step(node);
      atoms[k] = rho.atom(node);
    }
    const auto star = envelope_star({times, values, atoms});
    for (int k = 0; k < n; ++k)
      if (star.values[k] > ExtReal(y[path.node_at(k)])) return false;
  }
  return true;
}

bool dom_membership(const AdaptedProcess& y, const BarrierSet& b) {
  for (int i = 0; i < b.steps(); ++i)
    for (int j = 0; j <= i; ++j) {
      const ExtReal v = y[{i, j}];
      if (v < b.lower()[{i, j}] || b.upper()[{i, j}] < v) return false;
    }
  return check_left_constraint(y, b.lower_predictable(), b.delta()) &&
         check_left_constraint_above(y, b.upper_predictable(), b.alpha());
}

}  // namespace rbsde
