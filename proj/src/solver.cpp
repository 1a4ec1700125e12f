#include "rbsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "rbsde/errors.hpp"

namespace rbsde {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxExpansions = 40;
constexpr int kMaxBisections = 200;

std::mutex stats_mutex;
SolveStatistics stats;

void record(const SkorokhodReport& r) {
  std::lock_guard lock(stats_mutex);
  ++stats.solves;
  stats.worst_residual = std::max(stats.worst_residual, r.worst());
}

double checked(double v, Node node, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteDriver(std::string(what) + " is not finite", node);
  return v;
}

}  // namespace

double SkorokhodReport::worst() const {
  return std::max({flat_off_plus, flat_off_minus, singularity_defect, barrier_violation});
}

double implicit_step(double e, const std::function<double(double)>& increment, Node node,
                     std::optional<double> bracket_lo, std::optional<double> bracket_hi) {
  checked(e, node, "conditional expectation");
  auto phi = [&](double y) { return checked(y - e - checked(increment(y), node, "driver increment"), node, "phi"); };

  const double f0 = checked(increment(e), node, "driver increment");
  const double y0 = e + f0;
  const double r0 = phi(y0);
  const double scale0 = std::max({1.0, std::fabs(e), std::fabs(f0)});
  if (std::fabs(r0) <= 4.0 * kEps * scale0 && (!bracket_lo || y0 >= *bracket_lo) && (!bracket_hi || y0 <= *bracket_hi))
    return y0;

  const double unit = std::max(1.0, std::fabs(e));
  double lo = bracket_lo.value_or(e - unit);
  double hi = bracket_hi.value_or(e + unit);
  double plo = phi(lo), phi_hi = phi(hi);
  double width = unit;
  for (int k = 0; plo > 0.0; ++k) {
    if (bracket_lo || k >= kMaxExpansions)
      throw ImplicitStepDivergence("no lower bracket for the implicit step", node);
    width *= 2.0;
    lo = e - width;
    plo = phi(lo);
  }
  width = unit;
  for (int k = 0; phi_hi < 0.0; ++k) {
    if (bracket_hi || k >= kMaxExpansions)
      throw ImplicitStepDivergence("no upper bracket for the implicit step", node);
    width *= 2.0;
    hi = e + width;
    phi_hi = phi(hi);
  }
  if (plo == 0.0) return lo;
  if (phi_hi == 0.0) return hi;

  for (int k = 0; k < kMaxBisections; ++k) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    const double pm = phi(mid);
    if (pm == 0.0) return mid;
    if (pm < 0.0) {
      lo = mid;
      plo = pm;
    } else {
      hi = mid;
      phi_hi = pm;
    }
  }
  double best = std::fabs(plo) <= std::fabs(phi_hi) ? lo : hi;
  double best_r = std::min(std::fabs(plo), std::fabs(phi_hi));
  const double rf = lo - plo * (hi - lo) / (phi_hi - plo);
  if (rf > lo && rf < hi) {
    const double prf = std::fabs(phi(rf));
    if (prf < best_r) best = rf;
  }
  return best;
}

double implicit_step(const Driver& driver, Node node, double e, double z, double dt) {
  return implicit_step(e, [&](double y) { return driver.step_increment(node, y, z, dt); }, node);
}

StepOutcome reflected_step(double e, const std::function<double(double)>& increment, ExtReal lo, ExtReal hi,
                           Node node) {
  auto phi = [&](double y) { return checked(y - e - checked(increment(y), node, "driver increment"), node, "phi"); };
  if (lo.finite()) {
    const double p = phi(lo.value());
    if (p >= 0.0) return {lo.value(), p, 0.0};
  }
  if (hi.finite()) {
    const double q = phi(hi.value());
    if (q <= 0.0) return {hi.value(), 0.0, -q};
  }
  std::optional<double> blo, bhi;
  if (lo.finite()) blo = lo.value();
  if (hi.finite()) bhi = hi.value();
  return {implicit_step(e, increment, node, blo, bhi), 0.0, 0.0};
}

Solution solve_reflected(const Lattice& lattice, const Driver& driver, const ExtAdapted& lower,
                         const ExtAdapted& upper, std::span<const double> xi) {
  const int n = lattice.steps();
  if (static_cast<int>(xi.size()) != n + 1) throw std::invalid_argument("solve: xi must have N+1 values");
  if (lower.steps() != n || upper.steps() != n) throw std::invalid_argument("solve: barrier depth mismatch");
  const double dt = lattice.dt();
  Solution s;
  s.y = AdaptedProcess(n, 0.0);
  s.z = PredictableProcess(n, 0.0);
  s.drift = PredictableProcess(n, 0.0);
  PredictableProcess kp(n, 0.0), km(n, 0.0);
  s.lower = lower;
  s.upper = upper;
  for (int j = 0; j <= n; ++j) {
    s.y[{n, j}] = checked(xi[j], {n, j}, "terminal value");
    s.lower[{n, j}] = xi[j];
    s.upper[{n, j}] = xi[j];
  }
  for (int i = n - 1; i >= 0; --i) {
    for (int j = 0; j <= i; ++j) {
      const Node node{i, j};
      const ExtReal lo = lower[node], hi = upper[node];
      if (lo > hi) throw InfeasibleBarriers("lower barrier above upper barrier", node);
      const double up = s.y[Lattice::up(node)], down = s.y[Lattice::down(node)];
      const double e = one_step_mean(up, down);
      const double z = one_step_z(up, down, lattice.sqrt_dt());
      auto increment = [&](double y) { return driver.step_increment(node, y, z, dt); };
      const StepOutcome out = reflected_step(e, increment, lo, hi, node);
      s.y[node] = out.y;
      s.z.for_step(node) = z;
      kp.for_step(node) = out.dk_plus;
      km.for_step(node) = out.dk_minus;
      s.drift.for_step(node) = increment(out.y);
    }
  }
  s.k_plus = IncreasingProcess(std::move(kp));
  s.k_minus = IncreasingProcess(std::move(km));
  s.residuals = skorokhod_residuals(s);
  record(s.residuals);
  return s;
}

Solution solve_rbsde(const Lattice& lattice, const Driver& driver, const BarrierSet& barriers) {
  if (barriers.steps() != lattice.steps()) throw std::invalid_argument("solve_rbsde: barrier depth mismatch");
  const EffectiveBarriers eff = effective_barriers(barriers);
  return solve_reflected(lattice, driver, eff.lower, eff.upper, barriers.terminal());
}

Solution solve_rbsde(const Lattice& lattice, const Driver& driver, const BarrierSet& barriers,
                     std::span<const double> xi) {
  const auto& t = barriers.terminal();
  if (!std::equal(t.begin(), t.end(), xi.begin(), xi.end()))
    throw std::invalid_argument("solve_rbsde: xi differs from the barrier terminal normalization");
  return solve_rbsde(lattice, driver, barriers);
}

SkorokhodReport skorokhod_residuals(const Solution& s) {
  SkorokhodReport r;
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s.steps(); ++i)
    for (int j = 0; j <= i; ++j) {
      const Node n{i, j};
      const double y = s.y[n];
      const double kp = s.k_plus.atom(n), km = s.k_minus.atom(n);
      const ExtReal lo = s.lower[n], hi = s.upper[n];
      if (kp > 0.0) r.flat_off_plus = std::max(r.flat_off_plus, lo.finite() ? kp * std::fabs(y - lo.value()) : inf);
      if (km > 0.0) r.flat_off_minus = std::max(r.flat_off_minus, hi.finite() ? km * std::fabs(hi.value() - y) : inf);
      r.singularity_defect = std::max(r.singularity_defect, kp * km);
      if (lo.finite()) r.barrier_violation = std::max(r.barrier_violation, lo.value() - y);
      if (hi.finite()) r.barrier_violation = std::max(r.barrier_violation, y - hi.value());
    }
  return r;
}

SolveStatistics solve_statistics() {
  std::lock_guard lock(stats_mutex);
  return stats;
}

void reset_solve_statistics() {
  std::lock_guard lock(stats_mutex);
  stats = {};
}

double budget_defect(const Lattice& lattice, const Driver& driver, const Solution& s) {
  const int n = lattice.steps();
  if (n > 24) throw DepthTooLarge("budget_defect enumerates 2^N paths; N = " + std::to_string(n));
  const double dt = lattice.dt(), sq = lattice.sqrt_dt();
  double worst = 0.0;
  std::vector<double> terms(n);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    const Path p(bits, n);
    for (int i = 0; i < n; ++i) {
      const Node node = p.node_at(i);
      const double y = s.y[node], z = s.z.for_step(node);
      const double db = p.up_at(i) ? sq : -sq;
      terms[i] = driver.step_increment(node, y, z, dt) + s.k_plus.atom(node) - s.k_minus.atom(node) - z * db;
    }
    double acc = s.y[p.node_at(n)];
    for (int i = n - 1; i >= 0; --i) {
      acc += terms[i];
      worst = std::max(worst, std::fabs(s.y[p.node_at(i)] - acc));
    }
  }
  return worst;
}

ComparisonReport comparison_check(const Lattice& lattice, const Solution& big, const Driver& big_driver,
                                  const Solution& small, double tol) {
  const int n = lattice.steps();
  if (big.steps() != n || small.steps() != n) throw std::invalid_argument("comparison_check: depth mismatch");
  ComparisonReport r;
  auto describe = [](const char* what, Node node, double a, double b) {
    std::ostringstream os;
    os.precision(17);
    os << what << " at " << to_string(node) << ": " << a << " vs " << b;
    return os.str();
  };
  auto leq = [tol](double a, double b) { return a <= b + tol * std::max({1.0, std::fabs(a), std::fabs(b)}); };

  for (int j = 0; j <= n; ++j) {
    const Node node{n, j};
    if (!leq(small.y[node], big.y[node])) r.hypothesis_failures.push_back(describe("xi' <= xi", node, small.y[node], big.y[node]));
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const Node node{i, j};
      ++r.nodes_checked;
      const ExtReal u = big.upper[node], l_small = small.lower[node];
      if (u.finite() && !leq(small.y[node], u.value()))
        r.hypothesis_failures.push_back(describe("H.1 Y' <= U", node, small.y[node], u.value()));
      if (l_small.finite() && !leq(l_small.value(), big.y[node]))
        r.hypothesis_failures.push_back(describe("H.1 L' <= Y", node, l_small.value(), big.y[node]));
      const double bound = big_driver.step_increment(node, small.y[node], small.z.for_step(node), lattice.dt());
      if (!leq(small.drift.for_step(node), bound))
        r.hypothesis_failures.push_back(describe("H.2 dA' <= f dt + g dA", node, small.drift.for_step(node), bound));

      const double excess = small.y[node] - big.y[node];
      r.max_y_excess = std::max(r.max_y_excess, excess);
      if (!leq(small.y[node], big.y[node])) r.violations.push_back(describe("Y' <= Y", node, small.y[node], big.y[node]));
      if (big.upper[node] == small.upper[node] && !leq(small.k_minus.atom(node), big.k_minus.atom(node)))
        r.violations.push_back(describe("dK'- <= dK-", node, small.k_minus.atom(node), big.k_minus.atom(node)));
      if (big.lower[node] == small.lower[node] && !leq(big.k_plus.atom(node), small.k_plus.atom(node)))
        r.violations.push_back(describe("dK+ <= dK'+", node, big.k_plus.atom(node), small.k_plus.atom(node)));
    }
  return r;
}

}  // namespace rbsde
