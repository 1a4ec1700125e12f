#include "rbsde/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace rbsde::oracle {

namespace {

using Rules = std::vector<std::vector<std::uint8_t>>;

// Rules for the subtree entered at `level` with history `prefix`; entries are indexed
// by the local path bits (bit 0 = move at `level`).
Rules subtree_rules(int level, std::uint64_t prefix, int depth,
                    const std::function<bool(int, std::uint64_t)>& allowed) {
  const std::size_t width = std::size_t{1} << (depth - level);
  Rules out;
  if (level == depth || !allowed || allowed(level, prefix)) out.emplace_back(width, static_cast<std::uint8_t>(level));
  if (level == depth) return out;
  const Rules down = subtree_rules(level + 1, prefix, depth, allowed);
  const Rules up = subtree_rules(level + 1, prefix | (std::uint64_t{1} << level), depth, allowed);
  out.reserve(out.size() + down.size() * up.size());
  for (const auto& d : down)
    for (const auto& u : up) {
      std::vector<std::uint8_t> r(width);
      for (std::size_t k = 0; k < width / 2; ++k) {
        r[k << 1] = d[k];
        r[(k << 1) | 1] = u[k];
      }
      out.push_back(std::move(r));
    }
  return out;
}

Node node_on_path(std::uint64_t path, int level) {
  const std::uint64_t mask = level == 0 ? 0 : ((std::uint64_t{1} << level) - 1);
  return {level, std::popcount(path & mask)};
}

void check_depth(int depth, int max_depth, std::size_t terminal_size) {
  if (depth < 1) throw std::invalid_argument("oracle: depth must be >= 1");
  if (depth > max_depth)
    throw DepthTooLarge("exhaustive enumeration is capped at depth " + std::to_string(max_depth) + ", got " +
                        std::to_string(depth));
  if (terminal_size != static_cast<std::size_t>(depth) + 1)
    throw std::invalid_argument("oracle: terminal values must have N+1 entries");
}

}  // namespace

NoValue::NoValue(double maxmin, double minmax)
    : Error("enumerated game has no value: maxmin " + std::to_string(maxmin) + " < minmax " + std::to_string(minmax)),
      maxmin_(maxmin),
      minmax_(minmax) {}

std::uint64_t stopping_rule_count(int depth) {
  std::uint64_t a = 1;
  for (int d = 1; d <= depth; ++d) a = 1 + a * a;
  return a;
}

std::vector<std::vector<std::uint8_t>> enumerate_stopping_rules(
    int depth, const std::function<bool(int, std::uint64_t)>& allowed) {
  if (depth < 0 || depth > 5) throw DepthTooLarge("rule enumeration supports depth <= 5");
  return subtree_rules(0, 0, depth, allowed);
}

double exhaustive_stopping_value(const ExtAdapted& lower, std::span<const double> terminal, int max_depth) {
  const int n = lower.steps();
  check_depth(n, max_depth, terminal.size());
  const std::size_t paths = std::size_t{1} << n;
  auto allowed = [&](int level, std::uint64_t path) { return lower[node_on_path(path, level)].finite(); };
  const Rules rules = enumerate_stopping_rules(n, allowed);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : rules) {
    double sum = 0.0;
    for (std::uint64_t p = 0; p < paths; ++p) {
      const int tau = r[p];
      sum += tau == n ? terminal[std::popcount(p)] : lower[node_on_path(p, tau)].value();
    }
    best = std::max(best, sum / static_cast<double>(paths));
  }
  return best;
}

bool DynkinResult::has_value() const { return std::fabs(maxmin - minmax) <= 1e-12 * std::max(1.0, std::fabs(minmax)); }

double DynkinResult::value() const {
  if (!has_value()) throw NoValue(maxmin, minmax);
  return 0.5 * (maxmin + minmax);
}

DynkinResult exhaustive_dynkin(const ExtAdapted& lower, const ExtAdapted& upper, std::span<const double> terminal,
                               int max_depth) {
  const int n = lower.steps();
  check_depth(n, max_depth, terminal.size());
  if (upper.steps() != n) throw std::invalid_argument("oracle: barrier depth mismatch");
  const std::size_t paths = std::size_t{1} << n;
  const Rules stopper =
      enumerate_stopping_rules(n, [&](int level, std::uint64_t p) { return lower[node_on_path(p, level)].finite(); });
  const Rules controller =
      enumerate_stopping_rules(n, [&](int level, std::uint64_t p) { return upper[node_on_path(p, level)].finite(); });

  std::vector<double> payoff(stopper.size() * controller.size());
  for (std::size_t a = 0; a < stopper.size(); ++a)
    for (std::size_t b = 0; b < controller.size(); ++b) {
      double sum = 0.0;
      for (std::uint64_t p = 0; p < paths; ++p) {
        const int tau = stopper[a][p], sigma = controller[b][p];
        if (tau <= sigma && tau < n)
          sum += lower[node_on_path(p, tau)].value();
        else if (sigma < tau)
          sum += upper[node_on_path(p, sigma)].value();
        else
          sum += terminal[std::popcount(p)];
      }
      payoff[a * controller.size() + b] = sum / static_cast<double>(paths);
    }

  DynkinResult r;
  r.stopper_rules = stopper.size();
  r.controller_rules = controller.size();
  r.maxmin = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < stopper.size(); ++a) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < controller.size(); ++b) worst = std::min(worst, payoff[a * controller.size() + b]);
    r.maxmin = std::max(r.maxmin, worst);
  }
  r.minmax = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < controller.size(); ++b) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < stopper.size(); ++a) best = std::max(best, payoff[a * controller.size() + b]);
    r.minmax = std::min(r.minmax, best);
  }
  return r;
}

double exhaustive_dynkin_value(const ExtAdapted& lower, const ExtAdapted& upper, std::span<const double> terminal,
                               int max_depth) {
  return exhaustive_dynkin(lower, upper, terminal, max_depth).value();
}

double quadratic_closed_form(double c, std::span<const double> terminal) {
  if (!(c > 0.0)) throw std::invalid_argument("quadratic_closed_form: c must be > 0");
  if (terminal.empty()) throw std::invalid_argument("quadratic_closed_form: no terminal values");
  const int n = static_cast<int>(terminal.size()) - 1;
  std::vector<double> logs(terminal.size());
  double top = -std::numeric_limits<double>::infinity();
  for (int j = 0; j <= n; ++j) {
    const double log_w = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) - n * std::log(2.0);
    logs[j] = log_w + 2.0 * c * terminal[j];
    top = std::max(top, logs[j]);
  }
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - top);
  return (top + std::log(sum)) / (2.0 * c);
}

double path_expectation(std::span<const double> terminal) {
  const int n = static_cast<int>(terminal.size()) - 1;
  if (n < 0 || n > 30) throw DepthTooLarge("path_expectation enumerates 2^N paths");
  const std::uint64_t paths = std::uint64_t{1} << n;
  double sum = 0.0;
  for (std::uint64_t p = 0; p < paths; ++p) sum += terminal[std::popcount(p)];
  return sum / static_cast<double>(paths);
}

double crr_rate(double sigma, double horizon, int steps) {
  const double dt = horizon / steps;
  return std::log(std::cosh(sigma * std::sqrt(dt))) / dt;
}

double crr_american_put(double strike, double spot, double sigma, double horizon, int steps) {
  if (steps < 1) throw std::invalid_argument("crr_american_put: steps must be >= 1");
  const double dt = horizon / steps;
  const double u = std::exp(sigma * std::sqrt(dt));
  const double disc = 1.0 / std::cosh(sigma * std::sqrt(dt));  // exp(-r dt)
  std::vector<double> v(steps + 1);
  for (int j = 0; j <= steps; ++j) v[j] = std::max(strike - spot * std::pow(u, 2 * j - steps), 0.0);
  for (int i = steps - 1; i >= 0; --i)
    for (int j = 0; j <= i; ++j) {
      const double cont = disc * 0.5 * (v[j + 1] + v[j]);
      v[j] = std::max(std::max(strike - spot * std::pow(u, 2 * j - i), 0.0), cont);
    }
  return v[0];
}

std::vector<ExtReal> envelope_brute_force(std::span<const double> times, std::span<const ExtReal> values,
                                          std::span<const double> atoms, double n) {
  if (times.size() != values.size() || times.size() != atoms.size())
    throw std::invalid_argument("envelope_brute_force: size mismatch");
  std::vector<ExtReal> out(times.size(), ExtReal::neg_inf());
  for (std::size_t k = 0; k < times.size(); ++k)
    for (std::size_t i = 0; i <= k; ++i) {
      if (!(atoms[i] > 0.0) || values[i].is_neg_inf()) continue;
      if (values[i].is_pos_inf()) {
        out[k] = ExtReal::pos_inf();
        continue;
      }
      out[k] = max(out[k], ExtReal(values[i].value() - n * (times[k] - times[i])));
    }
  return out;
}

bool left_constraint_brute_force(const AdaptedProcess& y, const ExtPredictable& g, const IncreasingProcess& rho) {
  const int n = y.steps();
  if (n > 24) throw DepthTooLarge("left_constraint_brute_force enumerates 2^N paths");
  for (std::uint64_t p = 0; p < (std::uint64_t{1} << n); ++p)
    for (int i = 0; i < n; ++i) {
      const Node node = node_on_path(p, i);
      if (rho.atom(node) > 0.0 && g.for_step(node) > ExtReal(y[node])) return false;
    }
  return true;
}

bool left_constraint_large_n(const Lattice& lattice, const AdaptedProcess& y, const ExtPredictable& g,
                             const IncreasingProcess& rho, double n) {
  const int steps = y.steps();
  if (steps > 24) throw DepthTooLarge("left_constraint_large_n enumerates 2^N paths");
  std::vector<double> times(steps), atoms(steps);
  std::vector<ExtReal> values(steps);
  for (int k = 0; k < steps; ++k) times[k] = lattice.time(k + 1);
  for (std::uint64_t p = 0; p < (std::uint64_t{1} << steps); ++p) {
    for (int k = 0; k < steps; ++k) {
      const Node node = node_on_path(p, k);
      values[k] = g.for_step(node);
      atoms[k] = rho.atom(node);
    }
    const auto env = envelope_brute_force(times, values, atoms, n);
    for (int k = 0; k < steps; ++k)
      if (env[k] > ExtReal(y[node_on_path(p, k)])) return false;
  }
  return true;
}

}  // namespace rbsde::oracle
