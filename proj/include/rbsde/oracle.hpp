#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rbsde/errors.hpp"
#include "rbsde/ext_real.hpp"
#include "rbsde/lattice.hpp"

// Brute-force references. Nothing here depends on the solver, penalize or
// snell code; only the lattice containers are shared.
namespace rbsde::oracle {

class NoValue : public Error {
 public:
  NoValue(double maxmin, double minmax);
  double maxmin() const { return maxmin_; }
  double minmax() const { return minmax_; }

 private:
  double maxmin_;
  double minmax_;
};

/// Number of stopping rules on the full binary tree of the given depth: a(0) = 1, a(d) = 1 + a(d-1)^2.
std::uint64_t stopping_rule_count(int depth);

/// Every stopping rule on the non-recombining tree, as the stopping level on each of the
/// 2^N paths (bit k of the path index = up-move at step k). Stopping at a node where
/// allowed(level, path) is false is excluded; level N is always allowed.
std::vector<std::vector<std::uint8_t>> enumerate_stopping_rules(
    int depth, const std::function<bool(int level, std::uint64_t path)>& allowed = {});

/// max over stopping rules of E[L_tau 1{tau < N} + xi 1{tau = N}]. DepthTooLarge beyond max_depth.
double exhaustive_stopping_value(const ExtAdapted& lower, std::span<const double> terminal, int max_depth = 5);

struct DynkinResult {
  double maxmin = 0.0;
  double minmax = 0.0;
  std::size_t stopper_rules = 0;
  std::size_t controller_rules = 0;
  bool has_value() const;
  double value() const;  // throws NoValue
};

/// Stopper (max) picks tau, controller (min) picks sigma; payoff L_tau if tau <= sigma, tau < N;
/// U_sigma if sigma < tau; xi if tau = sigma = N. Pure strategies, both orders evaluated.
DynkinResult exhaustive_dynkin(const ExtAdapted& lower, const ExtAdapted& upper, std::span<const double> terminal,
                               int max_depth = 4);
double exhaustive_dynkin_value(const ExtAdapted& lower, const ExtAdapted& upper, std::span<const double> terminal,
                               int max_depth = 4);

/// (1/(2c)) log E[exp(2c xi)] with binomial weights at level N, via log-sum-exp.
double quadratic_closed_form(double c, std::span<const double> terminal);

/// E[xi] by enumeration of all 2^N paths.
double path_expectation(std::span<const double> terminal);

/// American put on the CRR tree u = exp(sigma sqrt(dt)), d = 1/u, with the rate
/// r = log cosh(sigma sqrt(dt)) / dt that makes the up-probability 1/2.
double crr_american_put(double strike, double spot, double sigma, double horizon, int steps);
double crr_rate(double sigma, double horizon, int steps);

/// max{ g(s_i) - n (t_k - s_i) : s_i <= t_k, atom at s_i } for every k, -inf if empty. O(K^2).
std::vector<ExtReal> envelope_brute_force(std::span<const double> times, std::span<const ExtReal> values,
                                          std::span<const double> atoms, double n);

/// g <= Y_{t-} checked on every path, atom by atom, with Y_{t_{i+1}-} = Y at level i.
bool left_constraint_brute_force(const AdaptedProcess& y, const ExtPredictable& g, const IncreasingProcess& rho);

/// The same via the large-n envelope along every path, compared with Y_{t-} wherever the envelope is finite.
bool left_constraint_large_n(const Lattice& lattice, const AdaptedProcess& y, const ExtPredictable& g,
                             const IncreasingProcess& rho, double n = 1e9);

}  // namespace rbsde::oracle
