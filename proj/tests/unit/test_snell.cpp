#include <cmath>

#include "doctest.h"
#include "rbsde/oracle.hpp"
#include "rbsde/snell.hpp"
#include "rbsde/verify.hpp"

using namespace rbsde;

namespace {

ExtAdapted random_lower(int n, verify::Rng& rng) {
  ExtAdapted l(n, ExtReal(0.0));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= i; ++j) l[{i, j}] = rng.uniform(-1.0, 1.0);
  return l;
}

SnellInstance plain(ExtAdapted lower, std::vector<double> xi) {
  const int n = lower.steps();
  return {std::move(lower), ExtPredictable(n, ExtReal::neg_inf()), IncreasingProcess(n), std::move(xi), std::nullopt};
}

// Plain optimal stopping by backward induction, written out again.
AdaptedProcess stopping_dp(const ExtAdapted& lower, const std::vector<double>& xi) {
  const int n = lower.steps();
  AdaptedProcess v(n, 0.0);
  for (int j = 0; j <= n; ++j) v[{n, j}] = xi[j];
  for (int i = n - 1; i >= 0; --i)
    for (int j = 0; j <= i; ++j) {
      const double cont = 0.5 * (v[{i + 1, j + 1}] + v[{i + 1, j}]);
      const ExtReal l = lower[{i, j}];
      v[{i, j}] = l.finite() ? std::max(cont, l.value()) : cont;
    }
  return v;
}

}  // namespace

TEST_CASE("constant barrier is its own envelope") {
  const int n = 5;
  const Solution s = snell_envelope(Lattice(1.0, n), plain(ExtAdapted(n, ExtReal(2.0)), std::vector<double>(n + 1, 2.0)));
  for (int i = 0; i <= n; ++i)
    for (double v : s.y.level(i)) CHECK(v == 2.0);
  CHECK(s.k_plus.is_zero());
}

TEST_CASE("American put against an independent tree") {
  for (int n = 3; n <= 12; n += 3) {
    const Lattice lat(1.0, n);
    const double strike = 1.0, spot = 1.0, sigma = 0.3;
    const double r = oracle::crr_rate(sigma, 1.0, n);
    auto payoff = [&](Node, double t, double b) {
      return ExtReal(std::exp(-r * t) * std::max(strike - spot * std::exp(sigma * b), 0.0));
    };
    const ExtAdapted lower = lat.adapted<ExtReal>(payoff);
    std::vector<double> xi(n + 1);
    for (int j = 0; j <= n; ++j) xi[j] = lower[{n, j}].value();
    const Solution s = snell_envelope(lat, plain(lower, xi));
    CHECK(s.y0() == doctest::Approx(oracle::crr_american_put(strike, spot, sigma, 1.0, n)).epsilon(1e-10));
  }
}

TEST_CASE("envelope equals the best stopping rule and the plain recursion") {
  verify::Rng rng(1);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 1 + rep % 4;
    const Lattice lat(1.0, n);
    const ExtAdapted lower = random_lower(n, rng);
    const auto xi = verify::random_terminal(n, rng, -1.0, 1.0);
    const Solution s = snell_envelope(lat, plain(lower, xi));
    CHECK(std::fabs(s.y0() - oracle::exhaustive_stopping_value(lower, xi)) <= 1e-12);
    CHECK(s.y == stopping_dp(lower, xi));
    CHECK(supermartingale_defect(s.y) <= 4 * 2.3e-16);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        CHECK(ExtReal(s.y[{i, j}]) >= lower[{i, j}]);
        if (s.k_plus.atom({i, j}) > 0.0) CHECK(ExtReal(s.y[{i, j}]) == lower[{i, j}]);
      }
    const Solution direct = solve_rbsde(lat, drivers::zero(), plain(lower, xi).barriers());
    CHECK(direct.y == s.y);
  }
}

TEST_CASE("Lebesgue constraint") {
  verify::Rng rng(2);
  const int n = 6;
  const Lattice lat(1.0, n);
  const auto xi = verify::random_terminal(n, rng, 0.0, 1.0);
  const ExtAdapted no_lower(n, ExtReal::neg_inf());
  SUBCASE("vacuous") {
    const Solution s = snell_lebesgue(lat, no_lower, ExtPredictable(n, ExtReal::neg_inf()), xi);
    const Solution m = solve_rbsde(lat, drivers::zero(), BarrierSet::unconstrained(n, xi));
    CHECK(s.y == m.y);
  }
  SUBCASE("constant floor") {
    const double c = 0.4;
    const Solution s = snell_lebesgue(lat, no_lower, ExtPredictable(n, ExtReal(c)), xi);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) CHECK(s.y[{i, j}] == std::max(conditional_expectation(s.y, {i, j}), c));
  }
  SUBCASE("more atoms give a larger envelope") {
    ExtPredictable l(n, ExtReal(0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) l.for_step({i, j}) = rng.uniform(0.0, 1.5);
    const Solution full = snell_lebesgue(lat, no_lower, l, xi);
    std::vector<std::pair<int, double>> sub;
    for (int k = 2; k <= n; k += 2) sub.push_back({k, lat.dt()});
    const SnellInstance partial{no_lower, l, IncreasingProcess::from_atoms(n, sub), xi, std::nullopt};
    const Solution part = snell_envelope(lat, partial);
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= i; ++j) CHECK(full.y[{i, j}] >= part.y[{i, j}]);
  }
}

TEST_CASE("stopping time atom") {
  verify::Rng rng(3);
  const int n = 6, k = 4;
  const Lattice lat(1.0, n);
  const ExtAdapted lower = random_lower(n, rng);
  const auto xi = verify::random_terminal(n, rng, -1.0, 1.0);
  const Solution base = snell_envelope(lat, plain(lower, xi));
  SUBCASE("inactive") {
    std::vector<double> low(k);
    for (int j = 0; j < k; ++j) low[j] = base.y[{k - 1, j}] - 0.1;
    CHECK(snell_stopping_time_atom(lat, k, low, lower, xi).y == base.y);
  }
  SUBCASE("martingale target binds where the plain envelope is below it") {
    // A martingale M above L and xi.
    AdaptedProcess m(n, 0.0);
    for (int j = 0; j <= n; ++j) m[{n, j}] = 1.0 + rng.uniform(0.0, 1.0);
    for (int i = n - 1; i >= 0; --i)
      for (int j = 0; j <= i; ++j) m[{i, j}] = conditional_expectation(m, {i, j});
    std::vector<double> xi_m(n + 1);
    for (int j = 0; j <= n; ++j) xi_m[j] = std::min(xi[j], m[{n, j}]);
    const auto witness = SemimartingaleSpec::from_values(lat, m);
    const Solution plain_m = snell_envelope(lat, plain(lower, xi_m));
    std::vector<double> target(k);
    for (int j = 0; j < k; ++j) target[j] = m[{k - 1, j}];
    const Solution s = snell_stopping_time_atom(lat, k, target, lower, xi_m, witness);
    for (int j = 0; j < k; ++j) {
      const Node node{k - 1, j};
      if (plain_m.y[node] < target[j]) CHECK(s.y[node] == target[j]);
      else CHECK(s.y[node] == plain_m.y[node]);
    }
    for (int i = k; i <= n; ++i)
      for (int j = 0; j <= i; ++j) CHECK(s.y[{i, j}] == plain_m.y[{i, j}]);
  }
  SUBCASE("smallest dominating supermartingale") {
    std::vector<double> target(k);
    for (int j = 0; j < k; ++j) target[j] = rng.uniform(-1.0, 1.5);
    const Solution s = snell_stopping_time_atom(lat, k, target, lower, xi);
    for (int rep = 0; rep < 20; ++rep) {
      // Y' = Y + W with W a random nonnegative supermartingale.
      AdaptedProcess w(n, 0.0);
      for (int j = 0; j <= n; ++j) w[{n, j}] = rng.uniform(0.0, 0.5);
      for (int i = n - 1; i >= 0; --i)
        for (int j = 0; j <= i; ++j) w[{i, j}] = conditional_expectation(w, {i, j}) + rng.uniform(0.0, 0.2);
      AdaptedProcess other = s.y;
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= i; ++j) other[{i, j}] += w[{i, j}];
      CHECK(supermartingale_defect(other) <= 1e-15);
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= i; ++j) CHECK(s.y[{i, j}] <= other[{i, j}]);
    }
    // Any lowering at one node breaks domination or the supermartingale inequality.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        const double e = conditional_expectation(s.y, {i, j});
        const ExtReal floor = max(lower[{i, j}], i == k - 1 ? ExtReal(target[j]) : ExtReal::neg_inf());
        CHECK(ExtReal(s.y[{i, j}]) == max(ExtReal(e), floor));
      }
  }
  CHECK_THROWS_AS(snell_stopping_time_atom(lat, 0, {}, lower, xi), std::invalid_argument);
}

TEST_CASE("hypothesis A audit") {
  const int n = 3;
  const Lattice lat(1.0, n);
  const std::vector<double> xi(n + 1, 0.0);
  SnellInstance inst = plain(ExtAdapted(n, ExtReal(0.5)), xi);
  inst.witness = SemimartingaleSpec::from_values(lat, AdaptedProcess(n, 0.0));
  CHECK(hypothesis_a_failure(inst).has_value());
  CHECK_THROWS_AS(snell_envelope(lat, inst), HypothesisAViolated);
  inst.witness = SemimartingaleSpec::from_values(lat, AdaptedProcess(n, 1.0));
  CHECK_FALSE(hypothesis_a_failure(inst).has_value());
  CHECK_NOTHROW(snell_envelope(lat, inst));
  AdaptedProcess drifting(n, 1.0);
  drifting[{0, 0}] = 2.0;
  inst.witness = SemimartingaleSpec::from_values(lat, drifting);
  CHECK(hypothesis_a_failure(inst).has_value());
}
