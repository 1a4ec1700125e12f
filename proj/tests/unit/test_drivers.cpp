#include <cmath>
#include <random>

#include "doctest.h"
#include "rbsde/drivers.hpp"

using namespace rbsde;

namespace {

BarrierSet band(int steps, double lo, double hi) {
  return BarrierSet(ExtAdapted(steps, ExtReal(lo)), ExtAdapted(steps, ExtReal(hi)),
                    ExtPredictable(steps, ExtReal::neg_inf()), IncreasingProcess(steps),
                    ExtPredictable(steps, ExtReal::pos_inf()), IncreasingProcess(steps),
                    std::vector<double>(steps + 1, 0.5 * (lo + hi)));
}

GrowthBounds constant_bounds(int steps, double eta, double c, double beta) {
  return GrowthBounds{AdaptedProcess(steps, eta), AdaptedProcess(steps, c), AdaptedProcess(steps, beta),
                      IncreasingProcess(steps), {}};
}

// Maximum along the path of x, recomputed from scratch.
double path_max(const AdaptedProcess& x, const Path& p, int level) {
  double m = -1e300;
  for (int k = 0; k <= level; ++k) m = std::max(m, x[p.node_at(k)]);
  return m;
}

}  // namespace

TEST_CASE("catalog drivers") {
  const Node n{1, 0};
  CHECK(drivers::zero().f(n, 3.0, 4.0) == 0.0);
  const Driver lin = drivers::linear(2.0, -1.0, 0.5);
  CHECK(lin.f(n, 1.0, 3.0) == doctest::Approx(-0.5));
  CHECK(lin.drift_increment(n, 1.0, 3.0, 0.1) == doctest::Approx(-0.05));
  const Driver q = drivers::quadratic(0.5);
  CHECK(q.f(n, 0.0, 2.0) == doctest::Approx(2.0));
  const double dt = 0.01, z = 1.3;
  CHECK(q.drift_increment(n, 0.0, z, dt) == doctest::Approx(std::log(std::cosh(z * std::sqrt(dt)))));
  CHECK(drivers::quadratic_euler(0.5).drift_increment(n, 0.0, z, dt) == doctest::Approx(0.5 * z * z * dt));
  CHECK(drivers::quadratic(0.0).drift_increment(n, 0.0, z, dt) == 0.0);
  CHECK(lin.shifted(1.0).f(n, 1.0, 3.0) == doctest::Approx(0.5));

  AdaptedProcess h(2, 0.0);
  h[{1, 0}] = 7.0;
  CHECK(drivers::tabulated(h).f(n, 100.0, 100.0) == 7.0);

  const IncreasingProcess a = IncreasingProcess::uniform(2, 0.25);
  const Driver g = drivers::with_measure(drivers::zero(), a, drivers::g_linear(1.0, 2.0, 3.0));
  REQUIRE(g.term("g") != nullptr);
  CHECK(g.measure_increment(n, 1.0, 1.0) == doctest::Approx(0.25 * 6.0));
  CHECK(g.step_increment(n, 1.0, 0.0, 0.5) == doctest::Approx(1.5));
}

TEST_CASE("exponential quadratic increment is an exact martingale transform") {
  for (double c : {-1.0, 0.3, 2.0})
    for (double z : {-3.0, 0.1, 5.0}) {
      const double dt = 0.05, e = 0.2;
      const double y = e + drivers::quadratic(c).drift_increment({0, 0}, 0.0, z, dt);
      const double up = e + z * std::sqrt(dt), down = e - z * std::sqrt(dt);
      CHECK(std::exp(2 * c * y) == doctest::Approx((std::exp(2 * c * up) + std::exp(2 * c * down)) / 2).epsilon(1e-12));
    }
}

TEST_CASE("running cone max") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 8;
  AdaptedProcess x(n, 0.0);
  for (int i = 0; i <= n; ++i)
    for (double& v : x.level(i)) v = u(rng);
  const AdaptedProcess m = running_cone_max(x);
  for (std::uint64_t bits = 0; bits < 256; ++bits) {
    const Path p(bits, n);
    for (int k = 0; k <= n; ++k) {
      CHECK(m[p.node_at(k)] >= path_max(x, p, k));
      if (k > 0) CHECK(m[p.node_at(k)] >= m[p.node_at(k - 1)]);
    }
  }
}

TEST_CASE("growth domination") {
  const int n = 3;
  const AdaptedProcess one(n, 1.0), zero(n, 0.0);
  SUBCASE("affine phi") {
    const GrowthBounds b = dominate_growth([](double x) { return 1.0 + x; }, one, zero, zero,
                                           ExtAdapted(n, ExtReal(-1.0)), ExtAdapted(n, ExtReal(1.0)));
    for (int i = 0; i <= n; ++i)
      for (double v : b.eta.level(i)) CHECK(v == doctest::Approx(5.0));
  }
  SUBCASE("unit phi is the identity") {
    const AdaptedProcess c(n, 0.3), beta(n, 0.7);
    const GrowthBounds b = dominate_growth([](double) { return 1.0; }, one, c, beta, ExtAdapted(n, ExtReal(-2.0)),
                                           ExtAdapted(n, ExtReal(3.0)));
    CHECK(b.eta == one);
    CHECK(b.c == c);
    CHECK(b.beta == beta);
  }
  SUBCASE("D nondecreasing along paths and output above the raw bounds") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    ExtAdapted lo(6, ExtReal(0.0)), hi(6, ExtReal(0.0));
    for (int i = 0; i <= 6; ++i)
      for (int j = 0; j <= i; ++j) {
        lo[{i, j}] = -u(rng);
        hi[{i, j}] = u(rng);
      }
    const AdaptedProcess ones(6, 1.0);
    const GrowthBounds b = dominate_growth([](double x) { return 1.0 + x; }, ones, ones, ones, lo, hi);
    for (std::uint64_t bits = 0; bits < 64; ++bits) {
      const Path p(bits, 6);
      for (int k = 1; k <= 6; ++k) {
        CHECK(b.eta[p.node_at(k)] >= b.eta[p.node_at(k - 1)]);
        CHECK(b.c[p.node_at(k)] >= 1.0);
      }
    }
  }
  SUBCASE("decreasing phi and infinite barriers are rejected") {
    CHECK_THROWS_AS(dominate_growth([](double x) { return 1.0 - x; }, one, one, one, ExtAdapted(n, ExtReal(-1.0)),
                                    ExtAdapted(n, ExtReal(1.0))),
                    NonMonotonePhi);
    CHECK_THROWS_AS(dominate_growth([](double) { return 1.0; }, one, one, one, ExtAdapted(n, ExtReal::neg_inf()),
                                    ExtAdapted(n, ExtReal(1.0))),
                    std::invalid_argument);
  }
}

TEST_CASE("witness decompositions") {
  const Lattice lat(1.0, 4);
  SUBCASE("Brownian motion is a martingale with unit gamma") {
    const auto b = lat.adapted<double>([](Node, double, double w) { return w; });
    const auto spec = SemimartingaleSpec::from_values(lat, b);
    CHECK(spec.is_martingale(1e-15));
    CHECK(spec.gamma().for_step({2, 1}) == doctest::Approx(1.0));
  }
  SUBCASE("components rebuild the values") {
    const auto s = lat.adapted<double>([](Node, double t, double w) { return w * w - t + 0.3 * t; });
    const auto spec = SemimartingaleSpec::from_values(lat, s);
    const auto rebuilt = SemimartingaleSpec::from_components(lat, spec.s0(), spec.v_plus(), spec.v_minus(),
                                                             spec.gamma());
    for (int i = 0; i <= 4; ++i)
      for (int j = 0; j <= i; ++j) CHECK(rebuilt.values()[{i, j}] == doctest::Approx(s[{i, j}]).epsilon(1e-12));
    CHECK_FALSE(spec.is_martingale(1e-9));
  }
  SUBCASE("non-recombining components are rejected") {
    PredictableProcess gamma(4, 1.0);
    gamma.for_step({1, 1}) = 2.0;
    CHECK_THROWS_AS(SemimartingaleSpec::from_components(lat, 0.0, IncreasingProcess(4), IncreasingProcess(4), gamma),
                    NonRecombiningWitness);
  }
  SUBCASE("terminal replacement") {
    const auto spec = SemimartingaleSpec::from_values(lat, AdaptedProcess(4, 0.0));
    const std::vector<double> xi{1.0, 0.0, 0.0, 0.0, -1.0};
    const auto w = spec.with_terminal(lat, xi);
    CHECK(w.values()[{4, 0}] == 1.0);
    CHECK(w.v_minus().atom({3, 0}) == doctest::Approx(0.5));
    CHECK(w.gamma().for_step({3, 3}) == doctest::Approx(-0.5 / lat.sqrt_dt()));
  }
}

TEST_CASE("dominated driver") {
  const Lattice lat(1.0, 4);
  SUBCASE("C = 0, gamma = 0, eta = 1") {
    const auto spec = SemimartingaleSpec::from_values(lat, AdaptedProcess(4, 0.0));
    const Driver d = build_dominated_driver(constant_bounds(4, 1.0, 0.0, 0.0), spec, Orientation::upper);
    for (double z : {0.0, 1.0, -2.5}) CHECK(d.f({1, 1}, 0.0, z) == doctest::Approx(1.0 + z * z / 2.0));
    const AdaptedProcess m = penalty_weight_m(AdaptedProcess(4, 0.0));
    CHECK(m[{3, 2}] == 1.0);
    const Driver lower = build_dominated_driver(constant_bounds(4, 1.0, 0.0, 0.0), spec, Orientation::lower);
    CHECK(lower.f({1, 1}, 0.0, 2.0) == doctest::Approx(-3.0));
  }
  SUBCASE("quadratic term vanishes at z = gamma") {
    const auto b = lat.adapted<double>([](Node, double, double w) { return 0.5 * w; });
    const auto spec = SemimartingaleSpec::from_values(lat, b);
    const Driver d = build_dominated_driver(constant_bounds(4, 0.2, 0.1, 0.0), spec, Orientation::upper);
    CHECK(d.f({2, 0}, 0.0, 0.5) == doctest::Approx(0.2 + 4 * 0.1 * 0.25));
    CHECK(d.drift_increment({2, 0}, 0.0, 0.5, lat.dt()) == doctest::Approx((0.2 + 0.1) * lat.dt()));
  }
  SUBCASE("m is at least 1 and nondecreasing along paths") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    AdaptedProcess c(7, 0.0);
    for (int i = 0; i <= 7; ++i)
      for (double& v : c.level(i)) v = u(rng);
    const AdaptedProcess m = penalty_weight_m(c);
    for (std::uint64_t bits = 0; bits < 128; ++bits) {
      const Path p(bits, 7);
      for (int k = 0; k <= 7; ++k) {
        CHECK(m[p.node_at(k)] >= 1.0);
        CHECK(m[p.node_at(k)] >= 8.0 * std::fabs(c[p.node_at(k)]));
        if (k > 0) CHECK(m[p.node_at(k)] >= m[p.node_at(k - 1)]);
      }
    }
  }
  SUBCASE("the step increment dominates eta dt + C z^2 dt in the working range") {
    const auto spec = SemimartingaleSpec::from_values(lat, AdaptedProcess(4, 0.0));
    const double c = 0.25;
    const Driver d = build_dominated_driver(constant_bounds(4, 0.1, c, 0.0), spec, Orientation::upper);
    const double m = 1.0 + 8.0 * c;
    for (double z = -2.5 / (m * lat.sqrt_dt()); z <= 2.5 / (m * lat.sqrt_dt()); z += 0.05)
      CHECK(d.drift_increment({1, 0}, 0.0, z, lat.dt()) >= (0.1 + c * z * z) * lat.dt() - 1e-15);
  }
}

TEST_CASE("assumption audit") {
  const Lattice lat(1.0, 4);
  const BarrierSet b = band(4, -1e4, 1e4);
  SUBCASE("z^2 meets its own bound") {
    const Driver d = drivers::quadratic(1.0).with_bounds(constant_bounds(4, 0.0, 1.0, 0.0));
    const AuditReport r = audit_assumptions(lat, d, b, nullptr);
    CHECK(r.bounds_checked);
    CHECK(r.passed());
  }
  SUBCASE("z^3 breaks quadratic growth") {
    const Driver d = Driver([](Node, double, double z) { return z * z * z; })
                         .with_bounds(constant_bounds(4, 1.0, 1.0, 0.0));
    const AuditReport r = audit_assumptions(lat, d, b, nullptr);
    CHECK(r.count("A1a") > 0);
    for (const auto& v : r.violations) CHECK(std::fabs(v.z) > 1.0);
  }
  SUBCASE("g = -2y with unit atoms breaks monotonicity") {
    const Driver d =
        drivers::with_measure(drivers::zero(), IncreasingProcess::uniform(4, 1.0), drivers::g_linear(0.0, -2.0, 0.0));
    const AuditReport r = audit_assumptions(lat, d, b, nullptr);
    CHECK(r.count("A2c") > 0);
  }
  SUBCASE("witness outside Dom") {
    const auto spec = SemimartingaleSpec::from_values(lat, AdaptedProcess(4, 2e4));
    const AuditReport r = audit_assumptions(lat, drivers::zero(), b, &spec);
    CHECK(r.count("A3") == 1);
  }
  CHECK(audit_probe_values().size() == 27);
}
