#include <cmath>
#include <future>
#include <numeric>
#include <random>

#include "doctest.h"
#include "rbsde/solver.hpp"
#include "rbsde/verify.hpp"

using namespace rbsde;

namespace {

std::vector<double> random_xi(int n, verify::Rng& rng) { return verify::random_terminal(n, rng, -1.0, 1.0); }

double binomial_mean(const std::vector<double>& xi) {
  const int n = static_cast<int>(xi.size()) - 1;
  double m = 0.0;
  for (int j = 0; j <= n; ++j) m += std::exp(log_node_probability({n, j})) * xi[j];
  return m;
}

BarrierSet two_sided(int n, verify::Rng& rng, std::vector<double> xi) {
  ExtAdapted lo(n, ExtReal(0.0)), hi(n, ExtReal(0.0));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= i; ++j) {
      lo[{i, j}] = rng.uniform(-1.0, -0.1);
      hi[{i, j}] = rng.uniform(0.1, 1.0);
    }
  return BarrierSet(lo, hi, ExtPredictable(n, ExtReal::neg_inf()), IncreasingProcess(n),
                    ExtPredictable(n, ExtReal::pos_inf()), IncreasingProcess(n), std::move(xi));
}

}  // namespace

TEST_CASE("implicit step closed forms") {
  const Node n{0, 0};
  CHECK(implicit_step(drivers::zero(), n, 0.7, 3.0, 0.1) == 0.7);
  const double a = 0.8, dt = 0.01, e = 1.3;
  CHECK(implicit_step(drivers::linear(a, 0.0, 0.0), n, e, 2.0, dt) == doctest::Approx(e / (1.0 - a * dt)).epsilon(1e-15));
  CHECK(implicit_step(drivers::quadratic_euler(0.5), n, e, 2.0, dt) == doctest::Approx(e + 0.5 * 4.0 * dt).epsilon(1e-15));
  // A strongly nonlinear but monotone step still resolves to full precision.
  const double y = implicit_step(e, [](double v) { return -0.5 * std::tanh(v) - 3.0; }, n);
  CHECK(std::fabs(y - e - (-0.5 * std::tanh(y) - 3.0)) <= 1e-14);
}

TEST_CASE("implicit step failures") {
  CHECK_THROWS_AS(implicit_step(0.0, [](double y) { return y + 1.0; }), ImplicitStepDivergence);
  CHECK_THROWS_AS(implicit_step(0.0, [](double) { return std::nan(""); }), NonFiniteDriver);
  const Lattice lat(1.0, 3);
  const Driver bad([](Node n, double, double) { return n.level == 1 ? std::numeric_limits<double>::infinity() : 0.0; });
  try {
    solve_rbsde(lat, bad, BarrierSet::unconstrained(3, {0, 1, 2, 3}));
    FAIL("expected NonFiniteDriver");
  } catch (const NonFiniteDriver& e) {
    REQUIRE(e.node().has_value());
    CHECK(e.node()->level == 1);
  }
}

TEST_CASE("reflected step projections") {
  auto zero = [](double) { return 0.0; };
  const StepOutcome below = reflected_step(-2.0, zero, ExtReal(-1.0), ExtReal(1.0), {0, 0});
  CHECK(below.y == -1.0);
  CHECK(below.dk_plus == 1.0);
  CHECK(below.dk_minus == 0.0);
  const StepOutcome above = reflected_step(3.0, zero, ExtReal(-1.0), ExtReal(1.0), {0, 0});
  CHECK(above.y == 1.0);
  CHECK(above.dk_minus == 2.0);
  const StepOutcome inside = reflected_step(0.25, zero, ExtReal::neg_inf(), ExtReal::pos_inf(), {0, 0});
  CHECK(inside.y == 0.25);
}

TEST_CASE("pure martingale") {
  verify::Rng rng(1);
  const int n = 9;
  const auto xi = random_xi(n, rng);
  const Solution s = solve_rbsde(Lattice(1.0, n), drivers::zero(), BarrierSet::unconstrained(n, xi));
  CHECK(s.y0() == doctest::Approx(binomial_mean(xi)).epsilon(1e-14));
  CHECK(s.k_plus.is_zero());
  CHECK(s.k_minus.is_zero());
}

TEST_CASE("quadratic driver matches the exponential transform") {
  verify::Rng rng(2);
  for (double c : {0.1, 0.5, 2.0}) {
    const int n = 8;
    const auto xi = random_xi(n, rng);
    const Solution s = solve_rbsde(Lattice(1.0, n), drivers::quadratic(c), BarrierSet::unconstrained(n, xi));
    double e = 0.0;
    for (int j = 0; j <= n; ++j) e += std::exp(log_node_probability({n, j}) + 2 * c * xi[j]);
    CHECK(s.y0() == doctest::Approx(std::log(e) / (2 * c)).epsilon(1e-12));
  }
}

TEST_CASE("Skorokhod certificates, singularity and budget") {
  verify::Rng rng(3);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 3 + rep % 8;
    const auto kind = static_cast<verify::DriverKind>(rep % 3);
    const auto inst = verify::random_two_sided(rng, n, kind);
    const Solution s = solve_rbsde(inst.lattice, inst.driver, inst.barriers);
    CHECK(s.residuals.flat_off_plus <= 1e-12);
    CHECK(s.residuals.flat_off_minus <= 1e-12);
    CHECK(s.residuals.singularity_defect == 0.0);
    CHECK(s.residuals.barrier_violation <= 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        const Node node{i, j};
        if (s.k_plus.atom(node) > 0.0) CHECK(ExtReal(s.y[node]) == s.lower[node]);
        if (s.k_minus.atom(node) > 0.0) CHECK(ExtReal(s.y[node]) == s.upper[node]);
      }
    CHECK(budget_defect(inst.lattice, inst.driver, s) <= 1e-12);
  }
}

TEST_CASE("slack predictable lower constraint leaves K+ flat") {
  // l above L at a delta atom but below the continuation value: no push.
  const int n = 4;
  const Lattice lat(1.0, n);
  const std::vector<double> xi{2.0, 2.0, 2.0, 2.0, 2.0};
  ExtPredictable l(n, ExtReal::neg_inf());
  for (int j = 0; j <= 2; ++j) l.for_step({2, j}) = 1.0;
  const std::pair<int, double> atom[] = {{3, 1.0}};
  const BarrierSet b(ExtAdapted(n, ExtReal(0.0)), ExtAdapted(n, ExtReal::pos_inf()), l,
                     IncreasingProcess::from_atoms(n, atom), ExtPredictable(n, ExtReal::pos_inf()),
                     IncreasingProcess(n), xi);
  const Solution s = solve_rbsde(lat, drivers::zero(), b);
  for (int j = 0; j <= 2; ++j) CHECK(s.k_plus.atom({2, j}) == 0.0);

  // When the constraint binds, the only way to meet it is a K+ atom at that time.
  ExtPredictable high(n, ExtReal::neg_inf());
  for (int j = 0; j <= 2; ++j) high.for_step({2, j}) = 10.0;
  const BarrierSet bind(ExtAdapted(n, ExtReal(0.0)), ExtAdapted(n, ExtReal::pos_inf()), high,
                        IncreasingProcess::from_atoms(n, atom), ExtPredictable(n, ExtReal::pos_inf()),
                        IncreasingProcess(n), xi);
  const Solution t = solve_rbsde(lat, drivers::zero(), bind);
  for (int j = 0; j <= 2; ++j) {
    CHECK(t.y[{2, j}] == 10.0);
    CHECK(t.k_plus.atom({2, j}) == doctest::Approx(8.0));
  }
}

TEST_CASE("raising xi never lowers Y0") {
  verify::Rng rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 6;
    auto xi = random_xi(n, rng);
    const BarrierSet b = two_sided(n, rng, xi);
    auto raised = xi;
    for (double& v : raised) v = std::min(v + rng.uniform(0.0, 0.5), 1.0);
    const BarrierSet br(b.lower(), b.upper(), b.lower_predictable(), b.delta(), b.upper_predictable(), b.alpha(),
                        raised);
    const Driver d = drivers::quadratic(0.3);
    CHECK(solve_rbsde(Lattice(1.0, n), d, br).y0() >= solve_rbsde(Lattice(1.0, n), d, b).y0() - 1e-15);
  }
}

TEST_CASE("comparison") {
  verify::Rng rng(5);
  SUBCASE("identical inputs") {
    const auto inst = verify::random_two_sided(rng, 6, verify::DriverKind::linear);
    const Solution s = solve_rbsde(inst.lattice, inst.driver, inst.barriers);
    const ComparisonReport r = comparison_check(inst.lattice, s, inst.driver, s);
    CHECK(r.passed());
    CHECK(r.max_y_excess == 0.0);
  }
  SUBCASE("f against f + 1 with shared barriers touching the upper side") {
    std::size_t touching = 0;
    for (int rep = 0; rep < 30; ++rep) {
      const int n = 7;
      const auto xi = random_xi(n, rng);
      const BarrierSet b = two_sided(n, rng, xi);
      const Driver small = drivers::linear(0.2, 0.5, 0.0);
      const Driver big = small.shifted(1.0);
      const Solution sb = solve_rbsde(Lattice(1.0, n), big, b);
      const Solution ss = solve_rbsde(Lattice(1.0, n), small, b);
      const ComparisonReport r = comparison_check(Lattice(1.0, n), sb, big, ss);
      CHECK(r.passed());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) touching += sb.k_minus.atom({i, j}) > 0.0 ? 1 : 0;
    }
    CHECK(touching > 0);
  }
  SUBCASE("a reversed pair is caught") {
    const int n = 4;
    const auto xi = random_xi(n, rng);
    const Solution lo = solve_rbsde(Lattice(1.0, n), drivers::zero(), BarrierSet::unconstrained(n, xi));
    const Solution hi = solve_rbsde(Lattice(1.0, n), drivers::linear(0.0, 0.0, 1.0), BarrierSet::unconstrained(n, xi));
    CHECK_FALSE(comparison_check(Lattice(1.0, n), lo, drivers::zero(), hi).passed());
  }
}

TEST_CASE("concurrent solves match sequential ones") {
  verify::Rng rng(6);
  std::vector<verify::TwoSidedInstance> insts;
  for (int k = 0; k < 8; ++k) insts.push_back(verify::random_two_sided(rng, 9, verify::DriverKind::quadratic));
  std::vector<std::future<Solution>> futures;
  for (const auto& inst : insts)
    futures.push_back(std::async(std::launch::async, [&inst] { return solve_rbsde(inst.lattice, inst.driver, inst.barriers); }));
  for (std::size_t k = 0; k < insts.size(); ++k) {
    const Solution seq = solve_rbsde(insts[k].lattice, insts[k].driver, insts[k].barriers);
    const Solution par = futures[k].get();
    CHECK(seq.y == par.y);
    CHECK(seq.k_plus.atoms() == par.k_plus.atoms());
  }
}

TEST_CASE("solve statistics record every solve") {
  reset_solve_statistics();
  const std::vector<double> xi{1.0, 2.0};
  solve_rbsde(Lattice(1.0, 1), drivers::zero(), BarrierSet::unconstrained(1, xi));
  solve_rbsde(Lattice(1.0, 1), drivers::zero(), BarrierSet::unconstrained(1, xi), xi);
  CHECK(solve_statistics().solves == 2);
  const std::vector<double> other{0.0, 0.0};
  CHECK_THROWS_AS(solve_rbsde(Lattice(1.0, 1), drivers::zero(), BarrierSet::unconstrained(1, xi), other),
                  std::invalid_argument);
}
