#include <algorithm>
#include <cmath>

#include "rbsde/verify.hpp"

namespace rbsde::verify {

AdaptedProcess random_adapted(int steps, Rng& rng, double lo, double hi) {
  AdaptedProcess x(steps, 0.0);
  for (int i = 0; i <= steps; ++i)
    for (double& v : x.level(i)) v = rng.uniform(lo, hi);
  return x;
}

std::vector<double> random_terminal(int steps, Rng& rng, double lo, double hi) {
  std::vector<double> xi(steps + 1);
  for (double& v : xi) v = rng.uniform(lo, hi);
  return xi;
}

TwoSidedInstance random_two_sided(Rng& rng, int depth, DriverKind kind, bool with_measure) {
  const Lattice lattice(1.0, depth);
  const int n = depth;
  std::vector<double> xi = random_terminal(n, rng, -1.0, 1.0);
  AdaptedProcess s = random_adapted(n, rng, -1.0, 1.0);
  for (int j = 0; j <= n; ++j) s[{n, j}] = xi[j];
  SemimartingaleSpec spec = SemimartingaleSpec::from_values(lattice, s);

  ExtAdapted lower(n, ExtReal(0.0)), upper(n, ExtReal(0.0));
  double radius = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= i; ++j) {
      const Node node{i, j};
      const double lo = s[node] - rng.uniform(0.05, 0.8), hi = s[node] + rng.uniform(0.05, 0.8);
      lower[node] = lo;
      upper[node] = hi;
      radius = std::max({radius, std::fabs(lo), std::fabs(hi)});
    }
  PredictableProcess delta_atoms(n, 0.0), alpha_atoms(n, 0.0);
  ExtPredictable l(n, ExtReal::neg_inf()), u(n, ExtReal::pos_inf());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const Node node{i, j};
      if (rng.chance(0.35)) {
        delta_atoms.for_step(node) = rng.uniform(0.2, 1.0);
        l.for_step(node) = s[node] - rng.uniform(0.0, 0.4);
      }
      if (rng.chance(0.35)) {
        alpha_atoms.for_step(node) = rng.uniform(0.2, 1.0);
        u.for_step(node) = s[node] + rng.uniform(0.0, 0.4);
      }
    }
  BarrierSet barriers(lower, upper, l, IncreasingProcess(delta_atoms), u, IncreasingProcess(alpha_atoms), xi);

  double c_bound = rng.uniform(0.05, 0.3);
  double eta = 0.0;
  Driver driver = drivers::zero();
  switch (kind) {
    case DriverKind::zero:
      break;
    case DriverKind::linear: {
      const double a = rng.uniform(-0.5, 0.5), b = rng.uniform(-1.0, 1.0), c = rng.uniform(-0.3, 0.3);
      driver = drivers::linear(a, b, c);
      eta = std::fabs(a) * radius + std::fabs(c) + b * b / (4.0 * c_bound);
      break;
    }
    case DriverKind::quadratic: {
      const double q = (rng.chance(0.5) ? 1.0 : -1.0) * rng.uniform(0.05, c_bound);
      driver = drivers::quadratic(q);
      break;
    }
  }
  double beta = 0.0;
  IncreasingProcess a(n);
  if (with_measure) {
    PredictableProcess a_atoms(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j)
        if (rng.chance(0.3)) a_atoms.for_step({i, j}) = rng.uniform(0.05, 0.3);
    a = IncreasingProcess(std::move(a_atoms));
    const double gx = rng.uniform(-0.5, 0.5), gy = rng.uniform(-1.0, 1.0), g0 = rng.uniform(-0.3, 0.3);
    driver = drivers::with_measure(driver, a, drivers::g_linear(gx, gy, g0));
    beta = (std::fabs(gx) + std::fabs(gy)) * radius + std::fabs(g0);
  }
  GrowthBounds bounds{AdaptedProcess(n, eta), AdaptedProcess(n, c_bound), AdaptedProcess(n, beta), a, {}};
  driver = driver.with_bounds(bounds);
  return TwoSidedInstance{lattice, xi, spec, barriers, bounds, driver};
}

}  // namespace rbsde::verify
