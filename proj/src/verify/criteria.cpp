#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "rbsde/oracle.hpp"
#include "rbsde/penalize.hpp"
#include "rbsde/snell.hpp"
#include "rbsde/solver.hpp"
#include "rbsde/verify.hpp"

namespace rbsde::verify {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

CriterionResult finish(int id, std::string name, bool passed, std::size_t cases, std::string detail,
                       const Timer& t) {
  return {id, std::move(name), passed, cases, std::move(detail), t.seconds()};
}

ExtAdapted random_ext(int steps, Rng& rng, double lo, double hi, double p_neg_inf) {
  ExtAdapted x(steps, ExtReal(0.0));
  for (int i = 0; i <= steps; ++i)
    for (auto& v : x.level(i)) v = rng.chance(p_neg_inf) ? ExtReal::neg_inf() : ExtReal(rng.uniform(lo, hi));
  return x;
}

}  // namespace

std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.passed ? "PASS" : "FAIL") << "  C" << r.id << "  " << r.name << "  cases=" << r.cases << "  "
     << r.detail << "  (" << sci(r.seconds) << " s)";
  return os.str();
}

CriterionResult envelope_scan(std::uint64_t seed, std::size_t cases, int max_points) {
  Timer timer;
  Rng rng(seed);
  double worst_ulps = 0.0;
  std::size_t mismatches = 0;
  for (std::size_t c = 0; c < cases; ++c) {
    const int k = rng.integer(1, max_points);
    std::vector<double> times(k), atoms(k);
    std::vector<ExtReal> values(k);
    double t = rng.chance(0.5) ? 0.0 : rng.uniform(0.0, 0.1);
    for (int i = 0; i < k; ++i) {
      times[i] = t;
      t += rng.uniform(0.001, 2.0 / k);
      values[i] = rng.chance(0.05) ? ExtReal::neg_inf() : ExtReal(rng.uniform(-5.0, 5.0));
      atoms[i] = rng.chance(0.5) ? rng.uniform(0.1, 1.0) : 0.0;
    }
    const int pick = rng.integer(0, 3);
    const double n = pick == 0 ? 0.0 : pick == 1 ? 1.0 : pick == 2 ? rng.uniform(0.0, 100.0) : rng.uniform(0.0, 1e4);
    const EnvelopeResult scan = envelope_n(SampledFunction{times, values, atoms}, n);
    const std::vector<ExtReal> brute = oracle::envelope_brute_force(times, values, atoms, n);
    double operand = 0.0;
    for (int i = 0; i < k; ++i) {
      if (atoms[i] > 0.0 && values[i].finite())
        operand = std::max({operand, std::fabs(values[i].value()), std::fabs(values[i].value() + n * times[i])});
      const ExtReal a = scan.values[i], b = brute[i];
      if (a.finite() != b.finite() || (!a.finite() && a != b)) {
        ++mismatches;
        continue;
      }
      if (!a.finite()) continue;
      const double scale = std::max({operand, n * times[i], std::fabs(a.value()), std::fabs(b.value())});
      const double ulps = std::fabs(a.value() - b.value()) / (kEps * std::max(scale, std::numeric_limits<double>::min()));
      worst_ulps = std::max(worst_ulps, ulps);
      if (ulps > 4.0) ++mismatches;
    }
  }
  return finish(1, "envelope scan vs O(N^2) brute force", mismatches == 0, cases,
                "mismatches=" + std::to_string(mismatches) + " worst_ulps=" + sci(worst_ulps) + " (tol 4)", timer);
}

CriterionResult left_constraint_equivalence(std::uint64_t seed, std::size_t cases, int max_depth) {
  Timer timer;
  Rng rng(seed);
  std::size_t counterexamples = 0, satisfied = 0, violated = 0;
  for (std::size_t c = 0; c < cases; ++c) {
    const int depth = rng.integer(1, max_depth);
    const Lattice lattice(1.0, depth);
    const AdaptedProcess y = random_adapted(depth, rng, -1.0, 1.0);
    const double p_violate = std::array<double, 3>{0.0, 0.02, 0.1}[rng.integer(0, 2)];
    PredictableProcess w(depth, 0.0);
    ExtPredictable g(depth, ExtReal::neg_inf());
    for (int i = 0; i < depth; ++i)
      for (int j = 0; j <= i; ++j) {
        const Node node{i, j};
        if (rng.chance(0.4)) w.for_step(node) = rng.uniform(0.1, 1.0);
        const double r = rng.uniform(0.0, 1.0);
        if (r < p_violate)
          g.for_step(node) = y[node] + rng.uniform(1e-9, 0.3);
        else if (r < p_violate + 0.1)
          g.for_step(node) = y[node];
        else if (r < p_violate + 0.3)
          g.for_step(node) = ExtReal::neg_inf();
        else
          g.for_step(node) = y[node] - rng.uniform(0.0, 1.0);
      }
    const IncreasingProcess rho(std::move(w));
    const bool a = check_left_constraint(y, g, rho);
    const bool b = check_left_constraint_pointwise(lattice, y, g, rho);
    const bool o1 = oracle::left_constraint_brute_force(y, g, rho);
    const bool o2 = oracle::left_constraint_large_n(lattice, y, g, rho);
    if (a != b || a != o1 || a != o2) ++counterexamples;
    (a ? satisfied : violated)++;
  }
  return finish(2, "left-constraint characterization (atom vs pointwise vs path oracles)", counterexamples == 0,
                cases,
                "counterexamples=" + std::to_string(counterexamples) + " satisfied=" + std::to_string(satisfied) +
                    " violated=" + std::to_string(violated),
                timer);
}

CriterionResult snell_vs_oracles(std::uint64_t seed, std::size_t cases, int max_depth) {
  Timer timer;
  Rng rng(seed);
  double worst = 0.0;
  bool ok = true;
  for (std::size_t c = 0; c < cases; ++c) {
    const int depth = rng.integer(1, std::min(max_depth, 5));
    const Lattice lattice(1.0, depth);
    const ExtAdapted lower = random_ext(depth, rng, -1.0, 1.0, 0.1);
    const std::vector<double> xi = random_terminal(depth, rng, -1.0, 1.0);
    SnellInstance inst{lower, ExtPredictable(depth, ExtReal::neg_inf()), IncreasingProcess(depth), xi, std::nullopt};
    const double diff = std::fabs(snell_envelope(lattice, inst).y0() - oracle::exhaustive_stopping_value(lower, xi));
    worst = std::max(worst, diff);
    if (!(diff <= 1e-12)) ok = false;
  }
  double worst_put = 0.0;
  std::size_t puts = 0;
  for (int depth = 3; depth <= 12; ++depth)
    for (double spot : {90.0, 100.0, 110.0})
      for (double sigma : {0.2, 0.35}) {
        const double strike = 100.0, horizon = 1.0;
        const Lattice lattice(horizon, depth);
        const double r = oracle::crr_rate(sigma, horizon, depth);
        const double u = std::exp(sigma * lattice.sqrt_dt());
        const ExtAdapted payoff = lattice.adapted<ExtReal>([&](Node node, double t, double) {
          return ExtReal(std::exp(-r * t) * std::max(strike - spot * std::pow(u, 2 * node.index - node.level), 0.0));
        });
        std::vector<double> xi(depth + 1);
        for (int j = 0; j <= depth; ++j) xi[j] = payoff[{depth, j}].value();
        SnellInstance inst{payoff, ExtPredictable(depth, ExtReal::neg_inf()), IncreasingProcess(depth), xi,
                           std::nullopt};
        const double diff =
            std::fabs(snell_envelope(lattice, inst).y0() - oracle::crr_american_put(strike, spot, sigma, horizon, depth));
        worst_put = std::max(worst_put, diff);
        if (!(diff <= 1e-10)) ok = false;
        ++puts;
      }
  return finish(3, "Snell envelope vs exhaustive stopping and CRR American put", ok, cases + puts,
                "stopping_worst=" + sci(worst) + " (tol 1e-12) put_worst=" + sci(worst_put) + " (tol 1e-10, " +
                    std::to_string(puts) + " trees, depth 3-12)",
                timer);
}

CriterionResult dynkin_identification(std::uint64_t seed, std::size_t cases, int max_depth) {
  Timer timer;
  Rng rng(seed);
  double worst = 0.0;
  std::size_t no_value = 0, compared = 0;
  bool ok = true;
  for (std::size_t c = 0; c < cases; ++c) {
    const int depth = rng.integer(1, std::min(max_depth, 4));
    const Lattice lattice(1.0, depth);
    ExtAdapted lower(depth, ExtReal(0.0)), upper(depth, ExtReal(0.0));
    for (int i = 0; i <= depth; ++i)
      for (int j = 0; j <= i; ++j) {
        const double m = rng.uniform(-1.0, 1.0);
        lower[{i, j}] = rng.chance(0.15) ? ExtReal::neg_inf() : ExtReal(m - rng.uniform(0.0, 0.6));
        upper[{i, j}] = rng.chance(0.15) ? ExtReal::pos_inf() : ExtReal(m + rng.uniform(0.0, 0.6));
      }
    const std::vector<double> xi = random_terminal(depth, rng, -1.0, 1.0);
    const BarrierSet barriers(lower, upper, ExtPredictable(depth, ExtReal::neg_inf()), IncreasingProcess(depth),
                              ExtPredictable(depth, ExtReal::pos_inf()), IncreasingProcess(depth), xi);
    const auto game = oracle::exhaustive_dynkin(lower, upper, xi);
    if (!game.has_value()) {
      ++no_value;
      continue;
    }
    ++compared;
    const double diff = std::fabs(solve_rbsde(lattice, drivers::zero(), barriers).y0() - game.value());
    worst = std::max(worst, diff);
    if (!(diff <= 1e-12)) ok = false;
  }
  return finish(4, "Dynkin game value vs zero-driver doubly reflected solve", ok && compared > 0, cases,
                "compared=" + std::to_string(compared) + " worst=" + sci(worst) + " (tol 1e-12) no_value_rate=" +
                    sci(static_cast<double>(no_value) / static_cast<double>(std::max<std::size_t>(cases, 1))),
                timer);
}

CriterionResult quadratic_closed_form(std::uint64_t seed, std::size_t cases_per_cell) {
  Timer timer;
  Rng rng(seed);
  double worst = 0.0;
  std::size_t cases = 0;
  for (int depth = 4; depth <= 10; ++depth)
    for (double c : {0.1, 0.5, 2.0})
      for (std::size_t k = 0; k < cases_per_cell; ++k) {
        const Lattice lattice(1.0, depth);
        const std::vector<double> xi = random_terminal(depth, rng, -1.0, 1.0);
        const double y0 = solve_rbsde(lattice, drivers::quadratic(c), BarrierSet::unconstrained(depth, xi)).y0();
        worst = std::max(worst, std::fabs(y0 - oracle::quadratic_closed_form(c, xi)));
        ++cases;
      }
  return finish(5, "quadratic driver vs exponential-transform closed form", worst <= 1e-10, cases,
                "worst=" + sci(worst) + " (tol 1e-10, depths 4-10, c in {0.1, 0.5, 2})", timer);
}

CriterionResult penalization_sandwich(std::uint64_t seed, std::size_t cases, int max_depth) {
  Timer timer;
  Rng rng(seed);
  double worst = 0.0, k_spurious = 0.0;
  std::size_t outside_dom = 0;
  const auto schedule = default_penalty_schedule();
  for (std::size_t c = 0; c < cases; ++c) {
    const int depth = rng.integer(2, std::max(2, max_depth));
    const auto kind = static_cast<DriverKind>(rng.integer(0, 2));
    TwoSidedInstance inst = random_two_sided(rng, depth, kind);
    auto problem = std::make_shared<const PenalizationProblem>(inst.lattice, inst.bounds, inst.spec, inst.barriers);
    const PenalizedFamily family = penalized_family(problem, schedule);
    const SandwichReport rep = sandwich_check(family);
    worst = std::max(worst, rep.worst);
    k_spurious = std::max({k_spurious, rep.k_minus_lower, rep.k_plus_upper});
    if (!dom_membership(hard_limit_lower(*problem).y, inst.barriers) ||
        !dom_membership(hard_limit_upper(*problem).y, inst.barriers))
      ++outside_dom;
  }
  const bool ok = worst <= 1e-9 && k_spurious <= 1e-12 && outside_dom == 0;
  return finish(6, "penalization monotone sandwich over the default schedule", ok, cases,
                "worst=" + sci(worst) + " (tol 1e-9) spurious_K=" + sci(k_spurious) +
                    " limits_outside_Dom=" + std::to_string(outside_dom),
                timer);
}

CriterionResult equivalence_reduction(std::uint64_t seed, std::size_t cases, int depth, double penalty_tol) {
  Timer timer;
  Rng rng(seed);
  double worst = 0.0, worst_limit = 0.0;
  std::size_t failures = 0, outside = 0;
  std::string first_error;
  for (std::size_t c = 0; c < cases; ++c) {
    const auto kind = c % 2 == 0 ? DriverKind::linear : DriverKind::quadratic;
    TwoSidedInstance inst = random_two_sided(rng, depth, kind);
    ReductionOptions opt;
    opt.tol = penalty_tol;
    try {
      const ReductionResult r = reduce_and_solve(inst.lattice, inst.driver, inst.barriers, inst.bounds, inst.spec, opt);
      worst = std::max(worst, r.y0_gap);
      worst_limit = std::max(worst_limit, r.limit_gap);
      if (!r.agrees(1e-6)) ++failures;
      if (!r.within_squeeze) ++outside;
    } catch (const Error& e) {
      ++failures;
      if (first_error.empty()) first_error = e.what();
    }
  }
  std::string detail = "worst_dY0=" + sci(worst) + " (tol 1e-6) failures=" + std::to_string(failures) +
                       " penalty_limit_gap=" + sci(worst_limit) + " standard_outside_squeeze=" + std::to_string(outside);
  if (!first_error.empty()) detail += " first_error=\"" + first_error + "\"";
  return finish(7, "reduction to rcll barriers vs standard form", failures == 0, cases, detail, timer);
}

CriterionResult skorokhod_certificates() {
  Timer timer;
  const SolveStatistics s = solve_statistics();
  return finish(8, "Skorokhod flat-off and singularity certificates on every solve",
                s.solves > 0 && s.worst_residual <= 1e-12, s.solves,
                "worst=" + sci(s.worst_residual) + " (tol 1e-12)", timer);
}

CriterionResult comparison_pairs(std::uint64_t seed, std::size_t cases, int max_depth) {
  Timer timer;
  Rng rng(seed);
  std::size_t violations = 0, hypothesis_failures = 0, touching = 0;
  std::string first;
  for (std::size_t c = 0; c < cases; ++c) {
    const int depth = rng.integer(2, std::max(2, max_depth));
    const Lattice lattice(1.0, depth);
    const int n = depth;
    const double a = rng.uniform(-0.5, 0.5), b = rng.uniform(-1.0, 1.0), c0 = rng.uniform(-0.5, 0.5);
    Driver small = drivers::linear(a, b, c0);
    const double shift = rng.chance(0.6) ? rng.uniform(0.0, 0.5) : 0.0;
    Driver big = small.shifted(shift);
    if (rng.chance(0.4)) {
      PredictableProcess w(n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j)
          if (rng.chance(0.3)) w.for_step({i, j}) = rng.uniform(0.05, 0.3);
      const IncreasingProcess A(std::move(w));
      const auto g = drivers::g_linear(rng.uniform(-0.5, 0.5), rng.uniform(-1.0, 1.0), rng.uniform(-0.3, 0.3));
      small = drivers::with_measure(small, A, g);
      big = drivers::with_measure(big, A, g);
    }
    std::vector<double> xi = random_terminal(n, rng, -1.0, 1.0), xi_small = xi;
    for (double& v : xi_small)
      if (rng.chance(0.5)) v -= rng.uniform(0.0, 0.3);
    ExtAdapted lo(n, ExtReal(0.0)), hi(n, ExtReal(0.0)), lo_small(n, ExtReal(0.0)), hi_small(n, ExtReal(0.0));
    const bool touch_region = rng.chance(0.5);
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= i; ++j) {
        const Node node{i, j};
        const double m = rng.uniform(-0.6, 0.6);
        const double l = m - rng.uniform(0.05, 0.4), u = m + rng.uniform(0.2, 0.6);
        lo[node] = rng.chance(0.1) ? ExtReal::neg_inf() : ExtReal(l);
        hi[node] = rng.chance(0.1) ? ExtReal::pos_inf() : ExtReal(u);
        const bool same = touch_region && (j <= i / 2);
        lo_small[node] = same ? lo[node] : lo[node] - rng.uniform(0.0, 0.3);
        hi_small[node] = same || !hi[node].finite() ? hi[node] : hi[node] - rng.uniform(0.0, 0.15);
      }
    auto make = [&](const ExtAdapted& l, const ExtAdapted& u, const std::vector<double>& x) {
      return BarrierSet(l, u, ExtPredictable(n, ExtReal::neg_inf()), IncreasingProcess(n),
                        ExtPredictable(n, ExtReal::pos_inf()), IncreasingProcess(n), x);
    };
    const Solution sb = solve_rbsde(lattice, big, make(lo, hi, xi));
    const Solution ss = solve_rbsde(lattice, small, make(lo_small, hi_small, xi_small));
    const ComparisonReport rep = comparison_check(lattice, sb, big, ss);
    if (!rep.hypotheses_hold()) {
      ++hypothesis_failures;
      if (first.empty()) first = rep.hypothesis_failures.front();
    }
    if (!rep.violations.empty()) {
      ++violations;
      if (first.empty()) first = rep.violations.front();
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j)
        if (sb.upper[{i, j}] == ss.upper[{i, j}] && ss.k_minus.atom({i, j}) > 0.0) ++touching;
  }
  std::string detail = "violations=" + std::to_string(violations) +
                       " hypothesis_failures=" + std::to_string(hypothesis_failures) +
                       " touching_nodes_with_dK'-=" + std::to_string(touching);
  if (!first.empty()) detail += " first=\"" + first + "\"";
  return finish(9, "comparison theorem on constructed ordered pairs", violations == 0 && hypothesis_failures == 0,
                cases, detail, timer);
}

CriterionResult budget_identity(std::uint64_t seed, std::size_t cases, int depth) {
  Timer timer;
  Rng rng(seed);
  double worst = 0.0;
  std::size_t solves = 0;
  for (std::size_t c = 0; c < cases; ++c) {
    const auto kind = static_cast<DriverKind>(c % 3);
    TwoSidedInstance inst = random_two_sided(rng, depth, kind);
    const Solution std_form = solve_rbsde(inst.lattice, inst.driver, inst.barriers);
    worst = std::max(worst, budget_defect(inst.lattice, inst.driver, std_form));
    const PenalizationProblem problem(inst.lattice, inst.bounds, inst.spec, inst.barriers);
    const double n = std::ldexp(1.0, rng.integer(0, 16));
    const Solution lo = solve_penalized_lower(problem, n);
    const Solution up = solve_penalized_upper(problem, n);
    solves += 3;
    // The penalty term is part of the driver of those equations.
    Driver lo_driver = problem.lower_driver(), up_driver = problem.upper_driver();
    const ExtPredictable l = inst.barriers.lower_predictable(), u = inst.barriers.upper_predictable();
    lo_driver = lo_driver.with_term({"penalty", inst.barriers.delta(), [l, n](Node node, double, double y) {
                                       const ExtReal v = l.for_step(node);
                                       return v.finite() ? n * std::max(v.value() - y, 0.0) : 0.0;
                                     }});
    up_driver = up_driver.with_term({"penalty", inst.barriers.alpha(), [u, n](Node node, double, double y) {
                                       const ExtReal v = u.for_step(node);
                                       return v.finite() ? -n * std::max(y - v.value(), 0.0) : 0.0;
                                     }});
    worst = std::max(worst, budget_defect(inst.lattice, lo_driver, lo));
    worst = std::max(worst, budget_defect(inst.lattice, up_driver, up));
  }
  return finish(10, "per-path budget identity at depth 12", worst <= 1e-10, solves,
                "worst=" + sci(worst) + " (tol 1e-10)", timer);
}

std::vector<CriterionResult> run_suite(const SuiteOptions& o, std::ostream* log) {
  auto cases = [&](std::size_t d) { return o.cases.value_or(d); };
  auto depth = [&](int d) { return o.depth ? std::min(*o.depth, d) : d; };
  std::vector<CriterionResult> out;
  auto note = [&](CriterionResult r) {
    if (log) *log << format_line(r) << std::endl;
    out.push_back(std::move(r));
  };
  reset_solve_statistics();
  note(envelope_scan(o.seed + 1, cases(1000)));
  note(left_constraint_equivalence(o.seed + 2, cases(1000), depth(8)));
  note(snell_vs_oracles(o.seed + 3, cases(100), depth(4)));
  note(dynkin_identification(o.seed + 4, cases(100), depth(4)));
  note(quadratic_closed_form(o.seed + 5, o.cases ? std::max<std::size_t>(1, *o.cases / 21) : 3));
  note(penalization_sandwich(o.seed + 6, cases(100), depth(8)));
  note(equivalence_reduction(o.seed + 7, cases(50), 8, o.penalty_tol));
  note(comparison_pairs(o.seed + 9, cases(200), depth(8)));
  note(budget_identity(o.seed + 10, o.cases ? std::max<std::size_t>(1, *o.cases / 10) : 20, 12));
  // Criterion 8 reads the statistics accumulated by all of the above.
  CriterionResult c8 = skorokhod_certificates();
  note(c8);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

}  // namespace rbsde::verify
