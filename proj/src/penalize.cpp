#include "rbsde/penalize.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "rbsde/errors.hpp"

namespace rbsde {

namespace {

ExtAdapted to_ext(const AdaptedProcess& x) {
  ExtAdapted out(x.steps(), ExtReal(0.0));
  for (int i = 0; i <= x.steps(); ++i)
    for (int j = 0; j <= i; ++j) out[{i, j}] = x[{i, j}];
  return out;
}

double sup_gap(const AdaptedProcess& a, const AdaptedProcess& b) {
  double g = 0.0;
  for (int i = 0; i <= a.steps(); ++i)
    for (int j = 0; j <= i; ++j) g = std::max(g, std::fabs(a[{i, j}] - b[{i, j}]));
  return g;
}

Driver penalized_lower_driver(const PenalizationProblem& p, double n) {
  if (!(n >= 0.0) || !std::isfinite(n)) throw std::invalid_argument("penalty weight must be finite and >= 0");
  if (n == 0.0 || p.barriers().delta().is_zero()) return p.lower_driver();
  const ExtPredictable l = p.barriers().lower_predictable();
  return p.lower_driver().with_term({"penalty", p.barriers().delta(), [l, n](Node node, double, double y) {
                                       const ExtReal v = l.for_step(node);
                                       if (!v.finite()) return 0.0;
                                       return n * std::max(v.value() - y, 0.0);
                                     }});
}

Driver penalized_upper_driver(const PenalizationProblem& p, double n) {
  if (!(n >= 0.0) || !std::isfinite(n)) throw std::invalid_argument("penalty weight must be finite and >= 0");
  if (n == 0.0 || p.barriers().alpha().is_zero()) return p.upper_driver();
  const ExtPredictable u = p.barriers().upper_predictable();
  return p.upper_driver().with_term({"penalty", p.barriers().alpha(), [u, n](Node node, double, double y) {
                                       const ExtReal v = u.for_step(node);
                                       if (!v.finite()) return 0.0;
                                       return -n * std::max(y - v.value(), 0.0);
                                     }});
}

}  // namespace

std::vector<double> default_penalty_schedule() {
  std::vector<double> s{0.0};
  for (int k = 0; k <= 16; ++k) s.push_back(std::ldexp(1.0, k));
  return s;
}

PenalizationProblem::PenalizationProblem(Lattice lattice, GrowthBounds bounds, const SemimartingaleSpec& spec,
                                         BarrierSet barriers)
    : lattice_(lattice),
      bounds_(std::move(bounds)),
      spec_(spec.with_terminal(lattice, barriers.terminal())),
      barriers_(std::move(barriers)) {
  if (barriers_.steps() != lattice_.steps()) throw std::invalid_argument("penalization: barrier depth mismatch");
  if (!dom_membership(spec_.values(), barriers_))
    throw HypothesisAViolated("the witness S (with S_T = xi) is not in Dom");
  lower_driver_ = build_dominated_driver(bounds_, spec_, Orientation::lower);
  upper_driver_ = build_dominated_driver(bounds_, spec_, Orientation::upper);
}

ExtAdapted PenalizationProblem::witness() const { return to_ext(spec_.values()); }

Solution solve_penalized_lower(const PenalizationProblem& p, double n) {
  return solve_reflected(p.lattice(), penalized_lower_driver(p, n), p.barriers().lower(), p.witness(),
                         p.barriers().terminal());
}

Solution solve_penalized_upper(const PenalizationProblem& p, double n) {
  return solve_reflected(p.lattice(), penalized_upper_driver(p, n), p.witness(), p.barriers().upper(),
                         p.barriers().terminal());
}

Solution solve_penalized_lower(const Lattice& lattice, const GrowthBounds& bounds, const SemimartingaleSpec& spec,
                               const BarrierSet& barriers, double n) {
  return solve_penalized_lower(PenalizationProblem(lattice, bounds, spec, barriers), n);
}

Solution solve_penalized_upper(const Lattice& lattice, const GrowthBounds& bounds, const SemimartingaleSpec& spec,
                               const BarrierSet& barriers, double n) {
  return solve_penalized_upper(PenalizationProblem(lattice, bounds, spec, barriers), n);
}

Solution hard_limit_lower(const PenalizationProblem& p) {
  const EffectiveBarriers eff = effective_barriers(p.barriers());
  return solve_reflected(p.lattice(), p.lower_driver(), eff.lower, p.witness(), p.barriers().terminal());
}

Solution hard_limit_upper(const PenalizationProblem& p) {
  const EffectiveBarriers eff = effective_barriers(p.barriers());
  return solve_reflected(p.lattice(), p.upper_driver(), p.witness(), eff.upper, p.barriers().terminal());
}

PenalizedFamily penalized_family(std::shared_ptr<const PenalizationProblem> problem, std::vector<double> schedule) {
  if (!problem) throw std::invalid_argument("penalized_family: no problem");
  PenalizedFamily f{std::move(problem), {}, {}, {}};
  extend_family(f, schedule);
  return f;
}

void extend_family(PenalizedFamily& family, const std::vector<double>& more) {
  for (double n : more) {
    if (!family.schedule.empty() && !(n > family.schedule.back()))
      throw std::invalid_argument("penalty schedule must be strictly increasing");
    family.schedule.push_back(n);
  }
  const auto& p = *family.problem;
  std::vector<std::future<std::pair<Solution, Solution>>> jobs;
  for (double n : more)
    jobs.push_back(std::async(std::launch::async, [&p, n] {
      return std::make_pair(solve_penalized_lower(p, n), solve_penalized_upper(p, n));
    }));
  for (auto& job : jobs) {
    auto [lo, up] = job.get();
    family.lower.push_back(std::move(lo));
    family.upper.push_back(std::move(up));
  }
}

std::vector<ConvergenceRow> convergence_table(const PenalizedFamily& family) {
  std::vector<ConvergenceRow> rows;
  for (std::size_t k = 0; k < family.schedule.size(); ++k)
    rows.push_back({Orientation::lower, family.schedule[k],
                    k == 0 ? 0.0 : sup_gap(family.lower[k].y, family.lower[k - 1].y), family.lower[k].y0()});
  for (std::size_t k = 0; k < family.schedule.size(); ++k)
    rows.push_back({Orientation::upper, family.schedule[k],
                    k == 0 ? 0.0 : sup_gap(family.upper[k].y, family.upper[k - 1].y), family.upper[k].y0()});
  return rows;
}

SqueezeResult squeeze_limits(PenalizedFamily& family, double tol, double n_max, bool throw_on_exhaustion) {
  if (family.schedule.size() < 2) throw std::invalid_argument("squeeze_limits: need at least two schedule entries");
  SqueezeResult r;
  auto gaps = [&] {
    const std::size_t k = family.schedule.size() - 1;
    r.gap_lower = sup_gap(family.lower[k].y, family.lower[k - 1].y);
    r.gap_upper = sup_gap(family.upper[k].y, family.upper[k - 1].y);
    return std::max(r.gap_lower, r.gap_upper) <= tol;
  };
  r.converged = gaps();
  while (!r.converged) {
    const double next = family.schedule.back() > 0.0 ? 2.0 * family.schedule.back() : 1.0;
    if (next > n_max) break;
    extend_family(family, {next});
    r.converged = gaps();
  }
  r.n_final = family.schedule.back();
  r.y_under = family.lower.back().y;
  r.y_bar = family.upper.back().y;
  r.table = convergence_table(family);
  if (!r.converged && throw_on_exhaustion)
    throw ScheduleExhausted("penalization gap above tolerance at n_max", std::max(r.gap_lower, r.gap_upper));
  return r;
}

SandwichReport sandwich_check(const PenalizedFamily& family) {
  SandwichReport r;
  const auto& p = *family.problem;
  const auto& s = p.spec().values();
  const int n = p.lattice().steps();
  auto note = [&](double excess, Node node) {
    if (excess > r.worst) {
      r.worst = excess;
      r.at = node;
    }
  };
  for (std::size_t k = 0; k < family.schedule.size(); ++k) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        const Node node{i, j};
        const double lo = family.lower[k].y[node], up = family.upper[k].y[node];
        const ExtReal l = p.barriers().lower()[node], u = p.barriers().upper()[node];
        if (l.finite()) note(l.value() - lo, node);
        if (u.finite()) note(up - u.value(), node);
        note(lo - s[node], node);
        note(s[node] - up, node);
        if (k > 0) {
          note(family.lower[k - 1].y[node] - lo, node);
          note(up - family.upper[k - 1].y[node], node);
        }
        r.k_minus_lower = std::max(r.k_minus_lower, family.lower[k].k_minus.atom(node));
        r.k_plus_upper = std::max(r.k_plus_upper, family.upper[k].k_plus.atom(node));
      }
  }
  return r;
}

ReductionResult reduce_and_solve(const Lattice& lattice, const Driver& driver, const BarrierSet& barriers,
                                 const GrowthBounds& bounds, const SemimartingaleSpec& spec,
                                 const ReductionOptions& options) {
  auto problem = std::make_shared<const PenalizationProblem>(lattice, bounds, spec, barriers);
  ReductionResult r;
  r.family = penalized_family(problem, options.schedule);
  r.squeeze = squeeze_limits(r.family, options.tol, options.n_max);
  r.y_under = hard_limit_lower(*problem).y;
  r.y_bar = hard_limit_upper(*problem).y;
  r.limit_gap = std::max(sup_gap(r.y_under, r.squeeze.y_under), sup_gap(r.y_bar, r.squeeze.y_bar));

  r.solution = solve_reflected(lattice, driver, to_ext(r.y_under), to_ext(r.y_bar), barriers.terminal());
  r.standard = solve_rbsde(lattice, driver, barriers);
  r.y0_gap = std::fabs(r.solution.y0() - r.standard.y0());
  r.sup_gap = sup_gap(r.solution.y, r.standard.y);
  r.in_dom = dom_membership(r.solution.y, barriers);
  r.within_squeeze = true;
  for (int i = 0; i <= lattice.steps(); ++i)
    for (int j = 0; j <= i; ++j) {
      const Node node{i, j};
      if (r.solution.y[node] < r.y_under[node] || r.solution.y[node] > r.y_bar[node]) r.within_squeeze = false;
    }
  return r;
}

}  // namespace rbsde
