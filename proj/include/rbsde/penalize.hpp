#pragma once

#include <memory>
#include <vector>

#include "rbsde/barriers.hpp"
#include "rbsde/drivers.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/solver.hpp"

namespace rbsde {

/// n in {0, 1, 2, 4, ..., 2^16}.
std::vector<double> default_penalty_schedule();
inline constexpr double kDefaultPenaltyTolerance = 1e-8;
inline constexpr double kDefaultPenaltyMax = 1099511627776.0;  // 2^40

/// Inputs shared by every member of a penalized family. The witness is
/// normalized to S_T = xi and must lie in Dom (HypothesisAViolated otherwise).
class PenalizationProblem {
 public:
  PenalizationProblem(Lattice lattice, GrowthBounds bounds, const SemimartingaleSpec& spec, BarrierSet barriers);

  const Lattice& lattice() const { return lattice_; }
  const GrowthBounds& bounds() const { return bounds_; }
  const SemimartingaleSpec& spec() const { return spec_; }
  const BarrierSet& barriers() const { return barriers_; }
  const Driver& lower_driver() const { return lower_driver_; }
  const Driver& upper_driver() const { return upper_driver_; }
  ExtAdapted witness() const;

 private:
  Lattice lattice_;
  GrowthBounds bounds_;
  SemimartingaleSpec spec_;
  BarrierSet barriers_;
  Driver lower_driver_;
  Driver upper_driver_;
};

/// Minimal penalized equation: dominated lower driver plus n (l - y)+ d delta,
/// reflected between L and S. dK- vanishes.
Solution solve_penalized_lower(const PenalizationProblem& problem, double n);
/// Maximal penalized equation: dominated upper driver minus n (y - u)+ d alpha,
/// reflected between S and U. dK+ vanishes.
Solution solve_penalized_upper(const PenalizationProblem& problem, double n);

Solution solve_penalized_lower(const Lattice& lattice, const GrowthBounds& bounds, const SemimartingaleSpec& spec,
                               const BarrierSet& barriers, double n);
Solution solve_penalized_upper(const Lattice& lattice, const GrowthBounds& bounds, const SemimartingaleSpec& spec,
                               const BarrierSet& barriers, double n);

/// n = infinity: the penalty replaced by the hard constraint (L v l on delta atoms below, u ^ U above).
Solution hard_limit_lower(const PenalizationProblem& problem);
Solution hard_limit_upper(const PenalizationProblem& problem);

struct PenalizedFamily {
  std::shared_ptr<const PenalizationProblem> problem;
  std::vector<double> schedule;
  std::vector<Solution> lower;
  std::vector<Solution> upper;
};

/// Solves both equations for every n of the schedule (concurrently).
PenalizedFamily penalized_family(std::shared_ptr<const PenalizationProblem> problem, std::vector<double> schedule);
/// Appends schedule entries, solving the new members.
void extend_family(PenalizedFamily& family, const std::vector<double>& more);

struct ConvergenceRow {
  Orientation side;
  double n;
  double sup_gap;  // sup over nodes of |Y^n - Y^{previous n}|; 0 for the first entry
  double y0;
};

struct SqueezeResult {
  AdaptedProcess y_under;  // estimate of sup_n of the lower family
  AdaptedProcess y_bar;    // estimate of inf_n of the upper family
  bool converged = false;
  double n_final = 0.0;
  double gap_lower = 0.0;
  double gap_upper = 0.0;
  std::vector<ConvergenceRow> table;
};

std::vector<ConvergenceRow> convergence_table(const PenalizedFamily& family);

/// Limits at the largest n of the schedule once both Cauchy gaps are <= tol. The
/// schedule is extended by doubling up to n_max; ScheduleExhausted carries the residual
/// gap unless throw_on_exhaustion is false, in which case converged is false.
SqueezeResult squeeze_limits(PenalizedFamily& family, double tol = kDefaultPenaltyTolerance,
                             double n_max = kDefaultPenaltyMax, bool throw_on_exhaustion = true);

struct SandwichReport {
  double worst = 0.0;  // largest violation of L <= Y_n <= Y_{n+1} <= S <= Ybar_{n+1} <= Ybar_n <= U
  Node at{0, 0};
  double k_minus_lower = 0.0;  // max dK- over the lower family
  double k_plus_upper = 0.0;   // max dK+ over the upper family
};
SandwichReport sandwich_check(const PenalizedFamily& family);

struct ReductionOptions {
  std::vector<double> schedule = default_penalty_schedule();
  double tol = kDefaultPenaltyTolerance;
  double n_max = kDefaultPenaltyMax;
  double agreement_tol = 1e-6;
};

struct ReductionResult {
  Solution solution;        // rcll-barrier solve between the squeeze limits
  Solution standard;        // standard-form solve on the effective barriers
  AdaptedProcess y_under;   // lower limit (hard constraint)
  AdaptedProcess y_bar;     // upper limit (hard constraint)
  PenalizedFamily family;
  SqueezeResult squeeze;
  double limit_gap = 0.0;   // sup |finite-n limit estimate - hard limit|
  double y0_gap = 0.0;      // |Y_0(solution) - Y_0(standard)|
  double sup_gap = 0.0;     // sup over nodes of the same difference
  bool in_dom = false;
  bool within_squeeze = false;

  bool agrees(double tol) const { return y0_gap <= tol && in_dom; }
};

/// Builds the squeeze barriers from the penalized family and solves the RBSDE with
/// rcll barriers (Yunder, Ybar) and the user driver; cross-checks against the
/// standard-form solve and Dom membership.
ReductionResult reduce_and_solve(const Lattice& lattice, const Driver& driver, const BarrierSet& barriers,
                                 const GrowthBounds& bounds, const SemimartingaleSpec& spec,
                                 const ReductionOptions& options = {});

}  // namespace rbsde
