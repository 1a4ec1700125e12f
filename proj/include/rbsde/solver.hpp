#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbsde/barriers.hpp"
#include "rbsde/drivers.hpp"
#include "rbsde/lattice.hpp"

namespace rbsde {

struct SkorokhodReport {
  double flat_off_plus = 0.0;       // max dK+ (Y - L_eff)
  double flat_off_minus = 0.0;      // max dK- (U_eff - Y)
  double singularity_defect = 0.0;  // max dK+ dK-
  double barrier_violation = 0.0;   // max (L_eff - Y)+ v (Y - U_eff)+

  double worst() const;
};

/// (Y, Z, K+, K-) on the lattice. Z, K+, K- and the driver increments are
/// predictable: the value at node (i, j) belongs to the step t_i -> t_{i+1}.
struct Solution {
  AdaptedProcess y;
  PredictableProcess z;
  IncreasingProcess k_plus;
  IncreasingProcess k_minus;
  ExtAdapted lower;  // effective barriers used for the reflection
  ExtAdapted upper;
  PredictableProcess drift;  // f dt + g dA evaluated at the solution
  SkorokhodReport residuals;

  int steps() const { return y.steps(); }
  double y0() const { return y[{0, 0}]; }
};

struct StepOutcome {
  double y = 0.0;
  double dk_plus = 0.0;
  double dk_minus = 0.0;
};

/// Solves y = e + F(y) for a nondecreasing y - F(y). The optional bracket
/// endpoints must satisfy phi(lo) < 0 < phi(hi) when given.
double implicit_step(double e, const std::function<double(double)>& increment, Node node = {0, 0},
                     std::optional<double> bracket_lo = std::nullopt, std::optional<double> bracket_hi = std::nullopt);

/// y = E + f(t, y, Z) dt + g(t, y, y) dA for the driver at node.
double implicit_step(const Driver& driver, Node node, double e, double z, double dt);

/// The reflected step on [lo, hi], implicit at the returned Y.
StepOutcome reflected_step(double e, const std::function<double(double)>& increment, ExtReal lo, ExtReal hi,
                           Node node);

/// Backward induction between rcll barriers lower <= Y <= upper (levels 0..N-1);
/// level N of the barriers is ignored, Y_N = xi.
Solution solve_reflected(const Lattice& lattice, const Driver& driver, const ExtAdapted& lower,
                         const ExtAdapted& upper, std::span<const double> xi);

/// Standard-form solve: reflection on the effective barriers of b, xi taken from b.
Solution solve_rbsde(const Lattice& lattice, const Driver& driver, const BarrierSet& barriers);
/// As above; xi must equal the terminal values carried by the barriers.
Solution solve_rbsde(const Lattice& lattice, const Driver& driver, const BarrierSet& barriers,
                     std::span<const double> xi);

SkorokhodReport skorokhod_residuals(const Solution& s);

/// Process-wide record of the worst certificate seen over all solves.
struct SolveStatistics {
  std::size_t solves = 0;
  double worst_residual = 0.0;
};
SolveStatistics solve_statistics();
void reset_solve_statistics();

/// max over paths and times of |Y_t - xi - sum_{s >= t} (F + dK+ - dK- - Z dB)|,
/// with F recomputed from the driver at (Y, Z). Enumerates all 2^N paths.
double budget_defect(const Lattice& lattice, const Driver& driver, const Solution& s);

struct ComparisonReport {
  std::size_t nodes_checked = 0;
  std::vector<std::string> hypothesis_failures;  // H.1, H.2, terminal ordering
  std::vector<std::string> violations;           // conclusions
  double max_y_excess = 0.0;

  bool hypotheses_hold() const { return hypothesis_failures.empty(); }
  bool passed() const { return hypotheses_hold() && violations.empty(); }
};

/// Checks Y' <= Y, 1{U = U'} dK'- <= dK- and 1{L = L'} dK+ <= dK'+ node-wise,
/// after auditing Y' <= U, L' <= Y, xi' <= xi and dA' <= f(Y', Z') dt + g dA.
ComparisonReport comparison_check(const Lattice& lattice, const Solution& big, const Driver& big_driver,
                                  const Solution& small, double tol = 1e-12);

}  // namespace rbsde
