#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rbsde/ext_real.hpp"
#include "rbsde/lattice.hpp"

namespace rbsde {

/// The four barriers: rcll L <= Y <= U on [0, T), and predictable l <= Y_{t-}
/// on the atoms of delta, Y_{t-} <= u on the atoms of alpha.
///
/// Construction applies the terminal normalization L_T = U_T = xi. Values of
/// l (resp. u) off the support of delta (resp. alpha) are ignored.
class BarrierSet {
 public:
  BarrierSet(ExtAdapted lower, ExtAdapted upper, ExtPredictable lower_predictable, IncreasingProcess delta,
             ExtPredictable upper_predictable, IncreasingProcess alpha, std::vector<double> terminal);

  /// L = -inf, U = +inf, no predictable constraints.
  static BarrierSet unconstrained(int steps, std::vector<double> terminal);

  int steps() const { return static_cast<int>(terminal_.size()) - 1; }
  const ExtAdapted& lower() const { return lower_; }
  const ExtAdapted& upper() const { return upper_; }
  const ExtPredictable& lower_predictable() const { return lower_predictable_; }
  const ExtPredictable& upper_predictable() const { return upper_predictable_; }
  const IncreasingProcess& delta() const { return delta_; }
  const IncreasingProcess& alpha() const { return alpha_; }
  const std::vector<double>& terminal() const { return terminal_; }

 private:
  ExtAdapted lower_;
  ExtAdapted upper_;
  ExtPredictable lower_predictable_;
  IncreasingProcess delta_;
  ExtPredictable upper_predictable_;
  IncreasingProcess alpha_;
  std::vector<double> terminal_;
};

/// A function sampled along one path: values g(t_k) and atom weights of rho at t_k.
struct SampledFunction {
  std::span<const double> times;
  std::span<const ExtReal> values;
  std::span<const double> atoms;
};

/// g^{n,rho} (or g^{*,rho} when n is empty) at every time point, with its left limits.
struct EnvelopeResult {
  std::optional<double> n;
  std::vector<ExtReal> values;
  std::vector<ExtReal> left_limit_values;

  bool infinite_index() const { return !n.has_value(); }
};

/// -n t + max{ g(s) + n s : s <= t, rho has an atom at s }, -inf when there is
/// no atom in [0, t]. One left-to-right scan with a running max.
EnvelopeResult envelope_n(const SampledFunction& g, double n);

/// Limit n -> inf for a purely atomic rho: g(t) on atoms, -inf elsewhere; the
/// left limit is -inf everywhere (finitely many atoms strictly before t).
EnvelopeResult envelope_star(const SampledFunction& g);

/// Effective constraint interval on Y_{t_{j+1}-} = Y_j for every node of a level:
///   lower_j = L_j v (l_{t_{j+1}} if delta has an atom there),
///   upper_j = U_j ^ (u_{t_{j+1}} if alpha has an atom there).
struct EffectiveLevel {
  std::vector<ExtReal> lower;
  std::vector<ExtReal> upper;
};

/// Throws InfeasibleBarriers naming the first node with lower > upper.
EffectiveLevel effective_barriers(const BarrierSet& b, int level);

/// All levels at once; level N carries xi on both sides.
struct EffectiveBarriers {
  ExtAdapted lower;
  ExtAdapted upper;
};
EffectiveBarriers effective_barriers(const BarrierSet& b);

/// g <= Y_{t-} at every atom of rho, with Y_{t_{i+1}-} read at node (i, j).
bool check_left_constraint(const AdaptedProcess& y, const ExtPredictable& g, const IncreasingProcess& rho);
/// Y_{t-} <= g at every atom of rho.
bool check_left_constraint_above(const AdaptedProcess& y, const ExtPredictable& g, const IncreasingProcess& rho);

/// The same test in its pointwise form: g^{*,rho}(t) <= Y_{t-} for every t in (0, T]
/// along every path. Exponential in the depth.
bool check_left_constraint_pointwise(const Lattice& lattice, const AdaptedProcess& y, const ExtPredictable& g,
                                     const IncreasingProcess& rho);

/// L <= Y <= U at t < T, l <= Y_{t-} on delta atoms, Y_{t-} <= u on alpha atoms.
bool dom_membership(const AdaptedProcess& y, const BarrierSet& b);

}  // namespace rbsde
