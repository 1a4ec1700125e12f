#include "rbsde/snell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rbsde/errors.hpp"

namespace rbsde {

BarrierSet SnellInstance::barriers() const {
  const int n = steps();
  ExtAdapted upper(n, ExtReal::pos_inf());
  ExtPredictable u(n, ExtReal::pos_inf());
  return BarrierSet(lower, upper, lower_predictable, delta, u, IncreasingProcess(n), terminal);
}

std::optional<std::string> hypothesis_a_failure(const SnellInstance& inst) {
  if (!inst.witness) return std::nullopt;
  const auto& m = *inst.witness;
  const int n = inst.steps();
  if (m.values().steps() != n) return "witness depth differs from the instance";
  if (!m.is_martingale(1e-12)) return "witness is not a martingale (V+ or V- nonzero)";
  for (int i = 1; i <= n; ++i)
    for (int j = 0; j <= i; ++j) {
      const Node node{i, j};
      const double mv = m.values()[node];
      const ExtReal l = i == n ? ExtReal(inst.terminal[j]) : inst.lower[node];
      if (l > ExtReal(mv)) return "L > M at " + to_string(node);
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const Node node{i, j};
      if (inst.delta.has_atom(node) && inst.lower_predictable.for_step(node) > ExtReal(m.values()[node]))
        return "l > M_{t-} on a delta atom at " + to_string(node);
    }
  return std::nullopt;
}

Solution snell_envelope(const Lattice& lattice, const SnellInstance& inst) {
  if (inst.steps() != lattice.steps()) throw std::invalid_argument("snell_envelope: depth mismatch");
  if (auto failure = hypothesis_a_failure(inst)) throw HypothesisAViolated(*failure);
  return solve_rbsde(lattice, drivers::zero(), inst.barriers());
}

Solution snell_lebesgue(const Lattice& lattice, const ExtAdapted& lower, const ExtPredictable& l,
                        std::vector<double> terminal, std::optional<SemimartingaleSpec> witness) {
  SnellInstance inst{lower, l, IncreasingProcess::uniform(lattice.steps(), lattice.dt()), std::move(terminal),
                     std::move(witness)};
  return snell_envelope(lattice, inst);
}

Solution snell_stopping_time_atom(const Lattice& lattice, int k, std::span<const double> xi_prime,
                                  const ExtAdapted& lower, std::vector<double> terminal,
                                  std::optional<SemimartingaleSpec> witness) {
  const int n = lattice.steps();
  if (k < 1 || k > n) throw std::invalid_argument("snell_stopping_time_atom: k must be in 1..N");
  if (static_cast<int>(xi_prime.size()) != k) throw std::invalid_argument("snell_stopping_time_atom: xi' needs k values");
  PredictableProcess atoms(n, 0.0);
  ExtPredictable l(n, ExtReal::neg_inf());
  for (int j = 0; j < k; ++j) {
    atoms.for_step({k - 1, j}) = 1.0;
    l.for_step({k - 1, j}) = ExtReal::from_double(xi_prime[j]);
  }
  SnellInstance inst{lower, l, IncreasingProcess(std::move(atoms)), std::move(terminal), std::move(witness)};
  return snell_envelope(lattice, inst);
}

double supermartingale_defect(const AdaptedProcess& y) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < y.steps(); ++i)
    for (int j = 0; j <= i; ++j) worst = std::max(worst, conditional_expectation(y, {i, j}) - y[{i, j}]);
  return worst;
}

}  // namespace rbsde
