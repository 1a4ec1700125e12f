#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbsde/barriers.hpp"
#include "rbsde/drivers.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/solver.hpp"

namespace rbsde {

struct SnellInstance {
  ExtAdapted lower;            // L (level N is replaced by xi)
  ExtPredictable lower_predictable;  // l, read on the atoms of delta
  IncreasingProcess delta;
  std::vector<double> terminal;      // xi
  std::optional<SemimartingaleSpec> witness;  // martingale M of hypothesis (A)

  int steps() const { return static_cast<int>(terminal.size()) - 1; }
  BarrierSet barriers() const;
};

/// Empty when (A) holds for the witness: M is a martingale, L <= M on (0, T],
/// l <= M_{t-} on delta atoms. Otherwise the first failure.
std::optional<std::string> hypothesis_a_failure(const SnellInstance& inst);

/// Y_N = xi, Y_i = max(E[Y_{i+1}], L_eff). Throws HypothesisAViolated when a
/// witness is given and fails the audit; without a witness no audit is made.
Solution snell_envelope(const Lattice& lattice, const SnellInstance& inst);

/// delta with an atom of weight dt at every grid time t_1..t_N.
Solution snell_lebesgue(const Lattice& lattice, const ExtAdapted& lower, const ExtPredictable& l,
                        std::vector<double> terminal, std::optional<SemimartingaleSpec> witness = std::nullopt);

/// A single atom of delta at t_k (k in 1..N) with l = xi' given on the nodes of level k-1.
Solution snell_stopping_time_atom(const Lattice& lattice, int k, std::span<const double> xi_prime,
                                  const ExtAdapted& lower, std::vector<double> terminal,
                                  std::optional<SemimartingaleSpec> witness = std::nullopt);

/// max over nodes of E[Y_{i+1}] - Y_i (<= 0 for a supermartingale).
double supermartingale_defect(const AdaptedProcess& y);

}  // namespace rbsde
