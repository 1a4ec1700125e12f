#include "rbsde/lattice.hpp"

#include <cmath>
#include <string>

namespace rbsde {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("TimeGrid: horizon must be finite and > 0");
  if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
  // Paths are stored as 64-bit masks.
  if (steps > 62) throw std::invalid_argument("TimeGrid: at most 62 steps");
  dt_ = horizon / steps;
  sqrt_dt_ = std::sqrt(dt_);
}

Path::Path(std::uint64_t bits, int length) : bits_(bits), length_(length) {
  if (length < 0 || length > 62) throw std::invalid_argument("Path: length out of range");
  if (length < 64 && (bits >> length) != 0) throw std::invalid_argument("Path: bits beyond length");
}

Node Path::node_at(int level) const {
  if (level < 0 || level > length_) throw std::out_of_range("Path::node_at: level out of range");
  const std::uint64_t mask = level == 0 ? 0 : (~std::uint64_t{0} >> (64 - level));
  return {level, static_cast<int>(__builtin_popcountll(bits_ & mask))};
}

IncreasingProcess::IncreasingProcess(PredictableProcess atoms) : atoms_(std::move(atoms)) {
  for (int i = 0; i < atoms_.steps(); ++i)
    for (int j = 0; j <= i; ++j) {
      const double w = atoms_.for_step({i, j});
      if (!std::isfinite(w) || w < 0.0)
        throw std::invalid_argument("IncreasingProcess: atom weight must be finite and >= 0 at node " +
                                    to_string(Node{i, j}));
    }
}

IncreasingProcess IncreasingProcess::uniform(int steps, double weight) {
  return IncreasingProcess(PredictableProcess(steps, weight));
}

IncreasingProcess IncreasingProcess::from_atoms(int steps, std::span<const std::pair<int, double>> atoms) {
  PredictableProcess w(steps, 0.0);
  for (auto [index, weight] : atoms) {
    if (index < 1 || index > steps)
      throw std::invalid_argument("IncreasingProcess: atom time index " + std::to_string(index) +
                                  " outside 1.." + std::to_string(steps));
    for (auto& v : w.level(index - 1)) v += weight;
  }
  return IncreasingProcess(std::move(w));
}

bool IncreasingProcess::is_zero() const {
  for (int i = 0; i < atoms_.steps(); ++i)
    for (double w : atoms_.level(i))
      if (w > 0.0) return false;
  return true;
}

std::vector<double> IncreasingProcess::cumulative_along(const Path& path) const {
  std::vector<double> out(static_cast<std::size_t>(steps()) + 1, 0.0);
  for (int i = 0; i < steps(); ++i) out[i + 1] = out[i] + atom(path.node_at(i));
  return out;
}

double log_node_probability(Node n) {
  return std::lgamma(n.level + 1.0) - std::lgamma(n.index + 1.0) - std::lgamma(n.level - n.index + 1.0) -
         n.level * std::log(2.0);
}

double conditional_expectation(const AdaptedProcess& x, Node n) {
  if (n.level >= x.steps()) throw std::out_of_range("conditional_expectation: no level after " + to_string(n));
  return one_step_mean(x[Lattice::up(n)], x[Lattice::down(n)]);
}

double martingale_increment_coefficient(const Lattice& lattice, const AdaptedProcess& x, Node n) {
  if (n.level >= x.steps())
    throw std::out_of_range("martingale_increment_coefficient: no level after " + to_string(n));
  return one_step_z(x[Lattice::up(n)], x[Lattice::down(n)], lattice.sqrt_dt());
}

}  // namespace rbsde
