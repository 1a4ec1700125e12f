#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rbsde/errors.hpp"
#include "rbsde/ext_real.hpp"

namespace rbsde {

/// Uniform grid t_i = i*T/N on [0, T].
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps);

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  double dt() const { return dt_; }
  double sqrt_dt() const { return sqrt_dt_; }
  /// t_0 = 0 and t_N = T exactly.
  double time(int i) const { return i == steps_ ? horizon_ : horizon_ * i / steps_; }

 private:
  double horizon_;
  int steps_;
  double dt_;
  double sqrt_dt_;
};

/// Storage for one value per node on levels [0, last_level] of a recombining tree.
template <class T>
class LevelField {
 public:
  LevelField() = default;
  LevelField(int last_level, T fill)
      : last_level_(last_level), values_(offset(last_level + 1), fill) {
    if (last_level < 0) throw std::invalid_argument("LevelField: negative level count");
  }

  int last_level() const { return last_level_; }

  const T& operator[](Node n) const { return values_[checked(n)]; }
  T& operator[](Node n) { return values_[checked(n)]; }

  std::span<const T> level(int i) const { return {values_.data() + checked({i, 0}), std::size_t(i) + 1}; }
  std::span<T> level(int i) { return {values_.data() + checked({i, 0}), std::size_t(i) + 1}; }

  friend bool operator==(const LevelField&, const LevelField&) = default;

  static constexpr std::size_t offset(int level) {
    return static_cast<std::size_t>(level) * static_cast<std::size_t>(level + 1) / 2;
  }

 private:
  std::size_t checked(Node n) const {
    if (n.level < 0 || n.level > last_level_ || n.index < 0 || n.index > n.level)
      throw std::out_of_range("node " + to_string(n) + " outside levels [0, " + std::to_string(last_level_) + "]");
    return offset(n.level) + static_cast<std::size_t>(n.index);
  }

  int last_level_ = -1;
  std::vector<T> values_;
};

class Lattice;

/// Node-indexed samples of an adapted (rcll) process on levels 0..N.
template <class T>
class Adapted {
 public:
  Adapted() = default;
  Adapted(int steps, T fill) : field_(steps, fill) {}

  int steps() const { return field_.last_level(); }
  const T& operator[](Node n) const { return field_[n]; }
  T& operator[](Node n) { return field_[n]; }
  std::span<const T> level(int i) const { return field_.level(i); }
  std::span<T> level(int i) { return field_.level(i); }

  friend bool operator==(const Adapted&, const Adapted&) = default;

 private:
  LevelField<T> field_;
};

/// Predictable samples: the value attributed to time t_{i+1} is stored at node (i, j),
/// i.e. it is known one level ahead. Levels 0..N-1.
template <class T>
class Predictable {
 public:
  Predictable() = default;
  Predictable(int steps, T fill) : steps_(steps), field_(steps - 1, fill) {
    if (steps < 1) throw std::invalid_argument("Predictable: steps must be >= 1");
  }

  int steps() const { return steps_; }
  /// Value for time t_{n.level + 1}, measurable at node n.
  const T& for_step(Node n) const { return field_[n]; }
  T& for_step(Node n) { return field_[n]; }
  std::span<const T> level(int i) const { return field_.level(i); }
  std::span<T> level(int i) { return field_.level(i); }

  friend bool operator==(const Predictable&, const Predictable&) = default;

 private:
  int steps_ = 0;
  LevelField<T> field_;
};

using AdaptedProcess = Adapted<double>;
using PredictableProcess = Predictable<double>;
using ExtAdapted = Adapted<ExtReal>;
using ExtPredictable = Predictable<ExtReal>;

/// A lattice path; bit k set means an up-move on the step from level k to k+1.
class Path {
 public:
  Path(std::uint64_t bits, int length);

  int length() const { return length_; }
  std::uint64_t bits() const { return bits_; }
  bool up_at(int step) const { return (bits_ >> step) & 1U; }
  /// Node occupied at the given level.
  Node node_at(int level) const;

 private:
  std::uint64_t bits_;
  int length_;
};

/// Element of the class of nondecreasing processes starting at 0, purely atomic
/// on grid times. The atom at t_{i+1} is predictable: its weight is stored at
/// node (i, j).
class IncreasingProcess {
 public:
  IncreasingProcess() = default;
  explicit IncreasingProcess(int steps) : atoms_(steps, 0.0) {}
  /// Throws std::invalid_argument on negative or non-finite weights.
  explicit IncreasingProcess(PredictableProcess atoms);

  /// Atom of weight w at every grid time t_1..t_N (the Lebesgue measure discretized).
  static IncreasingProcess uniform(int steps, double weight);
  /// Deterministic atoms given as (time index in 1..N, weight).
  static IncreasingProcess from_atoms(int steps, std::span<const std::pair<int, double>> atoms);

  int steps() const { return atoms_.steps(); }
  /// Weight of the atom at t_{n.level + 1}, known at node n.
  double atom(Node n) const { return atoms_.for_step(n); }
  bool has_atom(Node n) const { return atoms_.for_step(n) > 0.0; }
  bool is_zero() const;
  const PredictableProcess& atoms() const { return atoms_; }

  /// rho_{t_0}, ..., rho_{t_N} along a path.
  std::vector<double> cumulative_along(const Path& path) const;

 private:
  PredictableProcess atoms_;
};

/// Recombining binomial model of Brownian motion: from node (i, j) the increment
/// is +sqrt(dt) (to (i+1, j+1)) or -sqrt(dt) (to (i+1, j)), each with probability 1/2.
class Lattice {
 public:
  explicit Lattice(TimeGrid grid) : grid_(grid) {}
  Lattice(double horizon, int steps) : grid_(horizon, steps) {}

  const TimeGrid& grid() const { return grid_; }
  int steps() const { return grid_.steps(); }
  double dt() const { return grid_.dt(); }
  double sqrt_dt() const { return grid_.sqrt_dt(); }
  double time(int level) const { return grid_.time(level); }

  /// B_{t_i} at node (i, j): (2j - i) sqrt(dt).
  double brownian(Node n) const { return (2.0 * n.index - n.level) * grid_.sqrt_dt(); }

  static constexpr Node up(Node n) { return {n.level + 1, n.index + 1}; }
  static constexpr Node down(Node n) { return {n.level + 1, n.index}; }

  /// Fills an adapted process from fn(node, t, B_t).
  template <class T, class Fn>
  Adapted<T> adapted(Fn&& fn) const {
    Adapted<T> out(steps(), T{});
    for (int i = 0; i <= steps(); ++i)
      for (int j = 0; j <= i; ++j) out[{i, j}] = fn(Node{i, j}, time(i), brownian({i, j}));
    return out;
  }

 private:
  TimeGrid grid_;
};

/// log of the probability that a path visits node n: log(C(i, j)) - i log 2.
double log_node_probability(Node n);

/// One-step expectation (X(i+1, j+1) + X(i+1, j)) / 2 at node (i, j).
double conditional_expectation(const AdaptedProcess& x, Node n);

/// Z with X(i+1, .) - E[X(i+1, .) | node] = Z * dB exactly on the binomial lattice.
double martingale_increment_coefficient(const Lattice& lattice, const AdaptedProcess& x, Node n);

/// Two-point forms used by the backward inductions.
inline double one_step_mean(double up, double down) { return (up + down) / 2.0; }
inline double one_step_z(double up, double down, double sqrt_dt) { return (up - down) / (2.0 * sqrt_dt); }

}  // namespace rbsde
