#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace rbsde {

/// Lattice node: level i (time t_i) and index j = number of up-moves, 0 <= j <= i.
struct Node {
  int level = 0;
  int index = 0;
  friend constexpr bool operator==(Node, Node) = default;
};

std::string to_string(Node n);

/// Base of every domain error. Carries the first failing node when there is one.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, std::optional<Node> node = std::nullopt);
  const std::optional<Node>& node() const { return node_; }

 private:
  std::optional<Node> node_;
};

class InfeasibleBarriers : public Error {
 public:
  using Error::Error;
};

class ImplicitStepDivergence : public Error {
 public:
  using Error::Error;
};

class NonFiniteDriver : public Error {
 public:
  using Error::Error;
};

class ScheduleExhausted : public Error {
 public:
  ScheduleExhausted(const std::string& what, double residual_gap)
      : Error(what), residual_gap_(residual_gap) {}
  double residual_gap() const { return residual_gap_; }

 private:
  double residual_gap_;
};

class HypothesisAViolated : public Error {
 public:
  using Error::Error;
};

class NonMonotonePhi : public Error {
 public:
  using Error::Error;
};

class DepthTooLarge : public Error {
 public:
  using Error::Error;
};

/// A (S0, V+, V-, gamma) witness whose forward reconstruction does not recombine.
class NonRecombiningWitness : public Error {
 public:
  using Error::Error;
};

}  // namespace rbsde
