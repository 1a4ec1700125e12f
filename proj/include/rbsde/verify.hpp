#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rbsde/barriers.hpp"
#include "rbsde/drivers.hpp"
#include "rbsde/lattice.hpp"

namespace rbsde::verify {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

AdaptedProcess random_adapted(int steps, Rng& rng, double lo, double hi);
std::vector<double> random_terminal(int steps, Rng& rng, double lo, double hi);

enum class DriverKind { zero, linear, quadratic };

/// A two-sided problem with witness S in Dom, finite rcll barriers around S,
/// predictable barriers on random atoms, and a driver satisfying its growth bounds.
struct TwoSidedInstance {
  Lattice lattice;
  std::vector<double> terminal;
  SemimartingaleSpec spec;
  BarrierSet barriers;
  GrowthBounds bounds;
  Driver driver;
};

TwoSidedInstance random_two_sided(Rng& rng, int depth, DriverKind kind, bool with_measure = true);

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::size_t cases = 0;
  std::string detail;
  double seconds = 0.0;
};

std::string format_line(const CriterionResult& r);

struct SuiteOptions {
  std::uint64_t seed = 7;
  std::optional<int> depth;           // caps the depth of depth-bounded random criteria
  std::optional<std::size_t> cases;   // overrides every case count
  double penalty_tol = 1e-8;
};

CriterionResult envelope_scan(std::uint64_t seed, std::size_t cases = 1000, int max_points = 200);
CriterionResult left_constraint_equivalence(std::uint64_t seed, std::size_t cases = 1000, int max_depth = 8);
CriterionResult snell_vs_oracles(std::uint64_t seed, std::size_t cases = 100, int max_depth = 4);
CriterionResult dynkin_identification(std::uint64_t seed, std::size_t cases = 100, int max_depth = 4);
CriterionResult quadratic_closed_form(std::uint64_t seed, std::size_t cases_per_cell = 3);
CriterionResult penalization_sandwich(std::uint64_t seed, std::size_t cases = 100, int max_depth = 8);
CriterionResult equivalence_reduction(std::uint64_t seed, std::size_t cases = 50, int depth = 8,
                                      double penalty_tol = 1e-8);
/// Reads the process-wide solve statistics; run it after the other criteria.
CriterionResult skorokhod_certificates();
CriterionResult comparison_pairs(std::uint64_t seed, std::size_t cases = 200, int max_depth = 8);
CriterionResult budget_identity(std::uint64_t seed, std::size_t cases = 20, int depth = 12);

/// All ten criteria in order, one line per criterion written to `log` as each finishes.
std::vector<CriterionResult> run_suite(const SuiteOptions& options, std::ostream* log = nullptr);

}  // namespace rbsde::verify
