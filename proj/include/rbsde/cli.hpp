#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rbsde/barriers.hpp"
#include "rbsde/drivers.hpp"
#include "rbsde/errors.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/solver.hpp"

namespace rbsde::cli {

inline constexpr const char* kScenarioSchema = "rbsde-scenario/1";
inline constexpr const char* kManifestSchema = "rbsde-manifest/1";

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct PenalizationSettings {
  double schedule_max = 65536.0;  // largest n of the initial doubling schedule
  double tol = 1e-8;
  double n_max = 1099511627776.0;
};

struct Scenario {
  std::string canonical;  // canonical JSON text
  std::string hash;       // FNV-1a 64 of `canonical`, hex
  Lattice lattice{1.0, 1};
  Driver driver;
  std::string driver_name;
  std::optional<GrowthBounds> bounds;
  std::vector<double> terminal;
  std::optional<BarrierSet> barriers;
  bool has_upper = false;  // any finite U or u atom
  std::optional<SemimartingaleSpec> witness;
  PenalizationSettings penalization;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> envelope_paths;  // outputs.paths, empty = default
};

/// FNV-1a 64-bit, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& text);

/// Parses a scenario; unknown keys and schema mismatches raise ConfigError.
/// depth_override replaces grid.steps.
Scenario parse_scenario(const std::string& json_text, std::optional<int> depth_override = std::nullopt);
Scenario load_scenario(const std::string& path, std::optional<int> depth_override = std::nullopt);

struct RunOptions {
  std::string subcommand;  // solve | penalize | snell | envelope | verify
  std::optional<std::string> config;
  std::string out = ".";
  std::optional<int> depth;
  std::optional<std::size_t> cases;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<double> schedule_max;
};

enum ExitCode : int { ok = 0, config_error = 1, infeasible = 2, numerical_failure = 3 };

/// Runs one subcommand, writing CSV artifacts and manifest.json under options.out.
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

/// CSV text of a solution with the fixed columns.
std::string solution_csv(const Lattice& lattice, const Solution& s, const std::string& hash);

}  // namespace rbsde::cli
