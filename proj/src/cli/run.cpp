#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "rbsde/cli.hpp"
#include "rbsde/penalize.hpp"
#include "rbsde/snell.hpp"
#include "rbsde/solver.hpp"
#include "rbsde/verify.hpp"

#ifndef RBSDE_VERSION
#define RBSDE_VERSION "0.0.0"
#endif

namespace rbsde::cli {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hash_line(const std::string& hash) { return "# config_hash=" + hash + "\n"; }

struct Output {
  std::filesystem::path dir;
  std::string hash;
  json artifacts = json::array();

  void write(const std::string& name, const std::string& content) {
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << content;
    artifacts.push_back({{"file", name}, {"config_hash", hash}});
  }
};

std::vector<double> doubling_schedule(double max_n) {
  std::vector<double> s{0.0};
  for (double n = 1.0; n <= max_n; n *= 2.0) s.push_back(n);
  return s;
}

const char* side_name(Orientation o) { return o == Orientation::lower ? "lower" : "upper"; }

int cmd_solve(const Scenario& sc, Output& out, json& summary, std::ostream& os, std::ostream& err) {
  const Solution sol = solve_rbsde(sc.lattice, sc.driver, *sc.barriers);
  out.write("solution.csv", solution_csv(sc.lattice, sol, sc.hash));
  summary["Y0"] = sol.y0();
  summary["skorokhod_worst"] = sol.residuals.worst();
  if (sc.bounds) {
    const AuditReport audit =
        audit_assumptions(sc.lattice, sc.driver, *sc.barriers, sc.witness ? &*sc.witness : nullptr);
    summary["audit"] = {{"probes", audit.probes},     {"violations", audit.violations.size()},
                        {"A1a", audit.count("A1a")}, {"A2a", audit.count("A2a")},
                        {"A2c", audit.count("A2c")}, {"A3", audit.count("A3")}};
    if (!audit.passed())
      err << "warning: assumption audit found " << audit.violations.size() << " violation(s), first "
          << audit.violations.front().check << " at " << to_string(audit.violations.front().node) << "\n";
  }
  os << "Y0 = " << num(sol.y0()) << "\n";
  return ExitCode::ok;
}

int cmd_penalize(const Scenario& sc, const RunOptions& opt, Output& out, json& summary, std::ostream& os,
                 std::ostream& err) {
  if (!sc.witness) throw ConfigError("penalize: the scenario needs a witness S");
  if (!sc.bounds) throw ConfigError("penalize: the scenario needs growth bounds");
  const double tol = opt.tol.value_or(sc.penalization.tol);
  const double schedule_max = opt.schedule_max.value_or(sc.penalization.schedule_max);
  const double n_max = std::max(sc.penalization.n_max, schedule_max);
  auto problem = std::make_shared<const PenalizationProblem>(sc.lattice, *sc.bounds, *sc.witness, *sc.barriers);
  PenalizedFamily family = penalized_family(problem, doubling_schedule(schedule_max));
  const SqueezeResult sq = squeeze_limits(family, tol, n_max, false);

  std::ostringstream table;
  table << hash_line(sc.hash) << "side,n,sup_gap,Y0\n";
  for (const auto& r : sq.table) table << side_name(r.side) << "," << num(r.n) << "," << num(r.sup_gap) << "," << num(r.y0) << "\n";
  out.write("convergence.csv", table.str());
  summary["n_final"] = sq.n_final;
  summary["gap_lower"] = sq.gap_lower;
  summary["gap_upper"] = sq.gap_upper;
  summary["converged"] = sq.converged;
  const SandwichReport sandwich = sandwich_check(family);
  summary["sandwich_worst"] = sandwich.worst;
  if (!sq.converged) {
    err << "error: penalization schedule exhausted at n = " << num(sq.n_final) << ", residual gap "
        << num(std::max(sq.gap_lower, sq.gap_upper)) << " > tol " << num(tol) << "\n";
    return ExitCode::numerical_failure;
  }

  ReductionOptions ro;
  ro.schedule = doubling_schedule(schedule_max);
  ro.tol = tol;
  ro.n_max = n_max;
  const ReductionResult r = reduce_and_solve(sc.lattice, sc.driver, *sc.barriers, *sc.bounds, *sc.witness, ro);
  out.write("solution.csv", solution_csv(sc.lattice, r.solution, sc.hash));
  std::ostringstream limits;
  limits << hash_line(sc.hash) << "level,node,t,S,Yunder,Ybar\n";
  const auto& s = problem->spec().values();
  for (int i = 0; i <= sc.lattice.steps(); ++i)
    for (int j = 0; j <= i; ++j)
      limits << i << "," << j << "," << num(sc.lattice.time(i)) << "," << num(s[{i, j}]) << ","
             << num(r.y_under[{i, j}]) << "," << num(r.y_bar[{i, j}]) << "\n";
  out.write("limits.csv", limits.str());
  summary["Y0"] = r.solution.y0();
  summary["Y0_standard_form"] = r.standard.y0();
  summary["Y0_gap"] = r.y0_gap;
  summary["limit_gap"] = r.limit_gap;
  summary["in_dom"] = r.in_dom;
  os << "Y0 = " << num(r.solution.y0()) << " (standard form " << num(r.standard.y0()) << ", gap " << num(r.y0_gap)
     << ")\n";
  if (!r.agrees(1e-6)) {
    err << "error: reduced and standard-form solutions disagree (gap " << num(r.y0_gap) << ", in Dom "
        << (r.in_dom ? "yes" : "no") << ")\n";
    return ExitCode::numerical_failure;
  }
  return ExitCode::ok;
}

int cmd_snell(const Scenario& sc, Output& out, json& summary, std::ostream& os, std::ostream& err) {
  if (sc.has_upper) throw ConfigError("snell: upper barriers U and u must be absent");
  const BarrierSet& b = *sc.barriers;
  SnellInstance inst{b.lower(), b.lower_predictable(), b.delta(), sc.terminal, sc.witness};
  if (!sc.witness) err << "warning: no witness M given; the hypothesis (A) audit is skipped\n";
  const Solution sol = snell_envelope(sc.lattice, inst);
  out.write("solution.csv", solution_csv(sc.lattice, sol, sc.hash));
  summary["Y0"] = sol.y0();
  summary["supermartingale_defect"] = supermartingale_defect(sol.y);
  os << "Y0 = " << num(sol.y0()) << "\n";
  return ExitCode::ok;
}

int cmd_envelope(const Scenario& sc, const RunOptions& opt, Output& out, json& summary, std::ostream& os) {
  const Lattice& lat = sc.lattice;
  const int n = lat.steps();
  const BarrierSet& b = *sc.barriers;
  std::vector<std::uint64_t> paths = sc.envelope_paths;
  if (paths.empty()) {
    if (n <= 12)
      for (std::uint64_t p = 0; p < (std::uint64_t{1} << n); ++p) paths.push_back(p);
    else
      paths = {0, (std::uint64_t{1} << n) - 1};
  }
  const std::vector<double> ns = doubling_schedule(opt.schedule_max.value_or(sc.penalization.schedule_max));
  std::ostringstream csv;
  csv << hash_line(sc.hash) << "side,path,level,t,n,value\n";
  std::vector<double> times(n), weights(n);
  std::vector<ExtReal> values(n);
  for (int k = 0; k < n; ++k) times[k] = lat.time(k + 1);
  std::size_t rows = 0;
  for (const char* side : {"lower", "upper"}) {
    const bool lower = side[0] == 'l';
    const IncreasingProcess& rho = lower ? b.delta() : b.alpha();
    if (rho.is_zero()) continue;
    for (std::uint64_t bits : paths) {
      const Path path(bits, n);
      for (int k = 0; k < n; ++k) {
        const Node node = path.node_at(k);
        weights[k] = rho.atom(node);
        values[k] = lower ? b.lower_predictable().for_step(node) : -b.upper_predictable().for_step(node);
      }
      const SampledFunction g{times, values, weights};
      auto emit = [&](const EnvelopeResult& e, const std::string& label) {
        for (int k = 0; k < n; ++k) {
          csv << side << "," << bits << "," << k + 1 << "," << num(times[k]) << "," << label << ","
              << to_string(e.values[k]) << "\n";
          ++rows;
        }
      };
      for (double m : ns) emit(envelope_n(g, m), num(m));
      emit(envelope_star(g), "inf");
    }
  }
  out.write("envelope.csv", csv.str());
  summary["rows"] = rows;
  summary["paths"] = paths.size();
  os << "envelope rows = " << rows << "\n";
  return ExitCode::ok;
}

int cmd_verify(const std::optional<Scenario>& sc, const RunOptions& opt, Output& out, json& summary,
               std::ostream& os) {
  verify::SuiteOptions so;
  so.seed = opt.seed.value_or(sc && sc->seed ? *sc->seed : 7);
  so.depth = opt.depth;
  so.cases = opt.cases;
  if (opt.tol) so.penalty_tol = *opt.tol;
  const auto results = verify::run_suite(so, &os);
  std::ostringstream csv;
  csv << hash_line(out.hash) << "id,name,passed,cases,detail\n";
  std::size_t failed = 0;
  json timings = json::object();
  for (const auto& r : results) {
    std::string detail = r.detail;
    for (char& c : detail)
      if (c == '"') c = '\'';
    csv << r.id << "," << '"' << r.name << '"' << "," << (r.passed ? 1 : 0) << "," << r.cases << ",\"" << detail
        << "\"\n";
    failed += r.passed ? 0 : 1;
    timings["C" + std::to_string(r.id)] = r.seconds;
  }
  out.write("verify.csv", csv.str());
  summary["seed"] = so.seed;
  summary["failed"] = failed;
  summary["criterion_seconds"] = timings;
  return failed == 0 ? ExitCode::ok : ExitCode::numerical_failure;
}

}  // namespace

std::string solution_csv(const Lattice& lattice, const Solution& s, const std::string& hash) {
  std::ostringstream os;
  os << hash_line(hash) << "level,node,t,Y,Z,dKplus,dKminus,L_eff,U_eff\n";
  const int n = lattice.steps();
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= i; ++j) {
      const Node node{i, j};
      os << i << "," << j << "," << num(lattice.time(i)) << "," << num(s.y[node]) << ",";
      if (i < n)
        os << num(s.z.for_step(node)) << "," << num(s.k_plus.atom(node)) << "," << num(s.k_minus.atom(node));
      else
        os << ",,";
      os << "," << to_string(s.lower[node]) << "," << to_string(s.upper[node]) << "\n";
    }
  return os.str();
}

int run(const RunOptions& opt, std::ostream& os, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  Output out{opt.out, "none", json::array()};
  json summary = json::object();
  int code = ExitCode::ok;
  std::optional<Scenario> sc;
  auto fail = [&](int c, const std::string& kind, const std::string& what) {
    err << "error: " << kind << ": " << what << "\n";
    summary["error"] = kind + ": " + what;
    return c;
  };
  try {
    if (opt.subcommand != "solve" && opt.subcommand != "penalize" && opt.subcommand != "snell" &&
        opt.subcommand != "envelope" && opt.subcommand != "verify")
      throw ConfigError("unknown subcommand \"" + opt.subcommand + "\"");
    if (opt.config) {
      sc = load_scenario(*opt.config, opt.subcommand == "verify" ? std::nullopt : opt.depth);
      out.hash = sc->hash;
    } else if (opt.subcommand != "verify") {
      throw ConfigError(opt.subcommand + " requires --config");
    }
    if (opt.subcommand == "solve") code = cmd_solve(*sc, out, summary, os, err);
    if (opt.subcommand == "penalize") code = cmd_penalize(*sc, opt, out, summary, os, err);
    if (opt.subcommand == "snell") code = cmd_snell(*sc, out, summary, os, err);
    if (opt.subcommand == "envelope") code = cmd_envelope(*sc, opt, out, summary, os);
    if (opt.subcommand == "verify") code = cmd_verify(sc, opt, out, summary, os);
  } catch (const ConfigError& e) {
    code = fail(ExitCode::config_error, "ConfigError", e.what());
  } catch (const DepthTooLarge& e) {
    code = fail(ExitCode::config_error, "DepthTooLarge", e.what());
  } catch (const InfeasibleBarriers& e) {
    code = fail(ExitCode::infeasible, "InfeasibleBarriers", e.what());
  } catch (const HypothesisAViolated& e) {
    code = fail(ExitCode::infeasible, "HypothesisAViolated", e.what());
  } catch (const ImplicitStepDivergence& e) {
    code = fail(ExitCode::numerical_failure, "ImplicitStepDivergence", e.what());
  } catch (const NonFiniteDriver& e) {
    code = fail(ExitCode::numerical_failure, "NonFiniteDriver", e.what());
  } catch (const ScheduleExhausted& e) {
    code = fail(ExitCode::numerical_failure, "ScheduleExhausted", e.what());
  } catch (const std::invalid_argument& e) {
    code = fail(ExitCode::config_error, "invalid argument", e.what());
  } catch (const std::exception& e) {
    code = fail(ExitCode::numerical_failure, "error", e.what());
  }

  if (code != ExitCode::config_error || opt.config) {
    try {
      json manifest = {{"schema", kManifestSchema},
                       {"subcommand", opt.subcommand},
                       {"config", opt.config ? json(*opt.config) : json(nullptr)},
                       {"config_hash", out.hash},
                       {"versions", {{"rbsde", RBSDE_VERSION}, {"compiler", __VERSION__}, {"cpp", __cplusplus}}},
                       {"exit_code", code},
                       {"artifacts", out.artifacts},
                       {"summary", summary}};
      manifest["options"] = {{"depth", opt.depth ? json(*opt.depth) : json(nullptr)},
                             {"cases", opt.cases ? json(*opt.cases) : json(nullptr)},
                             {"seed", opt.seed ? json(*opt.seed) : json(nullptr)},
                             {"tol", opt.tol ? json(*opt.tol) : json(nullptr)},
                             {"schedule_max", opt.schedule_max ? json(*opt.schedule_max) : json(nullptr)}};
      manifest["timings"] = {
          {"total_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
      std::filesystem::create_directories(out.dir);
      std::ofstream f(out.dir / "manifest.json");
      f << manifest.dump(2) << "\n";
    } catch (const std::exception& e) {
      err << "error: cannot write manifest: " << e.what() << "\n";
      if (code == ExitCode::ok) code = ExitCode::numerical_failure;
    }
  }
  return code;
}

}  // namespace rbsde::cli
