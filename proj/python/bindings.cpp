#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "rbsde/barriers.hpp"
#include "rbsde/cli.hpp"
#include "rbsde/oracle.hpp"
#include "rbsde/solver.hpp"
#include "rbsde/verify.hpp"

namespace py = pybind11;
using namespace rbsde;

namespace {

std::vector<std::vector<double>> levels(const AdaptedProcess& x) {
  std::vector<std::vector<double>> out;
  for (int i = 0; i <= x.steps(); ++i) out.emplace_back(x.level(i).begin(), x.level(i).end());
  return out;
}

std::vector<std::vector<double>> levels(const PredictableProcess& x) {
  std::vector<std::vector<double>> out;
  for (int i = 0; i < x.steps(); ++i) out.emplace_back(x.level(i).begin(), x.level(i).end());
  return out;
}

ExtAdapted ext_levels(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw std::invalid_argument("need at least two levels");
  const int n = static_cast<int>(rows.size()) - 1;
  ExtAdapted out(n, ExtReal(0.0));
  for (int i = 0; i <= n; ++i) {
    if (static_cast<int>(rows[i].size()) != i + 1) throw std::invalid_argument("level " + std::to_string(i) + " must have " + std::to_string(i + 1) + " values");
    for (int j = 0; j <= i; ++j) out[{i, j}] = ExtReal::from_double(rows[i][j]);
  }
  return out;
}

py::dict solve(const std::string& config, std::optional<int> depth) {
  const cli::Scenario s = cli::parse_scenario(config, depth);
  Solution sol;
  {
    py::gil_scoped_release release;
    sol = solve_rbsde(s.lattice, s.driver, *s.barriers);
  }
  py::dict d;
  d["config_hash"] = s.hash;
  d["y0"] = sol.y0();
  d["y"] = levels(sol.y);
  d["z"] = levels(sol.z);
  d["k_plus"] = levels(sol.k_plus.atoms());
  d["k_minus"] = levels(sol.k_minus.atoms());
  d["skorokhod_worst"] = sol.residuals.worst();
  return d;
}

py::tuple run(const std::string& subcommand, std::optional<std::string> config, const std::string& out,
              std::optional<int> depth, std::optional<std::size_t> cases, std::optional<std::uint64_t> seed,
              std::optional<double> tol, std::optional<double> schedule_max) {
  cli::RunOptions o{subcommand, std::move(config), out, depth, cases, seed, tol, schedule_max};
  std::ostringstream os, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::run(o, os, err);
  }
  return py::make_tuple(code, os.str(), err.str());
}

std::vector<double> envelope(const std::vector<double>& times, const std::vector<double>& values,
                             const std::vector<double>& atoms, std::optional<double> n) {
  std::vector<ExtReal> v;
  for (double x : values) v.push_back(ExtReal::from_double(x));
  const SampledFunction g{times, v, atoms};
  const EnvelopeResult r = n ? envelope_n(g, *n) : envelope_star(g);
  std::vector<double> out;
  for (const ExtReal& x : r.values) out.push_back(x.to_double());
  return out;
}

py::list suite(std::uint64_t seed, std::optional<int> depth, std::optional<std::size_t> cases) {
  verify::SuiteOptions o;
  o.seed = seed;
  o.depth = depth;
  o.cases = cases;
  std::vector<verify::CriterionResult> results;
  {
    py::gil_scoped_release release;
    results = verify::run_suite(o);
  }
  py::list out;
  for (const auto& r : results) {
    py::dict d;
    d["id"] = r.id;
    d["name"] = r.name;
    d["passed"] = r.passed;
    d["cases"] = r.cases;
    d["detail"] = r.detail;
    d["line"] = verify::format_line(r);
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_rbsde, m) {
  m.doc() = "Lattice solver and verification lab for doubly reflected BSDEs";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InfeasibleBarriers>(m, "InfeasibleBarriers", PyExc_ValueError);

  m.def("config_hash", [](const std::string& config) { return cli::parse_scenario(config).hash; }, py::arg("config"));
  m.def("solve", &solve, py::arg("config"), py::arg("depth") = py::none(),
        "Standard-form solve of a scenario given as JSON text.");
  m.def("run", &run, py::arg("subcommand"), py::arg("config") = py::none(), py::arg("out") = ".",
        py::arg("depth") = py::none(), py::arg("cases") = py::none(), py::arg("seed") = py::none(),
        py::arg("tol") = py::none(), py::arg("schedule_max") = py::none(),
        "Runs a CLI subcommand; returns (exit_code, stdout, stderr).");
  m.def("envelope", &envelope, py::arg("times"), py::arg("values"), py::arg("atoms"), py::arg("n") = py::none(),
        "Envelope transform along one path; n=None gives the limit.");
  m.def("quadratic_closed_form", [](double c, const std::vector<double>& xi) { return oracle::quadratic_closed_form(c, xi); },
        py::arg("c"), py::arg("terminal"));
  m.def("exhaustive_stopping_value",
        [](const std::vector<std::vector<double>>& lower, const std::vector<double>& xi) {
          return oracle::exhaustive_stopping_value(ext_levels(lower), xi);
        },
        py::arg("lower"), py::arg("terminal"));
  m.def("crr_american_put", &oracle::crr_american_put, py::arg("strike"), py::arg("spot"), py::arg("sigma"),
        py::arg("horizon"), py::arg("steps"));
  m.def("run_suite", &suite, py::arg("seed") = 7, py::arg("depth") = py::none(), py::arg("cases") = py::none());
}
