#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rbsde/cli.hpp"

namespace rbsde::cli {

namespace {

using nlohmann::json;
using Generator = std::function<ExtReal(Node, double t, double b)>;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
}

double number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  throw ConfigError(where + ": expected a number");
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

ExtReal ext_number(const json& j, const std::string& where) {
  if (j.is_number()) return ExtReal(j.get<double>());
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return ExtReal::pos_inf();
    if (s == "-inf") return ExtReal::neg_inf();
  }
  throw ConfigError(where + ": expected a number, \"inf\" or \"-inf\"");
}

Generator generator(const json& j, const Lattice& lattice, const std::string& where) {
  if (j.is_number() || j.is_string()) {
    const ExtReal v = ext_number(j, where);
    return [v](Node, double, double) { return v; };
  }
  if (!j.is_object() || j.size() != 1) throw ConfigError(where + ": a generator is a number or a one-key object");
  const auto& [kind, body] = *j.items().begin();
  const std::string here = where + "." + kind;
  if (kind == "constant") {
    const ExtReal v = ext_number(body, here);
    return [v](Node, double, double) { return v; };
  }
  if (kind == "affine") {
    check_keys(body, {"a", "b", "c"}, here);
    const double a = number_or(body, "a", 0.0, here), b = number_or(body, "b", 0.0, here),
                 c = number_or(body, "c", 0.0, here);
    return [a, b, c](Node, double t, double w) { return ExtReal(a + b * t + c * w); };
  }
  if (kind == "table") {
    if (!body.is_array() || static_cast<int>(body.size()) != lattice.steps() + 1)
      throw ConfigError(here + ": expected " + std::to_string(lattice.steps() + 1) + " rows, one per level");
    ExtAdapted values(lattice.steps(), ExtReal(0.0));
    for (int i = 0; i <= lattice.steps(); ++i) {
      const auto& row = body.at(i);
      if (!row.is_array() || static_cast<int>(row.size()) != i + 1)
        throw ConfigError(here + ": row " + std::to_string(i) + " must have " + std::to_string(i + 1) + " entries");
      for (int k = 0; k <= i; ++k) values[{i, k}] = ext_number(row.at(k), here);
    }
    return [values](Node n, double, double) { return values[n]; };
  }
  if (kind == "put") {
    check_keys(body, {"strike", "spot", "sigma", "discount"}, here);
    const double strike = number(body.at("strike"), here + ".strike");
    const double spot = number(body.at("spot"), here + ".spot");
    const double sigma = number(body.at("sigma"), here + ".sigma");
    const bool discount = body.value("discount", true);
    const double rate = std::log(std::cosh(sigma * lattice.sqrt_dt())) / lattice.dt();
    return [=](Node, double t, double w) {
      const double payoff = std::max(strike - spot * std::exp(sigma * w), 0.0);
      return ExtReal(discount ? std::exp(-rate * t) * payoff : payoff);
    };
  }
  throw ConfigError(where + ": unknown generator \"" + kind + "\"");
}

ExtAdapted sample(const Generator& g, const Lattice& lattice) {
  return lattice.adapted<ExtReal>([&](Node n, double t, double b) { return g(n, t, b); });
}

AdaptedProcess sample_finite(const Generator& g, const Lattice& lattice, const std::string& where) {
  return lattice.adapted<double>([&](Node n, double t, double b) {
    const ExtReal v = g(n, t, b);
    if (!v.finite()) throw ConfigError(where + ": must be finite, got " + to_string(v) + " at " + to_string(n));
    return v.value();
  });
}

struct AtomList {
  IncreasingProcess measure;
  ExtPredictable values;
};

// [index k in 1..N, weight] or [k, weight, value]; the value is read with the
// Brownian state of level k-1 and the time t_k.
AtomList atoms(const json& j, const Lattice& lattice, bool with_values, ExtReal fill, const std::string& where) {
  const int n = lattice.steps();
  if (!j.is_array()) throw ConfigError(where + ": expected a list of atoms");
  PredictableProcess w(n, 0.0);
  ExtPredictable v(n, fill);
  std::set<int> seen;
  for (std::size_t a = 0; a < j.size(); ++a) {
    const auto& atom = j.at(a);
    const std::string here = where + "[" + std::to_string(a) + "]";
    const std::size_t want = with_values ? 3 : 2;
    if (!atom.is_array() || atom.size() != want)
      throw ConfigError(here + ": expected [index, weight" + std::string(with_values ? ", value]" : "]"));
    if (!atom.at(0).is_number_integer()) throw ConfigError(here + ": index must be an integer");
    const int k = atom.at(0).get<int>();
    if (k < 1 || k > n) throw ConfigError(here + ": index " + std::to_string(k) + " outside 1.." + std::to_string(n));
    if (!seen.insert(k).second) throw ConfigError(here + ": duplicate atom at index " + std::to_string(k));
    const double weight = number(atom.at(1), here);
    if (!(weight >= 0.0) || !std::isfinite(weight)) throw ConfigError(here + ": weight must be finite and >= 0");
    const Generator g = with_values ? generator(atom.at(2), lattice, here) : Generator{};
    for (int jj = 0; jj < k; ++jj) {
      const Node node{k - 1, jj};
      w.for_step(node) = weight;
      if (with_values) v.for_step(node) = g(node, lattice.time(k), lattice.brownian(node));
    }
  }
  return {IncreasingProcess(std::move(w)), std::move(v)};
}

std::function<double(double)> phi_function(const json& j, const std::string& where) {
  if (j.is_number()) {
    const double c = j.get<double>();
    return [c](double) { return c; };
  }
  check_keys(j, {"affine"}, where);
  const auto& body = j.at("affine");
  check_keys(body, {"a", "b"}, where + ".affine");
  const double a = number_or(body, "a", 1.0, where), b = number_or(body, "b", 0.0, where);
  return [a, b](double x) { return a + b * x; };
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Scenario parse_scenario(const std::string& text, std::optional<int> depth_override) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    check_keys(root, {"schema", "grid", "driver", "growth", "terminal", "barriers", "measures", "witness",
                      "penalization", "outputs", "seed"},
               "config");
    if (!root.contains("schema") || root.at("schema") != kScenarioSchema)
      throw ConfigError(std::string("config: schema must be \"") + kScenarioSchema + "\"");

    Scenario s;
    if (!root.contains("grid")) throw ConfigError("config: missing grid");
    const auto& grid = root.at("grid");
    check_keys(grid, {"T", "steps"}, "grid");
    if (!grid.contains("steps") || !grid.at("steps").is_number_integer())
      throw ConfigError("grid.steps: expected an integer");
    const double horizon = number_or(grid, "T", 1.0, "grid");
    const int steps = depth_override.value_or(grid.at("steps").get<int>());
    try {
      s.lattice = Lattice(horizon, steps);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
    const Lattice& lat = s.lattice;
    const int n = lat.steps();
    root["grid"]["steps"] = n;
    s.canonical = root.dump();
    s.hash = fnv1a_hex(s.canonical);

    if (!root.contains("terminal")) throw ConfigError("config: missing terminal");
    {
      const AdaptedProcess xi = sample_finite(generator(root.at("terminal"), lat, "terminal"), lat, "terminal");
      s.terminal.assign(xi.level(n).begin(), xi.level(n).end());
    }

    IncreasingProcess measure_a(n);
    if (root.contains("measures")) {
      const auto& m = root.at("measures");
      check_keys(m, {"A"}, "measures");
      if (m.contains("A")) measure_a = atoms(m.at("A"), lat, false, ExtReal(0.0), "measures.A").measure;
    }

    // Driver.
    const json driver = root.value("driver", json{{"name", "zero"}});
    check_keys(driver, {"name", "params", "g"}, "driver");
    s.driver_name = driver.value("name", "zero");
    const json params = driver.value("params", json::object());
    const std::string dp = "driver.params";
    if (s.driver_name == "zero") {
      check_keys(params, {}, dp);
      s.driver = drivers::zero();
    } else if (s.driver_name == "linear") {
      check_keys(params, {"a", "b", "c"}, dp);
      s.driver = drivers::linear(number_or(params, "a", 0.0, dp), number_or(params, "b", 0.0, dp),
                                 number_or(params, "c", 0.0, dp));
    } else if (s.driver_name == "quadratic") {
      check_keys(params, {"c", "scheme"}, dp);
      const double c = number_or(params, "c", 0.0, dp);
      const std::string scheme = params.value("scheme", "exponential");
      if (scheme == "exponential")
        s.driver = drivers::quadratic(c);
      else if (scheme == "euler")
        s.driver = drivers::quadratic_euler(c);
      else
        throw ConfigError(dp + ".scheme: expected \"exponential\" or \"euler\"");
    } else if (s.driver_name == "tabulated") {
      check_keys(params, {"h"}, dp);
      if (!params.contains("h")) throw ConfigError(dp + ": missing h");
      s.driver = drivers::tabulated(sample_finite(generator(params.at("h"), lat, dp + ".h"), lat, dp + ".h"));
    } else {
      throw ConfigError("driver.name: unknown driver \"" + s.driver_name + "\"");
    }
    if (driver.contains("g")) {
      const auto& g = driver.at("g");
      check_keys(g, {"name", "params"}, "driver.g");
      if (g.value("name", "linear") != "linear") throw ConfigError("driver.g.name: only \"linear\" is available");
      const json gp = g.value("params", json::object());
      check_keys(gp, {"x", "y", "c"}, "driver.g.params");
      if (measure_a.is_zero()) throw ConfigError("driver.g: requires atoms in measures.A");
      s.driver = drivers::with_measure(s.driver, measure_a,
                                       drivers::g_linear(number_or(gp, "x", 0.0, "driver.g.params"),
                                                         number_or(gp, "y", 0.0, "driver.g.params"),
                                                         number_or(gp, "c", 0.0, "driver.g.params")));
    }

    // Barriers.
    ExtAdapted lower(n, ExtReal::neg_inf()), upper(n, ExtReal::pos_inf());
    AtomList l{IncreasingProcess(n), ExtPredictable(n, ExtReal::neg_inf())};
    AtomList u{IncreasingProcess(n), ExtPredictable(n, ExtReal::pos_inf())};
    if (root.contains("barriers")) {
      const auto& b = root.at("barriers");
      check_keys(b, {"L", "U", "l", "u"}, "barriers");
      if (b.contains("L")) lower = sample(generator(b.at("L"), lat, "barriers.L"), lat);
      if (b.contains("U")) upper = sample(generator(b.at("U"), lat, "barriers.U"), lat);
      if (b.contains("l")) l = atoms(b.at("l"), lat, true, ExtReal::neg_inf(), "barriers.l");
      if (b.contains("u")) u = atoms(b.at("u"), lat, true, ExtReal::pos_inf(), "barriers.u");
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        if (upper[{i, j}].finite()) s.has_upper = true;
        if (u.measure.has_atom({i, j}) && u.values.for_step({i, j}).finite()) s.has_upper = true;
      }
    s.barriers.emplace(lower, upper, l.values, l.measure, u.values, u.measure, s.terminal);

    // Growth bounds.
    if (root.contains("growth")) {
      const auto& g = root.at("growth");
      if (g.contains("phi")) {
        check_keys(g, {"phi", "eta_tilde", "C_tilde", "eta_hat"}, "growth");
        const auto gen = [&](const char* key) {
          return g.contains(key) ? sample_finite(generator(g.at(key), lat, std::string("growth.") + key), lat,
                                                 std::string("growth.") + key)
                                 : AdaptedProcess(n, 0.0);
        };
        try {
          s.bounds = dominate_growth(phi_function(g.at("phi"), "growth.phi"), gen("eta_tilde"), gen("C_tilde"),
                                     gen("eta_hat"), lower, upper, measure_a);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("growth: ") + e.what());
        } catch (const NonMonotonePhi& e) {
          throw ConfigError(std::string("growth.phi: ") + e.what());
        }
      } else {
        check_keys(g, {"eta", "C", "beta"}, "growth");
        const auto gen = [&](const char* key) {
          return g.contains(key) ? sample_finite(generator(g.at(key), lat, std::string("growth.") + key), lat,
                                                 std::string("growth.") + key)
                                 : AdaptedProcess(n, 0.0);
        };
        s.bounds = GrowthBounds{gen("eta"), gen("C"), gen("beta"), measure_a, {}};
      }
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= i; ++j)
          if (s.bounds->eta[{i, j}] < 0.0 || s.bounds->beta[{i, j}] < 0.0)
            throw ConfigError("growth: eta and beta must be >= 0 at " + to_string(Node{i, j}));
      s.driver = s.driver.with_bounds(*s.bounds);
    }

    // Witness.
    if (root.contains("witness")) {
      const auto& w = root.at("witness");
      try {
        if (w.contains("S")) {
          check_keys(w, {"S"}, "witness");
          s.witness = SemimartingaleSpec::from_values(lat, sample_finite(generator(w.at("S"), lat, "witness.S"), lat,
                                                                         "witness.S"));
        } else {
          check_keys(w, {"S0", "Vplus", "Vminus", "gamma"}, "witness");
          const double s0 = number_or(w, "S0", 0.0, "witness");
          IncreasingProcess vp =
              w.contains("Vplus") ? atoms(w.at("Vplus"), lat, false, ExtReal(0.0), "witness.Vplus").measure
                                  : IncreasingProcess(n);
          IncreasingProcess vm =
              w.contains("Vminus") ? atoms(w.at("Vminus"), lat, false, ExtReal(0.0), "witness.Vminus").measure
                                   : IncreasingProcess(n);
          PredictableProcess gamma(n, 0.0);
          if (w.contains("gamma")) {
            const Generator g = generator(w.at("gamma"), lat, "witness.gamma");
            for (int i = 0; i < n; ++i)
              for (int j = 0; j <= i; ++j) {
                const ExtReal v = g({i, j}, lat.time(i), lat.brownian({i, j}));
                if (!v.finite()) throw ConfigError("witness.gamma: must be finite");
                gamma.for_step({i, j}) = v.value();
              }
          }
          s.witness = SemimartingaleSpec::from_components(lat, s0, vp, vm, gamma);
        }
      } catch (const NonRecombiningWitness& e) {
        throw ConfigError(std::string("witness: ") + e.what());
      }
    }

    if (root.contains("penalization")) {
      const auto& p = root.at("penalization");
      check_keys(p, {"schedule_max", "tol", "n_max"}, "penalization");
      s.penalization.schedule_max = number_or(p, "schedule_max", s.penalization.schedule_max, "penalization");
      s.penalization.tol = number_or(p, "tol", s.penalization.tol, "penalization");
      s.penalization.n_max = number_or(p, "n_max", s.penalization.n_max, "penalization");
      if (!(s.penalization.tol > 0.0) || !(s.penalization.schedule_max >= 1.0) ||
          !(s.penalization.n_max >= s.penalization.schedule_max))
        throw ConfigError("penalization: need tol > 0 and 1 <= schedule_max <= n_max");
    }
    if (root.contains("outputs")) {
      const auto& o = root.at("outputs");
      check_keys(o, {"paths"}, "outputs");
      if (o.contains("paths")) {
        if (!o.at("paths").is_array()) throw ConfigError("outputs.paths: expected a list of path indices");
        for (const auto& p : o.at("paths")) {
          if (!p.is_number_unsigned()) throw ConfigError("outputs.paths: path indices are nonnegative integers");
          const auto bits = p.get<std::uint64_t>();
          if (n < 64 && bits >> n) throw ConfigError("outputs.paths: path index beyond 2^steps");
          s.envelope_paths.push_back(bits);
        }
      }
    }
    if (root.contains("seed")) {
      if (!root.at("seed").is_number_unsigned()) throw ConfigError("seed: expected a nonnegative integer");
      s.seed = root.at("seed").get<std::uint64_t>();
    }
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path, std::optional<int> depth_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), depth_override);
}

}  // namespace rbsde::cli
