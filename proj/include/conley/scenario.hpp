#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "conley/domain.hpp"
#include "conley/field.hpp"
#include "conley/flow.hpp"
#include "conley/grid.hpp"

namespace conley {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PairSource { benci, radial_band, explicit_files };

struct PairSpec {
  PairSource source = PairSource::benci;
  double T = 0.5;                          // trapping window (benci)
  std::optional<std::vector<std::array<double, 2>>> box;  // benci sub-box; default whole domain
  double r_min = 0, r_max = 0;             // radial_band
  std::string n_cells, l_cells;            // explicit file paths
  double horizon = 6.0;                    // axiom-check horizon for non-benci pairs
};

struct DeformSpec {
  std::optional<double> a, b;     // band for the first deformation
  std::optional<double> c, eps0;  // critical level and slab for the second
  double T = 1.0;
  std::optional<double> u_radius;  // neighborhood halfwidth; default 1.5 cells

  void require_levels() const {
    if (!a || !b || !c || !eps0)
      throw ConfigError("deform check needs a, b, c and eps0 in the deform block");
  }
};

struct Tolerances {
  double grad_tol = 1e-10;
  double epsilon = 0.05;  // regularization threshold
  double t_cut = 20.0;    // quadrature truncation
  double horizon = 20.0;  // forward-core horizon
};

struct ScenarioConfig {
  std::string name;
  int dimension = 1;
  Domain domain;
  std::vector<int> resolution;
  std::string objective;
  GradientMode mode = GradientMode::raw;
  PairSpec pair;
  IntegratorConfig integrator;
  Tolerances tolerances;
  std::optional<DeformSpec> deform;
  long samples = 500;
  std::vector<std::string> checks = {"index-pair", "lyapunov", "cohomology",
                                     "deform",     "cover",    "bound"};

  double u_halfwidth(const CubicalGrid& g) const {
    if (deform && deform->u_radius) return *deform->u_radius;
    return 1.5 * g.max_cell_width();
  }
};

namespace detail {

inline void require_keys(const json& obj, const std::string& path,
                         const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key \"" + it.key() + "\" in " + path);
}

template <class T>
T get_req(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError("missing key \"" + key + "\" in " + path);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for \"" + key + "\" in " + path + ": " + e.what());
  }
}

template <class T>
T get_opt(const json& obj, const std::string& path, const std::string& key, T dflt) {
  if (!obj.contains(key)) return dflt;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for \"" + key + "\" in " + path + ": " + e.what());
  }
}

}  // namespace detail

inline ScenarioConfig scenario_from_json(const json& j) {
  using detail::get_opt;
  using detail::get_req;
  ScenarioConfig sc;
  detail::require_keys(j, "config", {"name", "dimension", "domain", "resolution", "objective",
                                     "gradient_mode", "pair", "integrator", "tolerances",
                                     "deform", "samples", "checks"});
  sc.name = get_req<std::string>(j, "config", "name");
  sc.dimension = get_req<int>(j, "config", "dimension");
  if (sc.dimension < 1 || sc.dimension > static_cast<int>(kMaxDim))
    throw ConfigError("dimension must be between 1 and 4");

  const json& dom = j.contains("domain") ? j.at("domain") : throw ConfigError("missing domain");
  detail::require_keys(dom, "domain", {"bounds", "periodic"});
  const auto bounds = get_req<std::vector<std::vector<double>>>(dom, "domain", "bounds");
  const auto periodic = get_req<std::vector<bool>>(dom, "domain", "periodic");
  if (static_cast<int>(bounds.size()) != sc.dimension ||
      static_cast<int>(periodic.size()) != sc.dimension)
    throw ConfigError("domain arrays must match the dimension");
  for (const auto& b : bounds) {
    if (b.size() != 2 || !(b[0] < b[1]))
      throw ConfigError("each bounds entry must be [lo, hi] with lo < hi");
    sc.domain.lo.push_back(b[0]);
    sc.domain.hi.push_back(b[1]);
  }
  for (bool p : periodic) sc.domain.periodic.push_back(p);

  sc.resolution = get_req<std::vector<int>>(j, "config", "resolution");
  if (static_cast<int>(sc.resolution.size()) != sc.dimension)
    throw ConfigError("resolution must have one entry per axis");
  for (int r : sc.resolution)
    if (r < 2) throw ConfigError("resolution must be >= 2 on every axis");

  sc.objective = get_req<std::string>(j, "config", "objective");
  const auto mode = get_opt<std::string>(j, "config", "gradient_mode", "normalized");
  if (mode == "normalized")
    sc.mode = GradientMode::normalized;
  else if (mode == "raw")
    sc.mode = GradientMode::raw;
  else
    throw ConfigError("gradient_mode must be \"normalized\" or \"raw\"");

  {
    const json& p = j.contains("pair") ? j.at("pair") : throw ConfigError("missing pair");
    detail::require_keys(
        p, "pair", {"source", "T", "box", "r_min", "r_max", "n_cells", "l_cells", "horizon"});
    const auto src = get_req<std::string>(p, "pair", "source");
    if (src == "benci") {
      sc.pair.source = PairSource::benci;
      sc.pair.T = get_req<double>(p, "pair", "T");
      if (!(sc.pair.T > 0)) throw ConfigError("pair.T must be positive");
      if (p.contains("box")) {
        const auto bx = get_req<std::vector<std::vector<double>>>(p, "pair", "box");
        if (static_cast<int>(bx.size()) != sc.dimension)
          throw ConfigError("pair.box must have one [lo, hi] per axis");
        sc.pair.box.emplace();
        for (const auto& b : bx) {
          if (b.size() != 2 || !(b[0] < b[1])) throw ConfigError("pair.box entries must be [lo, hi]");
          sc.pair.box->push_back({b[0], b[1]});
        }
      }
    } else if (src == "radial_band") {
      sc.pair.source = PairSource::radial_band;
      sc.pair.r_min = get_req<double>(p, "pair", "r_min");
      sc.pair.r_max = get_req<double>(p, "pair", "r_max");
      if (!(0 <= sc.pair.r_min && sc.pair.r_min < sc.pair.r_max))
        throw ConfigError("pair requires 0 <= r_min < r_max");
    } else if (src == "explicit") {
      sc.pair.source = PairSource::explicit_files;
      sc.pair.n_cells = get_req<std::string>(p, "pair", "n_cells");
      sc.pair.l_cells = get_req<std::string>(p, "pair", "l_cells");
      if (!std::ifstream(sc.pair.n_cells).good())
        throw ConfigError("pair.n_cells file not readable: " + sc.pair.n_cells);
      if (!std::ifstream(sc.pair.l_cells).good())
        throw ConfigError("pair.l_cells file not readable: " + sc.pair.l_cells);
    } else {
      throw ConfigError("pair.source must be \"benci\", \"radial_band\" or \"explicit\"");
    }
    sc.pair.horizon = get_opt<double>(p, "pair", "horizon", 6.0);
  }

  if (j.contains("integrator")) {
    const json& it = j.at("integrator");
    detail::require_keys(it, "integrator",
                         {"step", "t_max", "containment_stride", "safety_margin"});
    sc.integrator.step = get_opt<double>(it, "integrator", "step", 1e-3);
    sc.integrator.t_max = get_opt<double>(it, "integrator", "t_max", 40.0);
    sc.integrator.containment_stride = get_opt<int>(it, "integrator", "containment_stride", 1);
    sc.integrator.safety_margin = get_opt<bool>(it, "integrator", "safety_margin", false);
    sc.integrator.validate();
  }

  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    detail::require_keys(t, "tolerances", {"grad_tol", "epsilon", "t_cut", "horizon"});
    sc.tolerances.grad_tol = get_opt<double>(t, "tolerances", "grad_tol", 1e-10);
    sc.tolerances.epsilon = get_opt<double>(t, "tolerances", "epsilon", 0.05);
    sc.tolerances.t_cut = get_opt<double>(t, "tolerances", "t_cut", 20.0);
    sc.tolerances.horizon = get_opt<double>(t, "tolerances", "horizon", 20.0);
    if (!(sc.tolerances.epsilon > 0 && sc.tolerances.epsilon < 1))
      throw ConfigError("tolerances.epsilon must lie in (0, 1)");
  }

  if (j.contains("deform")) {
    const json& d = j.at("deform");
    detail::require_keys(d, "deform", {"a", "b", "c", "eps0", "T", "u_radius"});
    DeformSpec ds;
    if (d.contains("a")) ds.a = get_req<double>(d, "deform", "a");
    if (d.contains("b")) ds.b = get_req<double>(d, "deform", "b");
    if (d.contains("c")) ds.c = get_req<double>(d, "deform", "c");
    if (d.contains("eps0")) ds.eps0 = get_req<double>(d, "deform", "eps0");
    ds.T = get_opt<double>(d, "deform", "T", 1.0);
    if (d.contains("u_radius")) ds.u_radius = get_req<double>(d, "deform", "u_radius");
    sc.deform = ds;
  }

  sc.samples = get_opt<long>(j, "config", "samples", 500);
  if (sc.samples < 1) throw ConfigError("samples must be positive");
  if (j.contains("checks")) {
    sc.checks = get_req<std::vector<std::string>>(j, "config", "checks");
    static const std::set<std::string> known = {"index-pair", "lyapunov", "cohomology",
                                                "deform",     "cover",    "bound"};
    for (const auto& c : sc.checks)
      if (!known.count(c)) throw ConfigError("unknown check \"" + c + "\" in checks");
  }
  return sc;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

inline json scenario_echo(const ScenarioConfig& sc) {
  json j;
  j["name"] = sc.name;
  j["dimension"] = sc.dimension;
  json bounds = json::array(), periodic = json::array();
  for (std::size_t i = 0; i < sc.domain.dim(); ++i) {
    bounds.push_back({sc.domain.lo[i], sc.domain.hi[i]});
    periodic.push_back(static_cast<bool>(sc.domain.periodic[i]));
  }
  j["domain"] = {{"bounds", bounds}, {"periodic", periodic}};
  j["resolution"] = sc.resolution;
  j["objective"] = sc.objective;
  j["gradient_mode"] = sc.mode == GradientMode::raw ? "raw" : "normalized";
  switch (sc.pair.source) {
    case PairSource::benci:
      j["pair"] = {{"source", "benci"}, {"T", sc.pair.T}};
      break;
    case PairSource::radial_band:
      j["pair"] = {{"source", "radial_band"}, {"r_min", sc.pair.r_min}, {"r_max", sc.pair.r_max},
                   {"horizon", sc.pair.horizon}};
      break;
    case PairSource::explicit_files:
      j["pair"] = {{"source", "explicit"}, {"n_cells", sc.pair.n_cells},
                   {"l_cells", sc.pair.l_cells}, {"horizon", sc.pair.horizon}};
      break;
  }
  j["integrator"] = {{"step", sc.integrator.step}, {"t_max", sc.integrator.t_max}};
  j["tolerances"] = {{"grad_tol", sc.tolerances.grad_tol},
                     {"epsilon", sc.tolerances.epsilon},
                     {"t_cut", sc.tolerances.t_cut},
                     {"horizon", sc.tolerances.horizon}};
  if (sc.deform) {
    json d;
    if (sc.deform->a) d["a"] = *sc.deform->a;
    if (sc.deform->b) d["b"] = *sc.deform->b;
    if (sc.deform->c) d["c"] = *sc.deform->c;
    if (sc.deform->eps0) d["eps0"] = *sc.deform->eps0;
    d["T"] = sc.deform->T;
    if (sc.deform->u_radius) d["u_radius"] = *sc.deform->u_radius;
    j["deform"] = d;
  }
  j["samples"] = sc.samples;
  j["checks"] = sc.checks;
  return j;
}

// ---------------------------------------------------------------------------
// Built-in scenario catalog, so the test suites need no external files. The
// JSON here is the same shape a --config file uses.
// ---------------------------------------------------------------------------
inline const std::map<std::string, std::string>& catalog_sources() {
  static const std::map<std::string, std::string> cat = {
      {"repeller", R"JSON({
        "name": "repeller",
        "dimension": 1,
        "domain": {"bounds": [[-1.0, 1.0]], "periodic": [false]},
        "resolution": [256],
        "objective": "x0^2",
        "gradient_mode": "raw",
        "pair": {"source": "benci", "T": 0.34657359027997264},
        "integrator": {"step": 0.001, "t_max": 40.0},
        "tolerances": {"grad_tol": 1e-10, "epsilon": 0.05, "t_cut": 20.0, "horizon": 20.0},
        "deform": {"a": 0.04, "b": 0.16, "c": 0.0, "eps0": 0.04, "T": 1.0, "u_radius": 0.1},
        "samples": 500
      })JSON"},
      {"attractor", R"JSON({
        "name": "attractor",
        "dimension": 1,
        "domain": {"bounds": [[-1.0, 1.0]], "periodic": [false]},
        "resolution": [256],
        "objective": "-x0^2",
        "gradient_mode": "raw",
        "pair": {"source": "benci", "T": 0.34657359027997264},
        "integrator": {"step": 0.001, "t_max": 40.0},
        "tolerances": {"grad_tol": 1e-10, "epsilon": 0.05, "t_cut": 20.0, "horizon": 20.0},
        "deform": {"u_radius": 0.1},
        "samples": 500,
        "checks": ["index-pair", "lyapunov", "cohomology", "cover", "bound"]
      })JSON"},
      {"saddle", R"JSON({
        "name": "saddle",
        "dimension": 2,
        "domain": {"bounds": [[-1.0, 1.0], [-1.0, 1.0]], "periodic": [false, false]},
        "resolution": [48, 48],
        "objective": "x0^2 - x1^2",
        "gradient_mode": "raw",
        "pair": {"source": "benci", "T": 0.34657359027997264},
        "integrator": {"step": 0.001, "t_max": 40.0},
        "tolerances": {"grad_tol": 1e-10, "epsilon": 0.05, "t_cut": 20.0, "horizon": 20.0},
        "deform": {"u_radius": 0.1},
        "samples": 500,
        "checks": ["index-pair", "lyapunov", "cohomology", "cover", "bound"]
      })JSON"},
      {"torus", R"JSON({
        "name": "torus",
        "dimension": 2,
        "domain": {"bounds": [[0.0, 1.0], [0.0, 1.0]], "periodic": [true, true]},
        "resolution": [32, 32],
        "objective": "cos(2*pi*x0) + cos(2*pi*x1)",
        "gradient_mode": "normalized",
        "pair": {"source": "benci", "T": 0.5},
        "integrator": {"step": 0.001, "t_max": 40.0},
        "tolerances": {"grad_tol": 1e-10, "epsilon": 0.05, "t_cut": 20.0, "horizon": 20.0},
        "deform": {"u_radius": 0.1},
        "samples": 500,
        "checks": ["index-pair", "lyapunov", "cohomology", "cover", "bound"]
      })JSON"},
      {"annulus", R"JSON({
        "name": "annulus",
        "dimension": 2,
        "domain": {"bounds": [[-1.6, 1.6], [-1.6, 1.6]], "periodic": [false, false]},
        "resolution": [40, 40],
        "objective": "(x0^2 + x1^2 - 1)^2 + 0.1*x0",
        "gradient_mode": "raw",
        "pair": {"source": "radial_band", "r_min": 0.5, "r_max": 1.5, "horizon": 6.0},
        "integrator": {"step": 0.001, "t_max": 40.0},
        "tolerances": {"grad_tol": 1e-10, "epsilon": 0.05, "t_cut": 20.0, "horizon": 20.0},
        "deform": {"u_radius": 0.15},
        "samples": 500,
        "checks": ["index-pair", "lyapunov", "cohomology", "cover", "bound"]
      })JSON"},
  };
  return cat;
}

inline ScenarioConfig catalog_scenario(const std::string& name) {
  const auto& cat = catalog_sources();
  auto it = cat.find(name);
  if (it == cat.end()) {
    std::string names;
    for (const auto& [k, v] : cat) names += (names.empty() ? "" : ", ") + k;
    throw ConfigError("unknown catalog scenario \"" + name + "\" (have: " + names + ")");
  }
  return scenario_from_json(json::parse(it->second));
}

}  // namespace conley
