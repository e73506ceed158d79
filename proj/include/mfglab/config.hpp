#pragma once

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfglab/equilibrium.hpp"
#include "mfglab/errors.hpp"
#include "mfglab/geometry.hpp"
#include "mfglab/model.hpp"

namespace mfglab {

struct RunConfig {
  int schema_version = 1;
  std::string name;
  Scenario scenario;
  ParticleMeasure m0;
  EquilibriumOptions fp;
  double solver_tol = 1e-8;
  std::vector<std::string> panels;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  nlohmann::json canonical;  // re-serializable normal form
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void cfg_fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) cfg_fail(path + "." + key, "missing field");
  return j.at(key);
}

inline double require_pos(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number() || !(v.get<double>() > 0.0))
    cfg_fail(path + "." + key, "must be a positive number");
  return v.get<double>();
}

inline Vec parse_vec(const json& j, int dim, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    cfg_fail(path, "expected an array of length " + std::to_string(dim));
  return dim == 1 ? Vec(j[0].get<double>()) : Vec(j[0].get<double>(), j[1].get<double>());
}

inline Domain parse_domain(const json& j) {
  std::string kind = require(j, "kind", "domain").get<std::string>();
  if (kind == "interval") {
    double a = require(j, "a", "domain").get<double>();
    double b = require(j, "b", "domain").get<double>();
    if (!(a < b)) cfg_fail("domain.a", "requires a < b");
    return Domain::interval(a, b);
  }
  if (kind == "disk")
    return Domain::disk(parse_vec(require(j, "center", "domain"), 2, "domain.center"),
                        require_pos(j, "radius", "domain"));
  if (kind == "ellipse")
    return Domain::ellipse(parse_vec(require(j, "center", "domain"), 2, "domain.center"),
                           parse_vec(require(j, "semi_axes", "domain"), 2,
                                     "domain.semi_axes"));
  cfg_fail("domain.kind", "unknown kind '" + kind + "'");
}

inline ScalarField parse_scalar_field(const json& j, int dim, const std::string& path) {
  // Accepts "zero", "linear:a=[...]", or an object form.
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "zero") return ScalarField::zero(dim);
    if (s.rfind("linear:a=", 0) == 0) {
      json arr = json::parse(s.substr(9), nullptr, false);
      if (arr.is_discarded()) cfg_fail(path, "bad linear slope syntax");
      return ScalarField::linear(parse_vec(arr, dim, path));
    }
    cfg_fail(path, "unknown field shorthand '" + s + "'");
  }
  std::string kind = require(j, "kind", path).get<std::string>();
  if (kind == "zero") return ScalarField::zero(dim);
  if (kind == "linear")
    return ScalarField::linear(parse_vec(require(j, "a", path), dim, path + ".a"));
  if (kind == "quadratic_well")
    return ScalarField::quadratic_well(
        require_pos(j, "strength", path),
        parse_vec(require(j, "center", path), dim, path + ".center"));
  cfg_fail(path + ".kind", "unknown kind '" + kind + "'");
}

inline LagrangianSpec parse_lagrangian(const json& j, int dim) {
  std::string kind = require(j, "kind", "model.lagrangian").get<std::string>();
  ScalarField pot = j.contains("potential")
                        ? parse_scalar_field(j.at("potential"), dim,
                                             "model.lagrangian.potential")
                        : ScalarField::zero(dim);
  if (kind == "quadratic") return LagrangianSpec::quadratic(dim, pot);
  if (kind == "drift_quadratic") {
    Vec b = parse_vec(require(j, "drift", "model.lagrangian"), dim,
                      "model.lagrangian.drift");
    return LagrangianSpec::drift_quadratic(dim, VectorField::constant(b), pot);
  }
  cfg_fail("model.lagrangian.kind", "unknown kind '" + kind + "'");
}

inline Coupling parse_coupling(const json& j, int dim) {
  std::string form = require(j, "form", "model.coupling").get<std::string>();
  if (form == "zero") return Coupling::zero();
  if (form == "kernel")
    return Coupling::kernel(dim, require_pos(j, "sigma", "model.coupling"));
  cfg_fail("model.coupling.form", "unknown form '" + form + "'");
}

inline ParticleMeasure parse_m0(const json& j, const Domain& dom, bool have_seed) {
  std::string kind = require(j, "kind", "m0").get<std::string>();
  ParticleMeasure m;
  if (kind == "list") {
    const json& pts = require(j, "points", "m0");
    if (!pts.is_array() || pts.empty()) cfg_fail("m0.points", "non-empty array required");
    std::vector<Vec> v;
    for (const auto& p : pts) v.push_back(parse_vec(p, dom.dim(), "m0.points[]"));
    m = ParticleMeasure::uniform(std::move(v));
  } else if (kind == "grid") {
    int count = static_cast<int>(require_pos(j, "count", "m0"));
    std::vector<Vec> v;
    if (dom.dim() == 1) {
      double a = dom.interval_a(), b = dom.interval_b();
      for (int i = 0; i < count; ++i)
        v.push_back(Vec(a + (b - a) * (i + 0.5) / count));
    } else {
      // Concentric grid filling the 2D domain.
      int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
      Vec c = dom.center();
      double half = 0.5 * dom.diameter();
      for (int i = 0; i < side && static_cast<int>(v.size()) < count; ++i)
        for (int k = 0; k < side && static_cast<int>(v.size()) < count; ++k) {
          Vec p(c[0] + half * (2.0 * (i + 0.5) / side - 1.0),
                c[1] + half * (2.0 * (k + 0.5) / side - 1.0));
          if (contains(dom, p, -1e-6)) v.push_back(p);
        }
      if (v.empty()) cfg_fail("m0.count", "grid produced no interior points");
    }
    m = ParticleMeasure::uniform(std::move(v));
  } else if (kind == "uniform_random") {
    if (!have_seed) cfg_fail("seed", "mandatory when m0 is sampled");
    int count = static_cast<int>(require_pos(j, "count", "m0"));
    std::mt19937_64 rng(require(j, "seed", "m0").get<std::uint64_t>());
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Vec> v;
    while (static_cast<int>(v.size()) < count) {
      Vec p;
      if (dom.dim() == 1) {
        p = Vec(dom.interval_a() +
                (dom.interval_b() - dom.interval_a()) * uni(rng));
      } else {
        Vec c = dom.center();
        double half = 0.5 * dom.diameter();
        p = Vec(c[0] + half * (2.0 * uni(rng) - 1.0), c[1] + half * (2.0 * uni(rng) - 1.0));
      }
      if (contains(dom, p, -1e-9)) v.push_back(p);
    }
    m = ParticleMeasure::uniform(std::move(v));
  } else {
    cfg_fail("m0.kind", "unknown kind '" + kind + "'");
  }
  m.validate(dom);
  return m;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::cfg_fail;
  using detail::require;
  RunConfig cfg;
  cfg.schema_version = require(j, "schema_version", "").get<int>();
  if (cfg.schema_version != 1) cfg_fail("schema_version", "unsupported version");
  cfg.name = j.value("name", std::string("unnamed"));

  cfg.scenario.dom = detail::parse_domain(require(j, "domain", ""));
  int dim = cfg.scenario.dom.dim();

  const auto& model = require(j, "model", "");
  cfg.scenario.lagrangian = detail::parse_lagrangian(
      require(model, "lagrangian", "model"), dim);
  cfg.scenario.coupling = detail::parse_coupling(require(model, "coupling", "model"), dim);
  cfg.scenario.terminal =
      detail::parse_scalar_field(require(model, "terminal", "model"), dim,
                                 "model.terminal");
  cfg.scenario.terminal_coupling = model.value("terminal_coupling", false);

  const auto& time = require(j, "time", "");
  cfg.scenario.T = detail::require_pos(time, "T", "time");
  int nodes = require(time, "nodes", "time").get<int>();
  if (nodes < 2) cfg_fail("time.nodes", "must be >= 2");
  cfg.scenario.time_nodes = nodes;

  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.m0 = detail::parse_m0(require(j, "m0", ""), cfg.scenario.dom, j.contains("seed"));

  if (j.contains("solver"))
    cfg.solver_tol = detail::require_pos(j.at("solver"), "tol", "solver");

  cfg.fp.seed = cfg.seed;
  cfg.fp.solver_tol = cfg.solver_tol;
  if (j.contains("fixed_point")) {
    const auto& fp = j.at("fixed_point");
    cfg.fp.tol = detail::require_pos(fp, "tol", "fixed_point");
    cfg.fp.max_iters = static_cast<int>(detail::require_pos(fp, "k_max", "fixed_point"));
    if (fp.contains("coupling_paths"))
      cfg.fp.coupling_paths = fp.at("coupling_paths").get<std::size_t>();
    if (fp.contains("max_paths")) cfg.fp.max_paths = fp.at("max_paths").get<std::size_t>();
    std::string init = fp.value("init", std::string("stationary"));
    if (init == "stationary")
      cfg.fp.init = EquilibriumOptions::Init::Stationary;
    else if (init == "free_flow")
      cfg.fp.init = EquilibriumOptions::Init::FreeFlow;
    else
      cfg_fail("fixed_point.init", "must be 'stationary' or 'free_flow'");
  }

  if (j.contains("panels")) {
    for (const auto& p : j.at("panels")) cfg.panels.push_back(p.get<std::string>());
  } else {
    cfg.panels = {"hjb", "continuity", "lambda-plus"};
  }
  cfg.output_dir = j.value("output_dir", std::string("out"));

  // Canonical normal form for round-trip checks.
  nlohmann::json canon = j;
  canon["schema_version"] = cfg.schema_version;
  canon["seed"] = cfg.seed;
  canon["panels"] = cfg.panels;
  canon["output_dir"] = cfg.output_dir;
  cfg.canonical = canon;
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON: " + path);
  return parse_config(j);
}

}  // namespace mfglab
