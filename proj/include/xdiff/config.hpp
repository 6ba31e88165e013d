#pragma once

// JSON run configuration: strict parsing (unknown keys are errors), dotted
// overrides and the resolved form written next to the outputs.

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "xdiff/errors.hpp"
#include "xdiff/integrate.hpp"

namespace xdiff {

using Json = nlohmann::json;

namespace detail {

// Reads the members of one JSON object, tracking which keys were consumed so
// that leftovers can be reported.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& require(const std::string& key) {
    const Json* v = find(key);
    if (!v) throw ConfigError(sub(key), "missing required key");
    return *v;
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const Json* v = find(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ConfigError(sub(key), "missing required key");
    }
    if (!v->is_number()) throw ConfigError(sub(key), "expected a number");
    return v->get<double>();
  }

  std::size_t count(const Json& v, const std::string& path) const {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(path, "expected a non-negative integer");
    return v.get<std::size_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(sub(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> fallback,
                     std::initializer_list<const char*> allowed) {
    const Json* v = find(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ConfigError(sub(key), "missing required key");
    }
    if (!v->is_string()) throw ConfigError(sub(key), "expected a string");
    std::string s = v->get<std::string>();
    for (const char* a : allowed)
      if (s == a) return s;
    std::string msg = "invalid value '" + s + "', expected one of:";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError(sub(key), msg);
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
    const Json* v = find(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ConfigError(sub(key), "missing required key");
    }
    if (!v->is_array()) throw ConfigError(sub(key), "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) throw ConfigError(sub(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(sub(it.key()), "unknown key");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Fn>
void guarded(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

inline SpeciesProfile parse_profile(const Json& j, const std::string& path, int dim) {
  ObjectReader r(j, path);
  SpeciesProfile p;
  p.baseline = r.number("baseline");
  p.amplitude = r.number("amplitude", 0.0);
  p.width = r.number("width", 1.0);
  const auto center = r.numbers("center", std::vector<double>(static_cast<std::size_t>(dim), 0.0));
  if (static_cast<int>(center.size()) != dim)
    throw ConfigError(r.sub("center"), "expected " + std::to_string(dim) + " coordinates");
  for (int a = 0; a < dim; ++a) p.center[a] = center[a];
  r.finish();
  return p;
}

}  // namespace detail

inline RunConfig parse_config(const Json& root) {
  detail::ObjectReader top(root, "");
  RunConfig cfg;

  {
    detail::ObjectReader g(top.require("grid"), "grid");
    const Json& dim_j = g.require("dim");
    const std::size_t dim = g.count(dim_j, "grid.dim");
    if (dim != 1 && dim != 2) throw ConfigError("grid.dim", "must be 1 or 2");
    const auto lengths = g.numbers("lengths", std::vector<double>(dim, 10.0));
    const Json& cells_j = g.require("cells");
    if (!cells_j.is_array()) throw ConfigError("grid.cells", "expected an array");
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < cells_j.size(); ++i)
      cells.push_back(g.count(cells_j[i], "grid.cells[" + std::to_string(i) + "]"));
    if (lengths.size() != dim) throw ConfigError("grid.lengths", "expected " + std::to_string(dim) + " entries");
    if (cells.size() != dim) throw ConfigError("grid.cells", "expected " + std::to_string(dim) + " entries");
    g.finish();
    detail::guarded("grid", [&] { cfg.grid = GridSpec(lengths, cells); });
  }

  {
    detail::ObjectReader p(top.require("params"), "params");
    const std::string scaling = p.string("scaling", "physical", {"physical", "scaled"});
    cfg.params.scaling = scaling == "scaled" ? Scaling::scaled : Scaling::physical;
    cfg.params.beta = p.number("beta", 0.5);
    cfg.params.c = p.number("c", 1.0);
    cfg.params.d0 = p.number("d0", cfg.params.scaling == Scaling::scaled ? 1.0 : 0.25);
    p.finish();
    detail::guarded("params", [&] { cfg.params.validate(); });
  }

  if (const Json* sj = top.find("stepper")) {
    detail::ObjectReader s(*sj, "stepper");
    cfg.stepper.scheme = s.string("scheme", "explicit", {"explicit", "imex"}) == "imex" ? Scheme::imex
                                                                                         : Scheme::explicit_euler;
    cfg.stepper.cfl_safety = s.number("cfl_safety", 0.4);
    cfg.stepper.dt_max = s.number("dt_max", 1.0);
    cfg.stepper.dt_init = s.number("dt_init", cfg.stepper.dt_max);
    cfg.stepper.tol_negative = s.number("tol_negative", 0.0);
    s.finish();
    detail::guarded("stepper", [&] { cfg.stepper.validate(); });
  }

  {
    detail::ObjectReader i(top.require("initial"), "initial");
    const std::string kind = i.string("kind", std::nullopt, {"uniform", "gaussian_bump", "two_gaussians_2d"});
    cfg.initial.kind = kind == "uniform"           ? InitialKind::uniform
                       : kind == "gaussian_bump" ? InitialKind::gaussian_bump
                                                 : InitialKind::two_gaussians_2d;
    cfg.initial.rho_a = detail::parse_profile(i.require("rho_a"), "initial.rho_a", cfg.grid.dim());
    cfg.initial.rho_b = detail::parse_profile(i.require("rho_b"), "initial.rho_b", cfg.grid.dim());
    i.finish();
    detail::guarded("initial", [&] { cfg.initial.validate(cfg.grid); });
  }

  {
    detail::ObjectReader r(top.require("run"), "run");
    cfg.t_end = r.number("t_end");
    cfg.output_every = r.number("output_every", cfg.t_end > 0.0 ? cfg.t_end : 1.0);
    cfg.snapshot_times = r.numbers("snapshot_times", std::vector<double>{});
    r.finish();
  }

  if (const Json* fj = top.find("full_model")) {
    detail::ObjectReader f(*fj, "full_model");
    cfg.full_model.enabled = f.boolean("enabled", false);
    cfg.full_model.epsilon = f.number("epsilon", 1.0);
    f.finish();
  }

  top.finish();
  detail::guarded("run", [&] { cfg.validate(); });
  return cfg;
}

/// The fully resolved configuration, defaults included.
inline Json to_json(const RunConfig& cfg) {
  Json grid;
  grid["dim"] = cfg.grid.dim();
  grid["lengths"] = Json::array();
  grid["cells"] = Json::array();
  for (int a = 0; a < cfg.grid.dim(); ++a) {
    grid["lengths"].push_back(cfg.grid.length(a));
    grid["cells"].push_back(cfg.grid.cells(a));
  }
  auto profile = [&](const SpeciesProfile& p) {
    Json j;
    j["baseline"] = p.baseline;
    j["amplitude"] = p.amplitude;
    j["width"] = p.width;
    j["center"] = Json::array();
    for (int a = 0; a < cfg.grid.dim(); ++a) j["center"].push_back(p.center[a]);
    return j;
  };
  Json j;
  j["grid"] = grid;
  j["params"] = {{"beta", cfg.params.beta}, {"c", cfg.params.c}, {"d0", cfg.params.d0},
                 {"scaling", to_string(cfg.params.scaling)}};
  j["stepper"] = {{"scheme", to_string(cfg.stepper.scheme)},
                  {"cfl_safety", cfg.stepper.cfl_safety},
                  {"dt_max", cfg.stepper.dt_max},
                  {"dt_init", cfg.stepper.dt_init},
                  {"tol_negative", cfg.stepper.tol_negative}};
  j["initial"] = {{"kind", to_string(cfg.initial.kind)}, {"rho_a", profile(cfg.initial.rho_a)},
                  {"rho_b", profile(cfg.initial.rho_b)}};
  j["run"] = {{"t_end", cfg.t_end}, {"output_every", cfg.output_every}, {"snapshot_times", cfg.snapshot_times}};
  j["full_model"] = {{"enabled", cfg.full_model.enabled}, {"epsilon", cfg.full_model.epsilon}};
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
}

/// Applies "a.b.c=value". The value is parsed as JSON when possible and taken
/// as a plain string otherwise.
inline void apply_override(Json& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError(std::string(assignment), "override must look like key.path=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const Json::parse_error&) {
    value = raw;
  }
  Json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string seg = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (seg.empty()) throw ConfigError(key, "empty path segment in override");
    const bool last = dot == std::string::npos;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(seg);
      } catch (const std::exception&) {
        throw ConfigError(key, "array index expected at '" + seg + "'");
      }
      if (idx >= node->size()) throw ConfigError(key, "array index out of range");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = Json::object();
      if (!node->is_object()) throw ConfigError(key, "cannot descend into a scalar at '" + seg + "'");
      node = &(*node)[seg];
    }
    if (last) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

}  // namespace xdiff
