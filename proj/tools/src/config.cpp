#include "config.hpp"

#include <boost/uuid/detail/sha1.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fracac/geometry.hpp"
#include "fracac/params.hpp"
#include "json.hpp"

namespace fracac::cli {

using nlohmann::json;

namespace {

void allow(const json& obj, const std::string& where, const std::set<std::string>& keys) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!keys.count(it.key())) throw ConfigError("unknown key " + (where.empty() ? "" : where + ".") + it.key());
}

std::string path_of(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

double number(const json& obj, const std::string& where, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path_of(where, key) + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path_of(where, key) + ": must be finite");
  return x;
}

std::string text(const json& obj, const std::string& where, const std::string& key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(path_of(where, key) + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& obj, const std::string& where, const std::string& key) {
  std::vector<double> out;
  if (!obj.contains(key)) return out;
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(path_of(where, key) + ": expected an array of numbers");
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(path_of(where, key) + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Point point(const json& obj, const std::string& where, const std::string& key, Point fallback) {
  if (!obj.contains(key)) return fallback;
  const auto v = numbers(obj, where, key);
  if (v.empty() || v.size() > 2) throw ConfigError(path_of(where, key) + ": expected 1 or 2 coordinates");
  return {v[0], v.size() > 1 ? v[1] : 0.0};
}

std::vector<Point> points(const json& obj, const std::string& where, const std::string& key) {
  std::vector<Point> out;
  if (!obj.contains(key)) return out;
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(path_of(where, key) + ": expected an array of points");
  for (std::size_t i = 0; i < v.size(); ++i) {
    json wrap = {{"p", v[i]}};
    out.push_back(point(wrap, path_of(where, key) + "[" + std::to_string(i) + "]", "p", {0, 0}));
  }
  return out;
}

RegionSpec region(const json& obj, const std::string& where) {
  allow(obj, where, {"shape", "lo", "hi", "center", "radius", "half_side"});
  RegionSpec r;
  r.shape = text(obj, where, "shape", "interval");
  r.lo = point(obj, where, "lo", r.lo);
  r.hi = point(obj, where, "hi", r.hi);
  r.center = point(obj, where, "center", r.center);
  r.radius = number(obj, where, "radius", r.radius);
  r.half_side = number(obj, where, "half_side", r.half_side);
  if (r.shape != "interval" && r.shape != "box" && r.shape != "square" && r.shape != "disc")
    throw ConfigError(where + ".shape: unknown shape '" + r.shape + "'");
  return r;
}

DataSpec data(const json& obj, const std::string& where, bool forcing) {
  allow(obj, where, {"kind", "normal", "offset", "value", "slope"});
  DataSpec d;
  d.kind = text(obj, where, "kind", "zero");
  d.normal = point(obj, where, "normal", d.normal);
  d.offset = number(obj, where, "offset", 0.0);
  d.value = number(obj, where, "value", 0.0);
  d.slope = point(obj, where, "slope", d.slope);
  const std::set<std::string> g_kinds{"zero", "constant", "sign", "cross"};
  const std::set<std::string> f_kinds{"zero", "constant", "linear"};
  if (!(forcing ? f_kinds : g_kinds).count(d.kind)) throw ConfigError(where + ".kind: unknown kind '" + d.kind + "'");
  return d;
}

SetSpec set_spec(const json& obj, const std::string& where) {
  allow(obj, where, {"name", "normal", "offset", "lo", "hi", "center", "radius", "path", "far"});
  SetSpec s;
  s.name = text(obj, where, "name", "");
  s.normal = point(obj, where, "normal", s.normal);
  s.offset = number(obj, where, "offset", 0.0);
  s.lo = point(obj, where, "lo", s.lo);
  s.hi = point(obj, where, "hi", s.hi);
  s.center = point(obj, where, "center", s.center);
  s.radius = number(obj, where, "radius", s.radius);
  s.path = text(obj, where, "path", "");
  s.far = text(obj, where, "far", s.far);
  const std::set<std::string> names{"half-line", "half-space", "interval", "box", "ball", "cross", "empty", "whole", "csv"};
  if (!names.count(s.name)) throw ConfigError("unknown set name '" + s.name + "'");
  if (s.name == "csv" && s.path.empty()) throw ConfigError(where + ".path: required for csv sets");
  return s;
}

FieldSpec field_spec(const json& obj, const std::string& where) {
  allow(obj, where, {"kind", "center", "radius", "direction"});
  FieldSpec f;
  f.kind = text(obj, where, "kind", f.kind);
  f.center = point(obj, where, "center", f.center);
  f.radius = number(obj, where, "radius", f.radius);
  f.direction = point(obj, where, "direction", f.direction);
  if (f.kind != "translation" && f.kind != "dilation") throw ConfigError(where + ".kind: unknown field kind");
  if (!(f.radius > 0.0)) throw ConfigError(where + ".radius: must be positive");
  return f;
}

void check_physics(const ExperimentConfig& c) {
  // The module invariants, checked through the library constructors.
  try {
    make_params(c.dim, c.s, 1.0);
    for (double e : c.eps_list) make_params(c.dim, c.s, e);
    if (c.eps) make_params(c.dim, c.s, *c.eps);
    make_params(c.dim, c.s_prime, 1.0);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto well = make_prototype_well();
  if (!verify_structural_assumptions(well, -3.0, 3.0, 4001).all_pass())
    throw ConfigError("physics.potential: structural assumptions fail");
}

}  // namespace

Omega RegionSpec::omega(int dim) const {
  try {
    if (shape == "interval") return Omega::interval(lo[0], hi[0]);
    if (shape == "box") return Omega::box(lo, hi);
    if (shape == "square") return Omega::square(half_side);
    if (shape == "disc") return Omega::disc(center, radius);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("region: ") + e.what());
  }
  (void)dim;
  throw ConfigError("region: unknown shape '" + shape + "'");
}

std::string sha1_hex(const std::string& data) {
  boost::uuids::detail::sha1 h;
  h.process_bytes(data.data(), data.size());
  unsigned int d[5];
  h.get_digest(d);
  char buf[41];
  for (int i = 0; i < 5; ++i) std::snprintf(buf + 8 * i, 9, "%08x", d[i]);
  return std::string(buf, 40);
}

ExperimentConfig parse_config(const std::string& src) {
  json j;
  try {
    j = json::parse(src);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  allow(j, "", {"grid", "physics", "solver", "diagnostics", "geometry", "output"});
  ExperimentConfig c;

  const json empty = json::object();
  const json& grid = j.contains("grid") ? j.at("grid") : empty;
  allow(grid, "grid", {"dim", "h", "offset", "omega", "r_trunc"});
  const double dim = number(grid, "grid", "dim", 1.0);
  if (dim != 1.0 && dim != 2.0) throw ConfigError("grid.dim: must be 1 or 2");
  c.dim = static_cast<int>(dim);
  c.h = number(grid, "grid", "h", c.h);
  if (!(c.h > 0.0)) throw ConfigError("grid.h: must be positive");
  c.offset = number(grid, "grid", "offset", 0.0);
  if (c.offset != 0.0 && c.offset != 0.5) throw ConfigError("grid.offset: must be 0 or 0.5");
  if (grid.contains("omega")) c.omega = region(grid.at("omega"), "grid.omega");
  else if (c.dim == 2) c.omega.shape = "square";
  c.r_trunc = number(grid, "grid", "r_trunc", c.r_trunc);

  const json& phys = j.contains("physics") ? j.at("physics") : empty;
  allow(phys, "physics", {"s", "eps", "eps_list", "potential", "g", "f", "gamma_override"});
  c.s = number(phys, "physics", "s", c.s);
  if (phys.contains("eps")) c.eps = number(phys, "physics", "eps", 0.0);
  if (phys.contains("eps_list")) c.eps_list = numbers(phys, "physics", "eps_list");
  if (phys.contains("potential")) {
    const auto& pot = phys.at("potential");
    allow(pot, "physics.potential", {"name"});
    c.potential = text(pot, "physics.potential", "name", "prototype");
    if (c.potential != "prototype") throw ConfigError("physics.potential.name: unknown potential '" + c.potential + "'");
  }
  if (phys.contains("g")) c.g = data(phys.at("g"), "physics.g", false);
  if (phys.contains("f")) c.f = data(phys.at("f"), "physics.f", true);
  if (phys.contains("gamma_override")) c.gamma_override = number(phys, "physics", "gamma_override", 0.0);

  const json& sol = j.contains("solver") ? j.at("solver") : empty;
  allow(sol, "solver", {"tol", "max_iters", "init", "mollify_cells"});
  c.tol = number(sol, "solver", "tol", c.tol);
  if (!(c.tol > 0.0)) throw ConfigError("solver.tol: must be positive");
  const double mi = number(sol, "solver", "max_iters", static_cast<double>(c.max_iters));
  if (!(mi >= 1.0) || mi != std::floor(mi)) throw ConfigError("solver.max_iters: must be a positive integer");
  c.max_iters = static_cast<std::size_t>(mi);
  c.init = text(sol, "solver", "init", c.init);
  if (c.init != "from-g" && c.init != "mollified") throw ConfigError("solver.init: must be from-g or mollified");
  c.mollify_cells = number(sol, "solver", "mollify_cells", c.mollify_cells);

  const json& dg = j.contains("diagnostics") ? j.at("diagnostics") : empty;
  allow(dg, "diagnostics", {"radii", "centers", "omega_prime", "levels", "K", "transition_radii", "drift_constant",
                            "lambda"});
  c.radii = numbers(dg, "diagnostics", "radii");
  c.centers = points(dg, "diagnostics", "centers");
  if (dg.contains("omega_prime")) c.omega_prime = region(dg.at("omega_prime"), "diagnostics.omega_prime");
  if (dg.contains("levels")) c.levels = numbers(dg, "diagnostics", "levels");
  for (double t : c.levels)
    if (!(t > -1.0 && t < 1.0)) throw ConfigError("diagnostics.levels: each level must lie in (-1, 1)");
  if (dg.contains("K")) c.k = region(dg.at("K"), "diagnostics.K");
  c.transition_radii = numbers(dg, "diagnostics", "transition_radii");
  c.drift_constant = number(dg, "diagnostics", "drift_constant", 0.0);
  c.lambda = number(dg, "diagnostics", "lambda", 1.0);
  if (!(c.lambda > 0.0)) throw ConfigError("diagnostics.lambda: must be positive");

  const json& geo = j.contains("geometry") ? j.at("geometry") : empty;
  allow(geo, "geometry", {"set", "s_prime", "points", "fields", "variation_steps", "apex"});
  if (geo.contains("set")) c.set = set_spec(geo.at("set"), "geometry.set");
  c.s_prime = number(geo, "geometry", "s_prime", c.s);
  c.points = points(geo, "geometry", "points");
  if (geo.contains("fields")) {
    const auto& fs = geo.at("fields");
    if (!fs.is_array()) throw ConfigError("geometry.fields: expected an array");
    for (std::size_t i = 0; i < fs.size(); ++i)
      c.fields.push_back(field_spec(fs[i], "geometry.fields[" + std::to_string(i) + "]"));
  }
  c.variation_steps = number(geo, "geometry", "variation_steps", c.variation_steps);
  c.apex = point(geo, "geometry", "apex", c.apex);

  if (j.contains("output")) allow(j.at("output"), "output", {"formats"});

  check_physics(c);
  c.canonical = j.dump();
  c.hash = sha1_hex(c.canonical);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

GridPtr make_grid(const ExperimentConfig& c, double h_scale) {
  try {
    return build_grid(c.dim, c.h * h_scale, c.omega.omega(c.dim), c.r_trunc, data_tail(c.g, c.dim), c.offset);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

FarField data_tail(const DataSpec& d, int dim) {
  if (d.kind == "sign") {
    if (dim == 1) {
      const double sg = d.normal[0] >= 0 ? 1.0 : -1.0;
      if (d.offset != 0.0) return FarField::half_space({d.normal[0], 0.0}, d.offset);
      return FarField::sides(-sg, sg);
    }
    return FarField::half_space(d.normal, d.offset);
  }
  if (d.kind == "cross") return FarField::cross();
  if (d.kind == "constant") return FarField::constant(d.value);
  return FarField::constant(0.0);
}

ScalarField make_g(const ExperimentConfig& c, GridPtr g) {
  const auto& d = c.g;
  const int n = g->dim();
  auto v = ScalarField::from_function(g, [&](const Point& x) {
    if (d.kind == "constant") return d.value;
    if (d.kind == "zero") return 0.0;
    double t = 0.0;
    if (d.kind == "sign") t = d.normal[0] * x[0] + (n == 2 ? d.normal[1] * x[1] : 0.0) - d.offset;
    else t = x[0] * x[1];
    return t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0);
  });
  v.tail = data_tail(d, n);
  return v;
}

ScalarField make_f(const ExperimentConfig& c, GridPtr g) {
  const auto& d = c.f;
  auto v = ScalarField::from_function(g, [&](const Point& x) {
    if (d.kind == "constant") return d.value;
    if (d.kind == "linear") return d.value + d.slope[0] * x[0] + d.slope[1] * x[1];
    return 0.0;
  });
  for (std::size_t i = 0; i < g->size(); ++i)
    if (!g->is_interior(i)) v.values[i] = 0.0;
  v.tail = FarField::constant(0.0);
  return v;
}

FractionalParams make_physics(const ExperimentConfig& c, double eps) {
  FractionalParams p;
  try {
    p = make_params(c.dim, c.s, eps);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.gamma_override) p.gamma_ns = *c.gamma_override;
  return p;
}

DoubleWell make_potential(const ExperimentConfig&) { return make_prototype_well(); }

ProblemSpec make_spec(const ExperimentConfig& c, GridPtr g, double eps) {
  try {
    return make_problem(g, make_physics(c, eps), make_potential(c), make_g(c, g), make_f(c, g));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
}

IndicatorSet make_set(const SetSpec& s, GridPtr g) {
  try {
    if (s.name == "half-line" || s.name == "half-space") return half_space_set(g, s.normal, s.offset);
    if (s.name == "interval" || s.name == "box") return box_set(g, s.lo, s.hi);
    if (s.name == "ball") return ball_set(g, s.center, s.radius);
    if (s.name == "cross") return cross_set(g);
    if (s.name == "empty") return empty_set(g);
    if (s.name == "whole") return whole_set(g);
    std::ifstream in(s.path);
    if (!in) throw ConfigError("cannot read set file '" + s.path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    FarField far = FarField::constant(-1.0);
    if (s.far == "constant-in") far = FarField::constant(1.0);
    else if (s.far == "half-space") far = FarField::half_space(s.normal, s.offset);
    else if (s.far == "cross") far = FarField::cross();
    else if (s.far != "constant-out") throw ConfigError("geometry.set.far: unknown far field '" + s.far + "'");
    return set_from_csv(g, ss.str(), far);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("geometry.set: ") + e.what());
  }
}

IndicatorSet limit_set(const ExperimentConfig& c, GridPtr g) {
  const auto& d = c.g;
  if (d.kind == "sign") return half_space_set(g, c.dim == 1 ? Point{d.normal[0], 0.0} : d.normal, d.offset);
  if (d.kind == "cross") return cross_set(g);
  return d.value > 0 ? whole_set(g) : empty_set(g);
}

}  // namespace fracac::cli
