#include "commands.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "config.hpp"
#include "fracac/diagnostics.hpp"
#include "fracac/extension.hpp"
#include "fracac/fractional.hpp"
#include "fracac/geometry.hpp"
#include "fracac/parallel.hpp"
#include "fracac/summation.hpp"

#ifndef FRACAC_VERSION
#define FRACAC_VERSION "0.0.0"
#endif

namespace fracac::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// Advisory lock on <out>/.fracac.lock, held for the lifetime of the object.
class DirLock {
public:
  explicit DirLock(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
    fd_ = ::open((dir / ".fracac.lock").c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0) throw ConfigError("cannot open lock file in '" + dir.string() + "'");
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw ConfigError("output directory '" + dir.string() + "' is locked by another run");
    }
  }
  ~DirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

private:
  int fd_ = -1;
};

class CsvFile {
public:
  CsvFile(const fs::path& path, const std::string& command, const ExperimentConfig& c, const std::string& columns)
      : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot write '" + path.string() + "'");
    out_ << "# fracac " << FRACAC_VERSION << "\n# command " << command << "\n# config-sha1 " << c.hash << "\n"
         << columns << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }
  void kv(const std::string& key, const std::string& value) { row({key, value}); }
  void kv(const std::string& key, double value) { row({key, num(value)}); }

private:
  std::ofstream out_;
};

double bump(double x) { return std::abs(x) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0; }

VectorFieldX make_field(const FieldSpec& f, GridPtr g) {
  const int n = g->dim();
  return VectorFieldX::from_function(g, [=](const Point& y) {
    const double dx = y[0] - f.center[0], dy = n == 2 ? y[1] - f.center[1] : 0.0;
    const double b = bump(std::hypot(dx, dy) / f.radius);
    if (f.kind == "dilation") return Point{dx * b, dy * b};
    return Point{f.direction[0] * b, n == 2 ? f.direction[1] * b : 0.0};
  });
}

std::vector<FieldSpec> default_fields(int dim) {
  std::vector<FieldSpec> out;
  if (dim == 1) {
    for (double dir : {1.0, -1.0}) out.push_back({"translation", {0, 0}, 0.5, {dir, 0}});
    out.push_back({"dilation", {0, 0}, 0.5, {1, 0}});
    return out;
  }
  for (Point c : {Point{0, 0}, Point{0.3, 0.1}, Point{-0.2, 0.35}})
    for (Point dir : {Point{1, 0}, Point{0, 1}, Point{0.6, -0.8}}) out.push_back({"translation", c, 0.55, dir});
  return out;
}

SolverOptions solver_options(const ExperimentConfig& c) {
  SolverOptions o;
  o.tol = c.tol;
  o.max_iters = c.max_iters;
  o.mollify_cells = c.init == "mollified" ? c.mollify_cells : 0.0;
  return o;
}

double single_eps(const ExperimentConfig& c) {
  if (c.eps) return *c.eps;
  if (c.eps_list.size() == 1) return c.eps_list[0];
  throw ConfigError("physics.eps: solve needs a single eps");
}

Mask region_mask(const GridSpec& g, const std::optional<RegionSpec>& r) {
  return r ? g.mask_of(r->omega(g.dim())) : g.interior_mask();
}

std::vector<std::string> coords(const GridSpec& g, std::size_t node) {
  const auto x = g.point(node);
  if (g.dim() == 1) return {num(x[0])};
  return {num(x[0]), num(x[1])};
}

std::string coord_columns(int dim) { return dim == 1 ? "x" : "x,y"; }

void write_solution(const fs::path& path, const std::string& command, const ExperimentConfig& c,
                    const ScalarField& v, const ProblemSpec& spec) {
  const GridSpec& g = *spec.grid;
  const auto& nodes = g.interior_nodes();
  const auto lap = frac_laplacian(v, nodes, spec.params);
  const double scale = std::pow(spec.params.eps, -2.0 * spec.params.s);
  CsvFile out(path, command, c, coord_columns(g.dim()) + ",v,W,residual");
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::size_t i = nodes[k];
    auto row = coords(g, i);
    const double res = lap[k] + scale * spec.well.Wp(v[i]) - spec.f[i];
    row.push_back(num(v[i]));
    row.push_back(num(spec.well.W(v[i])));
    row.push_back(num(std::abs(res)));
    out.row(row);
  }
}

void report_solve(CsvFile& out, const SolveReport& r, double tol) {
  out.kv("converged", r.converged ? "true" : "false");
  out.kv("iterations", static_cast<double>(r.iterations));
  out.kv("rejected_steps", static_cast<double>(r.rejected_steps));
  out.kv("final_residual", r.final_residual);
  out.kv("tol", tol);
  out.kv("residual_above_tol", r.final_residual > tol ? "true" : "false");
  out.kv("energy_dirichlet", r.energy_terms.dirichlet);
  out.kv("energy_potential", r.energy_terms.potential);
  out.kv("energy_forcing", r.energy_terms.forcing);
  out.kv("energy_total", r.energy_terms.total);
  out.kv("tau_initial", r.tau_initial);
  out.kv("tau_final", r.tau_final);
  out.kv("C_h", r.C_h);
  out.kv("L_W", r.L_W);
  out.kv("max_principle_bound", r.max_principle.bound);
  out.kv("max_abs_v", r.max_principle.max_abs);
  out.kv("max_principle_margin", r.max_principle.margin);
  out.kv("max_principle", r.max_principle.pass ? "pass" : "fail");
  out.kv("message", r.message);
}

// Exterior nodes are pinned to g; their values are not part of the solution file.
SolveResult solve_one(const ExperimentConfig& c, const ProblemSpec& spec) {
  return minimize(spec, std::nullopt, solver_options(c));
}

std::vector<double> geometric(double lo, double hi, int count) {
  std::vector<double> r;
  for (int i = 0; i < count; ++i) r.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
  return r;
}

}  // namespace

int cmd_solve(const RunOptions& o, std::ostream& log) {
  const auto c = load_config(o.config);
  const double eps = single_eps(c);
  const DirLock lock(o.out);
  const auto g = make_grid(c);
  const auto spec = make_spec(c, g, eps);
  const auto res = solve_one(c, spec);
  const fs::path dir(o.out);
  write_solution(dir / "solution.csv", "solve", c, res.v, spec);
  CsvFile rep(dir / "report.csv", "solve", c, "key,value");
  rep.kv("eps", eps);
  rep.kv("h", g->h());
  rep.kv("interior_nodes", static_cast<double>(g->interior_count()));
  report_solve(rep, res.report, c.tol);
  log << "solve: " << (res.report.converged ? "converged" : "not converged") << " after " << res.report.iterations
      << " iterations, residual " << num(res.report.final_residual) << "\n";
  return res.report.converged ? Ok : NotConverged;
}

int cmd_sweep(const RunOptions& o, std::ostream& log) {
  const auto c = load_config(o.config);
  if (c.eps_list.empty()) throw ConfigError("physics.eps_list: empty; sweep needs at least 4 values");
  if (c.eps_list.size() < 4) throw ConfigError("physics.eps_list: sweep needs at least 4 values");
  const DirLock lock(o.out);
  const fs::path dir(o.out);
  const auto g = make_grid(c);
  const Mask omega_prime = region_mask(*g, c.omega_prime);
  const Mask kmask = c.k ? g->mask_of(c.k->omega(c.dim)) : omega_prime;
  const auto e_star = limit_set(c, g);
  const auto p_target = make_physics(c, 1.0);
  const double target = 2.0 * p_target.gamma_ns * perimeter_P2s(e_star, omega_prime, c.s);

  std::vector<double> eps = c.eps_list;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  std::vector<std::string> warnings;
  for (double e : eps)
    if (g->h() > 0.5 * e) warnings.push_back("interface under-resolved: h = " + num(g->h()) + " > eps/2 at eps = " + num(e));

  std::vector<SweepEntry> sweep;
  std::vector<SolveReport> reports;
  std::vector<double> energies, sum_w;
  bool all_converged = true;
  DoubleWell well = make_potential(c);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const auto spec = make_spec(c, g, eps[i]);
    auto res = solve_one(c, spec);
    all_converged = all_converged && res.report.converged;
    write_solution(dir / ("solution_" + std::to_string(i) + ".csv"), "sweep", c, res.v, spec);
    energies.push_back(energy_E(res.v, omega_prime, spec.params));
    std::vector<double> w;
    for (std::size_t k = 0; k < g->size(); ++k)
      if (omega_prime[k]) w.push_back(well.W(res.v[k]) * g->cell_volume());
    sum_w.push_back(pairwise_sum(w));
    log << "sweep: eps " << num(eps[i]) << (res.report.converged ? " converged" : " not converged") << " ("
        << res.report.iterations << " iterations)\n";
    reports.push_back(res.report);
    sweep.push_back({eps[i], std::move(res.v)});
  }

  std::vector<std::vector<LevelSetDistance>> dists;
  for (double t : c.levels) dists.push_back(level_set_convergence(sweep, t, e_star, kmask));

  std::string cols = "eps,energy,target,rel_gap,sum_W,iterations,converged,residual";
  for (double t : c.levels) cols += ",d_" + num(t);
  CsvFile table(dir / "sweep.csv", "sweep", c, cols);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    std::vector<std::string> row{num(eps[i]), num(energies[i]), num(target),
                                 num(std::abs(energies[i] - target) / target), num(sum_w[i]),
                                 std::to_string(reports[i].iterations), reports[i].converged ? "1" : "0",
                                 num(reports[i].final_residual)};
    for (const auto& d : dists) row.push_back(num(d[i].max()));
    table.row(row);
  }

  CsvFile rep(dir / "report.csv", "sweep", c, "key,value");
  rep.kv("target_2gammaP", target);
  rep.kv("finest_eps", eps.back());
  rep.kv("finest_rel_gap", std::abs(energies.back() - target) / target);
  bool gap_decreasing = true;
  for (std::size_t i = 1; i < eps.size(); ++i)
    gap_decreasing = gap_decreasing && std::abs(energies[i] - target) < std::abs(energies[i - 1] - target);
  rep.kv("gap_decreasing", gap_decreasing ? "true" : "false");
  try {
    const auto fit = potential_decay_fit(sweep, omega_prime, well);
    rep.kv("potential_decay_slope", fit.slope);
    rep.kv("potential_decay_r2", fit.r2);
  } catch (const std::invalid_argument& e) {
    rep.kv("potential_decay_slope", "nan");
    rep.kv("potential_decay_note", e.what());
  }
  {
    const auto spec = make_spec(c, g, eps.back());
    std::vector<double> radii = c.transition_radii;
    const double r0 = 0.85 * g->omega().extent(c.dim);
    if (radii.empty() && 5.0 * eps.back() < r0) radii = geometric(5.0 * eps.back(), r0, 8);
    if (radii.size() >= 2) {
      const auto tv = transition_volume_scaling(sweep.back().v, spec, radii);
      rep.kv("transition_nodes", static_cast<double>(tv.transition_nodes));
      rep.kv("transition_r_min", radii.front());
      rep.kv("transition_r_max", radii.back());
      rep.kv("transition_slope", tv.fitted ? num(tv.fit.slope) : std::string("nan"));
    } else {
      rep.kv("transition_slope", "nan");
    }
  }
  rep.kv("all_converged", all_converged ? "true" : "false");
  for (const auto& w : warnings) {
    rep.kv("warning", w);
    log << "warning: " << w << "\n";
  }
  return all_converged ? Ok : NotConverged;
}

int cmd_geometry(const RunOptions& o, std::ostream& log) {
  const auto c = load_config(o.config);
  const std::string task = o.subtask;
  if (task != "perimeter" && task != "curvature" && task != "variation" && task != "cone-check")
    throw ConfigError("unknown geometry subtask '" + task + "'");
  if (!c.set) throw ConfigError("geometry.set: missing");
  const DirLock lock(o.out);
  const fs::path dir(o.out);
  const auto g = make_grid(c);
  const auto e = make_set(*c.set, g);
  const auto p = make_physics(c, 1.0);
  const Mask omega = region_mask(*g, c.omega_prime);
  CsvFile out(dir / ("geometry_" + task + ".csv"), "geometry " + task, c, "key,value");
  out.kv("set", c.set->name);
  out.kv("s", c.s);
  out.kv("h", g->h());

  auto field_list = [&] {
    std::vector<VectorFieldX> xs;
    for (const auto& f : c.fields.empty() ? default_fields(c.dim) : c.fields) xs.push_back(make_field(f, g));
    return xs;
  };

  if (task == "perimeter") {
    const double per = perimeter_P2s(e, omega, c.s_prime);
    out.kv("s_prime", c.s_prime);
    out.kv("P_2s", per);
    out.kv("two_gamma_P", 2.0 * make_physics(c, 1.0).gamma_ns * perimeter_P2s(e, omega, c.s));
    out.kv("identity_gap", phase_energy_identity_check(e, omega, p));
    log << "perimeter: " << num(per) << "\n";
  } else if (task == "curvature") {
    const auto bnd = boundary_nodes(e);
    if (bnd.empty()) throw ConfigError("geometry.set: the set has no boundary nodes");
    std::vector<Point> pts = c.points;
    if (pts.empty()) pts.push_back(g->point(bnd.front()));
    for (std::size_t k = 0; k < pts.size(); ++k) {
      std::size_t best = bnd.front();
      double bd = INFINITY;
      for (std::size_t b : bnd) {
        const auto x = g->point(b);
        const double d = std::hypot(x[0] - pts[k][0], c.dim == 2 ? x[1] - pts[k][1] : 0.0);
        if (d < bd) bd = d, best = b;
      }
      const auto x = g->point(best);
      const std::string tag = "point_" + std::to_string(k);
      out.kv(tag + "_x", x[0]);
      if (c.dim == 2) out.kv(tag + "_y", x[1]);
      out.kv(tag + "_H", mean_curvature_H2s(e, best, c.s));
    }
  } else if (task == "variation") {
    const auto f = make_f(c, g);
    const auto r = prescribed_curvature_residual(e, omega, f, field_list(), p, c.variation_steps);
    for (std::size_t k = 0; k < r.variations.size(); ++k) {
      out.kv("field_" + std::to_string(k) + "_variation", r.variations[k]);
      out.kv("field_" + std::to_string(k) + "_forcing", r.forcing[k]);
    }
    out.kv("max_residual", r.max_residual);
    log << "variation: max residual " << num(r.max_residual) << "\n";
  } else {
    const auto f = make_f(c, g);
    const auto r = prescribed_curvature_residual(e, omega, f, field_list(), p, c.variation_steps);
    out.kv("stationarity_residual", r.max_residual);
    std::vector<double> radii = c.radii.empty() ? std::vector<double>{0.5, 0.75, 1.0} : c.radii;
    std::sort(radii.begin(), radii.end());
    const double rmax = radii.back();
    DensityCurve curve[2];
    for (int i = 0; i < 2; ++i) {
      const double hh = c.h * (i == 0 ? 1.0 : 2.0);
      const double q = 0.25 * rmax;
      const Omega om = c.dim == 1 ? Omega::interval(c.apex[0] - q, c.apex[0] + q)
                                  : Omega::box({c.apex[0] - q, c.apex[1] - q}, {c.apex[0] + q, c.apex[1] + q});
      const double reach = rmax + std::max(std::abs(c.apex[0]), std::abs(c.apex[1]));
      GridPtr gd;
      try {
        gd = build_grid(c.dim, hh, om, std::max(reach, 2.0 * rmax) + 4.0 * hh, FarField::constant(0.0), c.offset);
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("cone-check grid: ") + ex.what());
      }
      const double m = rmax + 2.0 * hh;
      const auto eg = make_extension_grid(gd, c.s, {c.apex[0] - m, c.apex[1] - m}, {c.apex[0] + m, c.apex[1] + m},
                                          1e-3 * hh, 1.01 * rmax, 1.1);
      auto zero = ScalarField::constant(gd, 0.0);
      curve[i] = density_theta_sharp(make_set(*c.set, gd), zero, c.apex, radii, make_params(c.dim, c.s, 1.0), eg);
    }
    const auto lim = richardson(curve[0], curve[1], 1.0 - 2.0 * c.s);
    const auto [lo, hi] = std::minmax_element(lim.theta_values.begin(), lim.theta_values.end());
    const double mean = pairwise_sum(lim.theta_values) / static_cast<double>(lim.theta_values.size());
    for (std::size_t k = 0; k < radii.size(); ++k) {
      out.kv("theta_r_" + num(radii[k]), lim.theta_values[k]);
      out.kv("theta_raw_r_" + num(radii[k]), curve[0].theta_values[k]);
    }
    const double spread = (*hi - *lo) / mean;
    const double theta_ns = theta_ns_constant(c.dim, c.s, c.h, rmax).value;
    out.kv("density_spread", spread);
    out.kv("theta_ns", theta_ns);
    out.kv("density_over_theta_ns", mean / theta_ns);
    log << "cone-check: residual " << num(r.max_residual) << ", density spread " << num(spread) << "\n";
  }
  return Ok;
}

// ---- verify ----

namespace {

struct Check {
  std::string group, name;
  double value = 0.0;
  double tol = 0.0;
  bool pass = false;
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

void constants_checks(const ExperimentConfig& c, std::vector<Check>& out) {
  const int n = c.dim;
  const double s = c.s;
  const auto p = make_physics(c, 1.0);
  const double pi = std::numbers::pi;
  const double gam = s * std::pow(2.0, 2 * s) * std::pow(pi, -0.5 * n) * std::tgamma(0.5 * (n + 2 * s)) / std::tgamma(1 - s);
  const double sig = std::pow(pi, -0.5 * n) * std::tgamma(0.5 * (n + 2 * s)) / std::tgamma(s);
  const double ds = std::pow(2.0, 2 * s - 1) * std::tgamma(s) / std::tgamma(1 - s);
  auto add = [&](std::string name, double v, double tol) { out.push_back({"constants", name, v, tol, v <= tol}); };
  add("gamma_ns_formula", rel(p.gamma_ns, gam), 1e-12);
  add("sigma_ns_formula", rel(p.sigma_ns, sig), 1e-12);
  add("d_s_formula", rel(p.d_s, ds), 1e-12);
  add("a_equals_1_minus_2s", std::abs(p.a - (1 - 2 * s)), 0.0);
  add("gamma_1_quarter", rel(gamma_ns(1, 0.25), std::sqrt(2.0) / (4 * std::sqrt(pi))), 1e-12);
  add("d_s_half_limit", std::abs(d_s(0.5 - 1e-9) - 1.0), 1e-6);
}

void extension_checks(const ExperimentConfig& c, std::vector<Check>& out) {
  const double s = c.s;
  const auto p = make_params(1, s, 1.0);
  auto add = [&](std::string name, double v, double tol) { out.push_back({"extension", name, v, tol, v <= tol}); };
  {
    auto g = build_grid(1, 1.0 / 64, Omega::interval(-1, 1), 8.0, FarField::constant(1));
    const auto eg = make_extension_grid(g, s, {-2, 0}, {2, 0}, 1e-4, 2.0);
    const auto u = extend(ScalarField::constant(g, 1.0), eg, p);
    double dev = 0;
    for (double x : u.values) dev = std::max(dev, std::abs(x - 1.0));
    add("kernel_unit_mass", dev, 1e-4);
  }
  {
    auto g = build_grid(1, 1.0 / 64, Omega::interval(-1, 1), 8.0, FarField::constant(0));
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto v = ScalarField::constant(g, 0.0);
    double sup = 0;
    for (std::size_t i : g->interior_nodes()) sup = std::max(sup, std::abs(v.values[i] = U(rng)));
    const auto eg = make_extension_grid(g, s, {-2, 0}, {2, 0}, 1e-3, 2.0, 1.5);
    const auto u = extend(v, eg, p);
    double over = 0;
    for (double x : u.values) over = std::max(over, std::abs(x) - sup);
    add("sup_bound", std::max(over, 0.0), 1e-8);
  }
  auto smooth = [](double x) { return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0; };
  {
    auto g = build_grid(1, 1.0 / 64, Omega::interval(-1, 1), 12.0, FarField::constant(0));
    const auto v = ScalarField::from_function(g, [&](const Point& x) { return x[0] * smooth(x[0]); });
    const auto eg = make_extension_grid(g, s, {-8, 0}, {8, 0}, 1e-4, 7.5, 1.1);
    const auto u = extend(v, eg, p);
    add("energy_identity", rel(weighted_energy(u, HalfRegion::box({-7.5, 0}, {7.5, 0}, 7.5), p),
                               energy_E(v, g->interior_mask(), p)), 0.05);
  }
  {
    auto g = build_grid(1, 1.0 / 128, Omega::interval(-1, 1), 8.0, FarField::constant(0));
    const auto v = ScalarField::from_function(g, [&](const Point& x) { return smooth(x[0] / 0.9); });
    const auto eg = make_extension_grid(g, s, {-1, 0}, {1, 0}, 1e-6, 2.0, 1.5);
    const auto u = extend(v, eg, p);
    const auto& nodes = g->interior_nodes();
    const auto lap = frac_laplacian(v, nodes, p);
    double mx = 0, worst = 0;
    for (double l : lap) mx = std::max(mx, std::abs(l));
    int checked = 0;
    for (std::size_t k = 0; k < lap.size() && checked < 10; k += 13) {
      if (std::abs(lap[k]) < 0.2 * mx) continue;
      worst = std::max(worst, rel(p.d_s * dz2s_trace(u, nodes[k], p), lap[k]));
      ++checked;
    }
    add("trace_identity", checked == 10 ? worst : INFINITY, 0.05);
  }
}

void geometry_checks(const ExperimentConfig& c, std::vector<Check>& out) {
  const double s = c.s;
  const auto p = make_params(1, s, 1.0);
  auto add = [&](std::string name, double v, double tol) { out.push_back({"geometry", name, v, tol, v <= tol}); };
  auto g = build_grid(1, std::ldexp(1.0, -9), Omega::interval(-1, 1), 8.0, FarField::sides(-1, 1));
  const auto half = half_space_set(g, {1, 0}, 0.0);
  const double closed_p = std::pow(2.0, 1 - 2 * s) / (2 * s * (1 - 2 * s));
  add("half_line_perimeter", rel(perimeter_P2s(half, g->interior_mask(), s), closed_p), 0.03);
  add("phase_energy_identity", phase_energy_identity_check(half, g->interior_mask(), p), 1e-10);
  {
    auto gr = build_grid(1, 1.0 / 128, Omega::interval(-1, 1), 8.0, FarField::constant(-1));
    std::mt19937 rng(11);
    std::bernoulli_distribution coin(0.4);
    Mask m(gr->size());
    for (auto& b : m) b = coin(rng) ? 1 : 0;
    const IndicatorSet e(gr, m, FarField::constant(-1.0));
    add("phase_energy_identity_random", phase_energy_identity_check(e, gr->interior_mask(), p), 1e-10);
  }
  auto gi = build_grid(1, std::ldexp(1.0, -9), Omega::interval(-1.5, 1.5), 12.0, FarField::constant(-1));
  const auto interval = box_set(gi, {-1, 0}, {1, 0});
  std::size_t node = 0;
  gi->locate({1.0, 0.0}, node);
  add("interval_endpoint_curvature", rel(mean_curvature_H2s(interval, node, s), std::pow(2.0, -2 * s) / s), 0.03);
  g->locate({0.0, 0.0}, node);
  add("half_line_curvature", std::abs(mean_curvature_H2s(half, node, s)), 0.02);
  const auto rep = sharmonic_identity_check(half, g->mask_of(Omega::interval(0.45, 0.55)), p, 10.0, 200);
  add("sharmonic_identity", rep.max_relative_error, 1e-10);
}

void solver_checks(const ExperimentConfig& c, std::vector<Check>& out) {
  const double s = c.s;
  auto add = [&](std::string name, double v, double tol) { out.push_back({"solver", name, v, tol, v <= tol}); };
  auto g = build_grid(1, 1.0 / 128, Omega::interval(-1, 1), 8.0, FarField::constant(1));
  SolverOptions o;
  o.tol = 1e-8;
  o.max_iters = 10;
  {
    const auto spec = make_problem(g, make_params(1, s, 0.1), make_prototype_well(), ScalarField::constant(g, 1.0));
    const auto r = minimize(spec, std::nullopt, o);
    double dev = 0;
    for (double x : r.v.values) dev = std::max(dev, std::abs(x - 1.0));
    add("constant_data_converges", r.report.converged ? dev : INFINITY, 1e-8);
  }
  auto gs = build_grid(1, 1.0 / 128, Omega::interval(-1, 1), 8.0, FarField::sides(-1, 1));
  auto sgn = ScalarField::from_function(gs, [](const Point& x) { return x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0); });
  sgn.tail = FarField::sides(-1, 1);
  const auto spec = make_problem(gs, make_params(1, s, 0.1), make_prototype_well(), sgn);
  o.max_iters = 100000;
  const auto r = minimize(spec, std::nullopt, o);
  add("sign_data_converges", r.report.converged ? r.report.final_residual : INFINITY, o.tol);
  double rise = 0;
  for (std::size_t k = 1; k < r.report.history.size(); ++k)
    rise = std::max(rise, r.report.history[k] - r.report.history[k - 1]);
  add("energy_non_increasing", rise, 0.0);
  add("max_principle", r.report.max_principle.max_abs - 1.0, 1e-6);
  auto sharp = sgn;
  for (std::size_t i : gs->interior_nodes()) sharp.values[i] = gs->point(i)[0] >= 0 ? 1.0 : -1.0;
  add("competitor", functional_F(r.v, spec).total - functional_F(sharp, spec).total, 1e-8);
}

void monotonicity_checks(const ExperimentConfig& c, std::vector<Check>& out) {
  const double s = c.s;
  auto add = [&](std::string name, double v, double tol) { out.push_back({"monotonicity", name, v, tol, v <= tol}); };
  const auto p = make_params(1, s, 1.0);
  DensityCurve cv[2];
  for (int i = 0; i < 2; ++i) {
    const double h = std::ldexp(1.0, -10 + i);
    auto g = build_grid(1, h, Omega::interval(-0.5, 0.5), 4.0, FarField::sides(-1, 1), 0.5);
    const auto eg = make_extension_grid(g, s, {-1, 0}, {1, 0}, 1e-3 * h, 1.0, 1.1);
    cv[i] = density_theta_sharp(half_space_set(g, {1, 0}, 0.0), ScalarField::constant(g, 0.0), {0, 0},
                                {0.1, 0.2, 0.4, 0.8}, p, eg);
  }
  const auto lim = richardson(cv[0], cv[1], 1.0 - 2.0 * s);
  const auto [lo, hi] = std::minmax_element(lim.theta_values.begin(), lim.theta_values.end());
  add("half_line_density_r_constant", (*hi - *lo) / *lo, 0.02);
  add("half_line_density_non_decreasing", cv[0].worst_drop(), 1e-3);

  auto g = build_grid(1, std::ldexp(1.0, -9), Omega::interval(-1, 1), 8.0, FarField::sides(-1, 1));
  auto sgn = ScalarField::from_function(g, [](const Point& x) { return x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0); });
  sgn.tail = FarField::sides(-1, 1);
  const auto spec = make_problem(g, make_params(1, s, 0.05), make_prototype_well(), sgn);
  SolverOptions o;
  o.tol = 1e-8;
  o.max_iters = 200000;
  const auto r = minimize(spec, std::nullopt, o);
  const auto eg = make_extension_grid(g, s, {-1.5, 0}, {1.5, 0}, 1e-3 * g->h(), 2.0, 1.1);
  auto f0 = ScalarField::constant(g, 0.0);
  double worst = 0;
  for (double x0 : {0.0, 0.3, 0.8}) {
    const auto curve = density_theta_eps(r.v, f0, {x0, 0}, {0.03, 0.05, 0.08, 0.12, 0.16, 0.19}, spec, eg);
    worst = std::max(worst, curve.worst_drop());
  }
  add("eps_density_non_decreasing", r.report.converged ? worst : INFINITY, 1e-3);
}

void symmetry_checks(const ExperimentConfig& c, std::vector<Check>& out) {
  const auto p = make_params(1, c.s, 1.0);
  auto add = [&](std::string name, double v, double tol) { out.push_back({"symmetry", name, v, tol, v <= tol}); };
  auto g = build_grid(1, 1.0 / 128, Omega::interval(-1, 1), 8.0, FarField::constant(0));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto v = ScalarField::constant(g, 0.0), phi = v;
  for (std::size_t i : g->interior_nodes()) v.values[i] = U(rng), phi.values[i] = U(rng);
  const auto& om = g->interior_mask();
  const double a = pairing(v, phi, om, p), b = pairing(phi, v, om, p);
  add("pairing_symmetric", std::abs(a - b), 1e-10);
  add("pairing_vv_equals_2E", rel(pairing(v, v, om, p), 2.0 * energy_E(v, om, p)), 1e-10);
  auto neg = v;
  for (auto& x : neg.values) x = -x;
  add("energy_even", rel(energy_E(neg, om, p), energy_E(v, om, p)), 1e-12);
  auto shifted = v;
  for (auto& x : shifted.values) x += 0.7;
  shifted.tail = FarField::constant(0.7);
  const auto& nodes = g->interior_nodes();
  const auto l1 = frac_laplacian(v, nodes, p), l2 = frac_laplacian(shifted, nodes, p);
  double d = 0, mx = 0;
  for (std::size_t k = 0; k < l1.size(); ++k) d = std::max(d, std::abs(l1[k] - l2[k])), mx = std::max(mx, std::abs(l1[k]));
  add("laplacian_shift_invariant", d / mx, 1e-10);
  // Odd field: (-Delta)^s v(-x) = -(-Delta)^s v(x).
  const auto odd = ScalarField::from_function(g, [](const Point& x) { return std::abs(x[0]) < 1 ? std::sin(3 * x[0]) : 0.0; });
  const auto lo = frac_laplacian(odd, nodes, p);
  double asym = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    std::size_t m = 0;
    if (!g->locate({-g->point(nodes[k])[0], 0.0}, m)) continue;
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), m);
    if (it == nodes.end() || *it != m) continue;
    asym = std::max(asym, std::abs(lo[k] + lo[static_cast<std::size_t>(it - nodes.begin())]));
  }
  add("laplacian_odd", asym, 1e-9);
}

}  // namespace

const std::vector<std::string>& verify_groups() {
  static const std::vector<std::string> g{"constants", "extension", "geometry", "solver", "monotonicity", "symmetry"};
  return g;
}

int cmd_verify(const RunOptions& o, std::ostream& log) {
  const auto c = load_config(o.config);
  std::vector<std::string> groups;
  if (o.only.empty()) {
    groups = verify_groups();
  } else {
    std::stringstream ss(o.only);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (std::find(verify_groups().begin(), verify_groups().end(), item) == verify_groups().end())
        throw ConfigError("--only: unknown group '" + item + "'");
      groups.push_back(item);
    }
  }
  const DirLock lock(o.out);
  std::vector<Check> checks;
  const std::map<std::string, std::function<void(const ExperimentConfig&, std::vector<Check>&)>> runners{
      {"constants", constants_checks}, {"extension", extension_checks}, {"geometry", geometry_checks},
      {"solver", solver_checks},       {"monotonicity", monotonicity_checks}, {"symmetry", symmetry_checks}};
  for (const auto& name : verify_groups())
    if (std::find(groups.begin(), groups.end(), name) != groups.end()) {
      try {
        runners.at(name)(c, checks);
      } catch (const std::exception& e) {
        log << "verify: " << name << " aborted: " << e.what() << "\n";
        checks.push_back({name, "completed", 1.0, 0.0, false});
      }
    }
  CsvFile out(fs::path(o.out) / "verify.csv", "verify", c, "group,check,value,tolerance,result");
  bool ok = true;
  for (const auto& k : checks) {
    out.row({k.group, k.name, num(k.value), num(k.tol), k.pass ? "pass" : "fail"});
    ok = ok && k.pass;
    if (!k.pass) log << "verify: " << k.group << "/" << k.name << " failed (" << num(k.value) << " > " << num(k.tol) << ")\n";
  }
  log << "verify: " << checks.size() << " checks, " << (ok ? "all pass" : "failures") << "\n";
  return ok ? Ok : VerifyFailure;
}

int run(const std::string& command, const RunOptions& o, std::ostream& log) {
  if (o.threads) set_thread_count(o.threads);
  try {
    if (command == "solve") return cmd_solve(o, log);
    if (command == "sweep") return cmd_sweep(o, log);
    if (command == "geometry") return cmd_geometry(o, log);
    if (command == "verify") return cmd_verify(o, log);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return ConfigFailure;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return ConfigFailure;
  }
}

}  // namespace fracac::cli
