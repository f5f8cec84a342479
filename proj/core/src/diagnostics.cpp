#include "fracac/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fracac/geometry.hpp"
#include "fracac/parallel.hpp"
#include "fracac/params.hpp"
#include "fracac/summation.hpp"

namespace fracac {

namespace {

double dist2(const Point& a, const Point& b, int n) {
  double d = 0.0;
  for (int i = 0; i < n; ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

void check_radii(const std::vector<double>& radii) {
  if (radii.empty()) throw std::invalid_argument("density needs at least one radius");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw std::invalid_argument("radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw std::invalid_argument("radii must be strictly increasing");
  }
}

bool all_zero(const ScalarField& f) {
  return std::all_of(f.values.begin(), f.values.end(), [](double x) { return x == 0.0; }) && f.tail.is_constant() &&
         f.tail.base == 0.0;
}

double resolved_q(int n, double s, double q) {
  const double lo = n / (1.0 + 2.0 * s);
  if (std::isnan(q)) return 0.5 * (lo + n);
  if (!(q > lo && q < n)) throw std::invalid_argument("q must lie in (n/(1+2s), n)");
  return q;
}

// c sup|v| int_0^r t^{theta_q - 1} ||f||(D_t) dt, with t = tau^{1/theta_q} and the midpoint rule in tau.
std::vector<double> drift_terms(const ScalarField& v, const ScalarField& f, const Point& x0,
                                const std::vector<double>& radii, double s, const DensityOptions& opt) {
  std::vector<double> out(radii.size(), 0.0);
  if (opt.drift_constant == 0.0 || all_zero(f)) return out;
  const int n = v.grid->dim();
  const double q = resolved_q(n, s, opt.q);
  const double th = theta_q(n, s, q);
  double vmax = 0.0;
  for (double x : v.values) vmax = std::max(vmax, std::abs(x));
  const std::size_t m = std::max<std::size_t>(opt.drift_nodes, 4);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double top = std::pow(radii[i], th);
    const double dt = top / static_cast<double>(m);
    std::vector<double> terms(m);
    for (std::size_t k = 0; k < m; ++k) {
      const double tau = (static_cast<double>(k) + 0.5) * dt;
      terms[k] = forcing_norm(f, x0, std::pow(tau, 1.0 / th), q) * dt / th;
    }
    out[i] = opt.drift_constant * vmax * pairwise_sum(terms);
  }
  return out;
}

void require_center(const GridSpec& g, const Point& x0) {
  std::size_t idx = 0;
  if (!g.locate(x0, idx)) throw std::invalid_argument("density center outside the grid");
}

std::vector<std::array<std::size_t, 2>> lattice_edges(const GridSpec& g) {
  std::vector<std::array<std::size_t, 2>> edges;
  const auto m = static_cast<std::int64_t>(g.axis_count());
  if (g.dim() == 1) {
    for (std::int64_t p = 0; p + 1 < m; ++p) edges.push_back({g.flat(p), g.flat(p + 1)});
    return edges;
  }
  for (std::int64_t p = 0; p < m; ++p)
    for (std::int64_t q = 0; q < m; ++q) {
      if (p + 1 < m) edges.push_back({g.flat(p, q), g.flat(p + 1, q)});
      if (q + 1 < m) edges.push_back({g.flat(p, q), g.flat(p, q + 1)});
    }
  return edges;
}

bool in_mask(const GridSpec& g, const Mask& k, const Point& x) {
  std::size_t idx = 0;
  return g.locate(x, idx) && k[idx] != 0;
}

// sup over a in A of the distance to B; +inf when B is empty and A is not.
double directed_distance(const std::vector<Point>& a, const std::vector<Point>& b, int n) {
  if (a.empty()) return 0.0;
  if (b.empty()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const auto& x : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : b) best = std::min(best, dist2(x, y, n));
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

}  // namespace

double DensityCurve::worst_drop() const {
  if (theta_values.empty()) return 0.0;
  const double scale = std::max(std::abs(theta_values.back()), 1e-300);
  double worst = 0.0;
  for (std::size_t i = 1; i < theta_values.size(); ++i)
    worst = std::max(worst, (theta_values[i - 1] - theta_values[i]) / scale);
  return worst;
}

bool DensityCurve::non_decreasing(double rel_slack) const { return worst_drop() <= rel_slack; }

double DensityCurve::deficit_mismatch() const {
  if (deficits.size() != theta_values.size()) throw std::logic_error("curve has no deficits");
  double worst = 0.0;
  for (std::size_t i = 1; i < theta_values.size(); ++i) {
    const double inc = theta_values[i] - theta_values[i - 1];
    worst = std::max(worst, std::abs(inc - deficits[i]) / std::max(std::abs(inc), 1e-300));
  }
  return worst;
}

std::string DensityCurve::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "radius,theta,drift,deficit\n";
  for (std::size_t i = 0; i < radii.size(); ++i)
    os << radii[i] << ',' << theta_values[i] << ',' << drift_terms[i] << ','
       << (deficits.size() == radii.size() ? deficits[i] : 0.0) << '\n';
  return os.str();
}

double forcing_norm(const ScalarField& f, const Point& x0, double t, double q) {
  const GridSpec& g = *f.grid;
  const int n = g.dim();
  if (!(q > 0.0 && q < n)) throw std::invalid_argument("forcing norm needs 0 < q < n");
  const double qs = n * q / (n - q);
  const double h = g.h();
  const auto m = static_cast<std::int64_t>(g.axis_count());
  std::vector<double> a, b;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (dist2(g.point(i), x0, n) >= t * t) continue;
    a.push_back(std::pow(std::abs(f[i]), qs));
    const auto loc = g.local(i);
    double grad2 = 0.0;
    for (int d = 0; d < n; ++d) {
      auto lo = loc, hi = loc;
      lo[d] = std::max<std::int64_t>(loc[d] - 1, 0);
      hi[d] = std::min<std::int64_t>(loc[d] + 1, m - 1);
      const double diff = f[g.flat(hi[0], hi[1])] - f[g.flat(lo[0], lo[1])];
      const double gd = diff / (static_cast<double>(hi[d] - lo[d]) * h);
      grad2 += gd * gd;
    }
    b.push_back(std::pow(grad2, 0.5 * q));
  }
  const double cell = g.cell_volume();
  return std::pow(cell * pairwise_sum(a), 1.0 / qs) + std::pow(cell * pairwise_sum(b), 1.0 / q);
}

DensityCurve density_theta_eps(const ScalarField& v, const ScalarField& f, const Point& x0,
                               const std::vector<double>& radii, const ProblemSpec& spec,
                               const ExtensionGrid& eg, const DensityOptions& opt) {
  check_radii(radii);
  const GridSpec& g = *v.grid;
  if (eg.base != v.grid) throw std::invalid_argument("extension grid built on another lattice");
  require_center(g, x0);
  const auto& p = spec.params;
  const int n = g.dim();
  const auto u = extend(v, eg, p);
  DensityCurve c;
  c.center = x0;
  c.radii = radii;
  c.variant = DensityVariant::Eps;
  c.drift_terms = drift_terms(v, f, x0, radii, p.s, opt);
  const double inv = std::pow(p.eps, -2.0 * p.s);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double r = radii[i];
    const double e = weighted_energy(u, HalfRegion::ball(x0, r), p);
    std::vector<double> w;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (dist2(g.point(k), x0, n) < r * r) w.push_back(spec.well.W(v[k]));
    const double pot = inv * g.cell_volume() * pairwise_sum(w);
    c.theta_values.push_back(std::pow(r, 2.0 * p.s - n) * (e + pot) + c.drift_terms[i]);
  }
  return c;
}

DensityCurve density_theta_sharp(const IndicatorSet& e, const ScalarField& f, const Point& x0,
                                 const std::vector<double>& radii, const FractionalParams& p,
                                 const ExtensionGrid& eg, const DensityOptions& opt) {
  check_radii(radii);
  if (eg.base != e.grid) throw std::invalid_argument("extension grid built on another lattice");
  require_center(*e.grid, x0);
  const int n = e.grid->dim();
  const auto v = phase_function(e);
  const auto u = extend(v, eg, p);
  DensityCurve c;
  c.center = x0;
  c.radii = radii;
  c.variant = DensityVariant::Sharp;
  c.drift_terms = drift_terms(v, f, x0, radii, p.s, opt);
  for (std::size_t i = 0; i < radii.size(); ++i)
    c.theta_values.push_back(std::pow(radii[i], 2.0 * p.s - n) * weighted_energy(u, HalfRegion::ball(x0, radii[i]), p) +
                             c.drift_terms[i]);
  if (all_zero(f)) {
    c.deficits.assign(radii.size(), 0.0);
    for (std::size_t i = 1; i < radii.size(); ++i) c.deficits[i] = radial_deficit(u, x0, radii[i - 1], radii[i], p);
  }
  return c;
}

DensityCurve richardson(const DensityCurve& fine, const DensityCurve& coarse, double k) {
  if (fine.radii != coarse.radii) throw std::invalid_argument("curves must share their radii");
  const double den = std::pow(2.0, k) - 1.0;
  DensityCurve c = fine;
  for (std::size_t i = 0; i < c.radii.size(); ++i)
    c.theta_values[i] = fine.theta_values[i] + (fine.theta_values[i] - coarse.theta_values[i]) / den;
  if (fine.deficits.size() == c.radii.size() && coarse.deficits.size() == c.radii.size())
    for (std::size_t i = 0; i < c.radii.size(); ++i)
      c.deficits[i] = fine.deficits[i] + (fine.deficits[i] - coarse.deficits[i]) / den;
  else
    c.deficits.clear();
  return c;
}

ThetaEstimate theta_ns_constant(int n, double s, double h, double radius, Point center) {
  if (n != 1 && n != 2) throw std::invalid_argument("dimension must be 1 or 2");
  if (!(h > 0.0 && radius > 4.0 * h)) throw std::invalid_argument("radius must span several cells");
  if (n == 1) center[1] = 0.0;
  if (center[0] != 0.0) throw std::invalid_argument("center must lie on the boundary {x_1 = 0}");
  const auto p = make_params(n, s, 1.0);
  auto raw = [&](double hh) {
    // Omega only fixes the truncation requirement; the ball lies inside the extension footprint.
    const double quarter = 0.25 * radius;
    const Omega om = n == 1 ? Omega::interval(-quarter, quarter)
                            : Omega::box({-quarter, center[1] - quarter}, {quarter, center[1] + quarter});
    const double reach = radius + std::abs(center[1]) + 4.0 * hh;
    const FarField tail = n == 1 ? FarField::sides(-1.0, 1.0) : FarField::half_space({1.0, 0.0}, 0.0);
    auto g = build_grid(n, hh, om, std::max(reach, 2.0 * radius) + hh, tail, 0.5);
    const double m = radius + 2.0 * hh;
    const Point lo{center[0] - m, center[1] - m}, hi{center[0] + m, center[1] + m};
    const auto eg = make_extension_grid(g, s, lo, hi, 1e-3 * hh, radius * 1.01, 1.1);
    const auto e = half_space_set(g, {1.0, 0.0}, 0.0);
    const auto u = extend(phase_function(e), eg, p);
    return std::pow(radius, 2.0 * s - n) * weighted_energy(u, HalfRegion::ball(center, radius), p);
  };
  ThetaEstimate t;
  t.h = h;
  t.fine = raw(h);
  t.coarse = raw(2.0 * h);
  t.value = t.fine + (t.fine - t.coarse) / (std::pow(2.0, 1.0 - 2.0 * s) - 1.0);
  t.error = std::abs(t.value - t.fine);
  return t;
}

double clearing_out_eta0(int n, double s, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const double w = unit_ball_volume(n);
  return 9.0 * w * w / (std::pow(2.0, n + 4.0 - 2.0 * s) * lambda * lambda);
}

ClearingOutReport clearing_out_probe(const ScalarField& v, const ProblemSpec& spec, const Point& x0, double r,
                                     const ExtensionGrid& eg, const ClearingOutOptions& opt) {
  ClearingOutReport rep;
  const ScalarField zero = ScalarField::constant(v.grid, 0.0);
  ScalarField f0 = zero;
  f0.tail = FarField::constant(0.0);
  rep.theta = density_theta_eps(v, f0, x0, {r}, spec, eg).theta_values[0];
  const GridSpec& g = *v.grid;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (dist2(g.point(k), x0, g.dim()) < 0.25 * r * r)
      rep.deviation = std::max(rep.deviation, std::abs(std::abs(v[k]) - 1.0));
  rep.eta0 = clearing_out_eta0(g.dim(), spec.params.s, opt.lambda);
  rep.cleared = rep.theta < opt.density_threshold && rep.deviation <= spec.well.delta_W;
  return rep;
}

SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit needs matching abscissae and ordinates");
  SlopeFit fit;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) continue;
    fit.x.push_back(std::log(x[i]));
    fit.y.push_back(std::log(y[i]));
  }
  const std::size_t m = fit.x.size();
  if (m < 2) throw std::invalid_argument("fit needs at least two positive points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += fit.x[i];
    my += fit.y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (fit.x[i] - mx) * (fit.x[i] - mx);
    sxy += (fit.x[i] - mx) * (fit.y[i] - my);
    syy += (fit.y[i] - my) * (fit.y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit needs distinct abscissae");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

SlopeFit potential_decay_fit(const std::vector<SweepEntry>& sweep, const Mask& omega_prime, const DoubleWell& well) {
  if (sweep.size() < 4) throw std::invalid_argument("potential decay fit needs at least 4 eps values");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& e : sweep) {
    lo = std::min(lo, e.eps);
    hi = std::max(hi, e.eps);
  }
  if (!(lo > 0.0) || hi < 8.0 * lo * (1.0 - 1e-12))
    throw std::invalid_argument("potential decay fit needs eps spanning a factor of at least 8");
  std::vector<double> x, y;
  for (const auto& e : sweep) {
    if (e.v.grid == nullptr || omega_prime.size() != e.v.grid->size())
      throw std::invalid_argument("sweep field does not match the mask");
    std::vector<double> w;
    for (std::size_t k = 0; k < omega_prime.size(); ++k)
      if (omega_prime[k]) w.push_back(well.W(e.v[k]));
    x.push_back(e.eps);
    y.push_back(e.v.grid->cell_volume() * pairwise_sum(w));
  }
  return loglog_fit(x, y);
}

SlopeFit potential_envelope_fit(const ScalarField& v, const DoubleWell& well, const Point& x0, const Point& dir,
                                double t_min, double t_max) {
  const GridSpec& g = *v.grid;
  const int n = g.dim();
  const auto front = level_crossings(v, 0.0);
  if (front.empty()) throw std::invalid_argument("field has no interface");
  double norm = 0.0;
  for (int d = 0; d < n; ++d) norm += dir[d] * dir[d];
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !(t_max > t_min && t_min >= 0.0)) throw std::invalid_argument("bad ray");
  std::vector<double> dist, wv;
  for (double t = t_min; t <= t_max; t += g.h()) {
    Point x{x0[0] + t * dir[0] / norm, x0[1] + t * dir[1] / norm};
    std::size_t idx = 0;
    if (!g.locate(x, idx)) break;
    const Point xn = g.point(idx);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : front) best = std::min(best, dist2(xn, y, n));
    dist.push_back(std::sqrt(best));
    wv.push_back(well.W(v[idx]));
  }
  return loglog_fit(dist, wv);
}

TransitionVolume transition_volume_scaling(const ScalarField& v, const ProblemSpec& spec,
                                           const std::vector<double>& radii) {
  check_radii(radii);
  const GridSpec& g = *v.grid;
  TransitionVolume tv;
  tv.radii = radii;
  NodeSet trans;
  for (std::size_t k : g.interior_nodes())
    if (std::abs(v[k]) < 1.0 - spec.well.delta_W) trans.push_back(k);
  tv.transition_nodes = trans.size();
  for (double r : radii) {
    if (trans.empty()) {
      tv.volumes.push_back(0.0);
      continue;
    }
    std::size_t count = 0;
    for (std::size_t k : tubular_neighborhood(trans, r, g))
      if (g.is_interior(k)) ++count;
    tv.volumes.push_back(static_cast<double>(count) * g.cell_volume());
  }
  if (!trans.empty() && radii.size() >= 2) {
    tv.fit = loglog_fit(radii, tv.volumes);
    tv.fitted = true;
  }
  return tv;
}

std::vector<Point> level_crossings(const ScalarField& v, double t) {
  const GridSpec& g = *v.grid;
  std::vector<Point> pts;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (v[k] == t) pts.push_back(g.point(k));
  for (const auto& e : lattice_edges(g)) {
    const double a = v[e[0]] - t, b = v[e[1]] - t;
    if (!(a * b < 0.0)) continue;
    const Point x = g.point(e[0]), y = g.point(e[1]);
    const double lam = a / (a - b);
    pts.push_back({x[0] + lam * (y[0] - x[0]), x[1] + lam * (y[1] - x[1])});
  }
  return pts;
}

std::vector<Point> set_interface(const IndicatorSet& e) {
  const GridSpec& g = *e.grid;
  std::vector<Point> pts;
  for (const auto& ed : lattice_edges(g)) {
    if (e.contains(ed[0]) == e.contains(ed[1])) continue;
    const Point x = g.point(ed[0]), y = g.point(ed[1]);
    pts.push_back({0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])});
  }
  return pts;
}

std::vector<LevelSetDistance> level_set_convergence(const std::vector<SweepEntry>& sweep, double t,
                                                    const IndicatorSet& e_star, const Mask& k) {
  if (!(t > -1.0 && t < 1.0)) throw std::invalid_argument("level must lie in (-1, 1)");
  const GridSpec& gs = *e_star.grid;
  const int n = gs.dim();
  if (k.size() != gs.size()) throw std::invalid_argument("mask does not match the grid");
  const auto front_all = set_interface(e_star);
  std::vector<Point> front_k;
  for (const auto& x : front_all)
    if (in_mask(gs, k, x)) front_k.push_back(x);
  for (const auto& en : sweep)
    if (en.v.grid == nullptr || en.v.grid->dim() != n) throw std::invalid_argument("sweep field has the wrong dimension");
  std::vector<LevelSetDistance> out(sweep.size());
  parallel_for(sweep.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& v = sweep[i].v;
      const auto level = level_crossings(v, t);
      std::vector<Point> level_k;
      for (const auto& x : level)
        if (in_mask(gs, k, x)) level_k.push_back(x);
      out[i].eps = sweep[i].eps;
      if (level_k.empty()) {
        out[i].d1 = out[i].d2 = std::numeric_limits<double>::infinity();
        continue;
      }
      out[i].d1 = directed_distance(level_k, front_all, n);
      out[i].d2 = directed_distance(front_k, level, n);
    }
  });
  return out;
}

double interface_dimension(const ScalarField& v, const Mask& k, const std::vector<double>& scales) {
  const GridSpec& g = *v.grid;
  std::vector<Point> pts;
  for (const auto& x : level_crossings(v, 0.0))
    if (in_mask(g, k, x)) pts.push_back(x);
  if (pts.empty()) throw std::invalid_argument("no interface inside the mask");
  return box_counting_dimension(pts, g.dim(), scales);
}

}  // namespace fracac
