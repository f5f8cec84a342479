#include "fracac/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fracac/fractional.hpp"
#include "fracac/parallel.hpp"
#include "fracac/summation.hpp"
#include "fracac/tails.hpp"

namespace fracac {

namespace {

IndicatorSet make_set(GridPtr g, const std::function<bool(const Point&)>& in, FarField far) {
  Mask m(g->size());
  for (std::size_t i = 0; i < g->size(); ++i) m[i] = in(g->point(i)) ? 1 : 0;
  return IndicatorSet(std::move(g), std::move(m), std::move(far));
}

double kernel_value(const GridSpec& g, double s, std::int64_t di, std::int64_t dj) {
  if (di == 0 && dj == 0) return 0.0;
  const double r2 = static_cast<double>(di * di + dj * dj) * g.h() * g.h();
  return g.cell_volume() * std::pow(r2, -0.5 * (g.dim() + 2.0 * s));
}

// Kernel mass of the exterior tail where membership differs from `member`.
double tail_mismatch(const IndicatorSet& e, const Point& x, bool member, double s) {
  std::vector<double> terms;
  for (const auto& piece : tail_pieces(*e.grid, {&e.far}, x))
    if (e.tail_member(piece.sample) != member) terms.push_back(piece.weight * laplace_radial(piece.r0, piece.r1, s));
  return pairwise_sum(terms);
}

}  // namespace

IndicatorSet half_space_set(GridPtr g, Point normal, double offset) {
  const FarField far = FarField::half_space(normal, offset);
  const int n = g->dim();
  return make_set(g, [&](const Point& y) { return normal[0] * y[0] + (n == 2 ? normal[1] * y[1] : 0.0) > offset; },
                  far);
}

IndicatorSet ball_set(GridPtr g, Point center, double radius) {
  const int n = g->dim();
  const double L = g->box_edge();
  for (int d = 0; d < n; ++d)
    if (std::abs(center[d]) + radius >= L) throw std::invalid_argument("ball leaves the truncation box");
  return make_set(
      g,
      [&](const Point& y) {
        double d2 = 0.0;
        for (int d = 0; d < n; ++d) d2 += (y[d] - center[d]) * (y[d] - center[d]);
        return d2 < radius * radius;
      },
      FarField::constant(-1.0));
}

IndicatorSet box_set(GridPtr g, Point lo, Point hi) {
  const int n = g->dim();
  const double L = g->box_edge();
  for (int d = 0; d < n; ++d)
    if (lo[d] <= -L || hi[d] >= L) throw std::invalid_argument("box leaves the truncation box");
  return make_set(
      g,
      [&](const Point& y) {
        for (int d = 0; d < n; ++d)
          if (!(y[d] > lo[d] && y[d] < hi[d])) return false;
        return true;
      },
      FarField::constant(-1.0));
}

IndicatorSet cross_set(GridPtr g) {
  if (g->dim() != 2) throw std::invalid_argument("the cross set needs n = 2");
  return make_set(g, [](const Point& y) { return y[0] * y[1] > 0.0; }, FarField::cross());
}

IndicatorSet empty_set(GridPtr g) {
  return IndicatorSet(g, Mask(g->size(), 0), FarField::constant(-1.0));
}

IndicatorSet whole_set(GridPtr g) { return IndicatorSet(g, Mask(g->size(), 1), FarField::constant(1.0)); }

std::string set_to_csv(const IndicatorSet& e) {
  const GridSpec& g = *e.grid;
  std::ostringstream os;
  os.precision(17);
  os << (g.dim() == 1 ? "x,member\n" : "x,y,member\n");
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.point(i);
    os << x[0] << ',';
    if (g.dim() == 2) os << x[1] << ',';
    os << (e.contains(i) ? 1 : 0) << '\n';
  }
  return os.str();
}

IndicatorSet set_from_csv(GridPtr g, const std::string& text, FarField far) {
  std::istringstream is(text);
  std::string line;
  Mask m(g->size(), 0);
  std::vector<std::uint8_t> seen(g->size(), 0);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Point x{0.0, 0.0};
    int member = -1;
    ls >> x[0];
    if (g->dim() == 2) ls >> x[1];
    ls >> member;
    if (ls.fail() || (member != 0 && member != 1)) throw std::invalid_argument("malformed set row: " + line);
    std::size_t idx = 0;
    if (!g->locate(x, idx)) throw std::invalid_argument("set row outside the grid: " + line);
    const Point y = g->point(idx);
    if (std::hypot(x[0] - y[0], x[1] - y[1]) > 0.25 * g->h()) throw std::invalid_argument("set row off the lattice: " + line);
    if (seen[idx]) throw std::invalid_argument("duplicate set row: " + line);
    seen[idx] = 1;
    m[idx] = static_cast<std::uint8_t>(member);
    ++rows;
  }
  if (rows != g->size()) throw std::invalid_argument("set file does not cover the grid");
  return IndicatorSet(std::move(g), std::move(m), std::move(far));
}

bool is_boundary_node(const IndicatorSet& e, std::size_t node) {
  const GridSpec& g = *e.grid;
  const auto l = g.local(node);
  const auto n = static_cast<std::int64_t>(g.axis_count());
  const bool m = e.contains(node);
  for (int d = 0; d < g.dim(); ++d)
    for (int sgn : {-1, 1}) {
      auto q = l;
      q[d] += sgn;
      if (q[d] < 0 || q[d] >= n) continue;
      if (e.contains(g.flat(q[0], q[1])) != m) return true;
    }
  return false;
}

NodeSet boundary_nodes(const IndicatorSet& e) {
  NodeSet out;
  for (std::size_t i = 0; i < e.grid->size(); ++i)
    if (is_boundary_node(e, i)) out.push_back(i);
  return out;
}

std::vector<double> boundary_distance(const IndicatorSet& e, const NodeSet& nodes) {
  const GridSpec& g = *e.grid;
  const auto bnd = node_points(boundary_nodes(e), g);
  std::vector<double> out(nodes.size(), std::numeric_limits<double>::infinity());
  parallel_for(nodes.size(), [&](std::size_t b, std::size_t end) {
    for (std::size_t k = b; k < end; ++k) {
      const Point x = g.point(nodes[k]);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : bnd) best = std::min(best, std::hypot(x[0] - y[0], x[1] - y[1]));
      out[k] = best;
    }
  });
  return out;
}

VectorFieldX VectorFieldX::from_function(GridPtr g, const std::function<Point(const Point&)>& fn) {
  VectorFieldX x;
  x.grid = g;
  x.components.resize(g->size());
  x.support.assign(g->size(), 0);
  for (std::size_t i = 0; i < g->size(); ++i) {
    Point v = fn(g->point(i));
    if (g->dim() == 1) v[1] = 0.0;
    x.components[i] = v;
    x.support[i] = (v[0] != 0.0 || v[1] != 0.0) ? 1 : 0;
  }
  return x;
}

void VectorFieldX::validate(const Mask& omega) const {
  if (!grid) throw std::invalid_argument("vector field without grid");
  if (components.size() != grid->size() || support.size() != grid->size() || omega.size() != grid->size())
    throw std::invalid_argument("vector field size mismatch");
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const bool nonzero = components[i][0] != 0.0 || components[i][1] != 0.0;
    if (nonzero && !support[i]) throw std::invalid_argument("vector field nonzero off its support");
    if (!support[i]) continue;
    // Support strictly inside omega: the node and all its axis neighbours lie in omega.
    const auto l = grid->local(i);
    const auto n = static_cast<std::int64_t>(grid->axis_count());
    bool inside = omega[i] != 0;
    for (int d = 0; d < grid->dim() && inside; ++d)
      for (int sgn : {-1, 1}) {
        auto q = l;
        q[d] += sgn;
        if (q[d] < 0 || q[d] >= n || !omega[grid->flat(q[0], q[1])]) inside = false;
      }
    if (!inside) throw std::invalid_argument("test field support touches the boundary of omega");
  }
}

double VectorFieldX::sup_norm() const {
  double m = 0.0;
  for (const auto& c : components) m = std::max(m, std::hypot(c[0], c[1]));
  return m;
}

double VectorFieldX::c1_norm() const {
  const GridSpec& g = *grid;
  const auto n = static_cast<std::int64_t>(g.axis_count());
  double d = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!support[i]) continue;
    const auto l = g.local(i);
    for (int axis = 0; axis < g.dim(); ++axis) {
      auto a = l, b = l;
      a[axis] += 1;
      b[axis] -= 1;
      if (a[axis] >= n || b[axis] < 0) continue;
      const auto& ca = components[g.flat(a[0], a[1])];
      const auto& cb = components[g.flat(b[0], b[1])];
      for (int c = 0; c < g.dim(); ++c) d = std::max(d, std::abs(ca[c] - cb[c]) / (2.0 * g.h()));
    }
  }
  return sup_norm() + d;
}

double perimeter_P2s(const IndicatorSet& e, const Mask& omega, double s_prime) {
  if (!(s_prime > 0.0 && s_prime < 0.5)) throw std::invalid_argument("s must lie in (0, 1/2)");
  e.validate();
  const GridSpec& g = *e.grid;
  if (omega.size() != g.size()) throw std::invalid_argument("omega mask size mismatch");
  const NodeSet targets = nodes_of(omega);
  if (targets.empty()) return 0.0;
  std::vector<double> w_in(g.size()), w_out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w = omega[i] ? 0.5 : 1.0;
    w_in[i] = e.contains(i) ? w : 0.0;
    w_out[i] = e.contains(i) ? 0.0 : w;
  }
  const auto c_in = kernel_sums(g, s_prime, w_in, targets);
  const auto c_out = kernel_sums(g, s_prime, w_out, targets);
  std::vector<double> per(targets.size());
  parallel_for(targets.size(), [&](std::size_t b, std::size_t end) {
    for (std::size_t t = b; t < end; ++t) {
      const bool m = e.contains(targets[t]);
      per[t] = (m ? c_out[t] : c_in[t]) + tail_mismatch(e, g.point(targets[t]), m, s_prime);
    }
  });
  return g.cell_volume() * pairwise_sum(per);
}

double phase_energy_identity_check(const IndicatorSet& e, const Mask& omega, const FractionalParams& p) {
  const double energy = energy_E(phase_function(e), omega, p);
  const double target = 2.0 * p.gamma_ns * perimeter_P2s(e, omega, p.s);
  return std::abs(energy - target) / std::max({std::abs(energy), std::abs(target), 1e-12});
}

double mean_curvature_H2s(const IndicatorSet& e, std::size_t node, double s) {
  if (!(s > 0.0 && s < 0.5)) throw std::invalid_argument("s must lie in (0, 1/2)");
  const GridSpec& g = *e.grid;
  if (node >= g.size() || !is_boundary_node(e, node)) throw std::invalid_argument("node is not on the boundary of E");
  const auto lx = g.local(node);
  const auto n = static_cast<std::int64_t>(g.axis_count());
  const std::int64_t qn = g.dim() == 2 ? n : 1;
  const bool m = e.contains(node);
  auto sigma = [&](std::int64_t p, std::int64_t q) { return e.contains(g.flat(p, q)) ? -1.0 : 1.0; };
  auto in_box = [&](std::int64_t p, std::int64_t q) { return p >= 0 && p < n && q >= 0 && q < qn; };
  const double h = g.h();
  const double expo = -0.5 * (g.dim() + 2.0 * s);

  // The sum is centred at the midpoint c between the node and a neighbour of opposite
  // membership; y pairs with its reflection 2c - y, again a lattice node.
  std::vector<double> per_face;
  std::vector<double> terms;
  terms.reserve(g.size());
  for (int axis = 0; axis < g.dim(); ++axis)
    for (int sgn : {-1, 1}) {
      auto ln = lx;
      ln[axis] += sgn;
      if (!in_box(ln[0], ln[1]) || e.contains(g.flat(ln[0], ln[1])) == m) continue;
      const std::int64_t sp = lx[0] + ln[0], sq = lx[1] + ln[1];  // 2c in index units
      terms.clear();
      for (std::int64_t p = 0; p < n; ++p)
        for (std::int64_t q = 0; q < qn; ++q) {
          const std::int64_t rp = sp - p, rq = sq - q;
          const double dx = 0.5 * static_cast<double>(2 * p - sp) * h;
          const double dy = 0.5 * static_cast<double>(2 * q - sq) * h;
          const double k = g.cell_volume() * std::pow(dx * dx + dy * dy, expo);
          if (!in_box(rp, rq)) {
            terms.push_back(sigma(p, q) * k);
          } else if (p * qn + q < rp * qn + rq) {
            // Each reflection pair once: opposite memberships cancel inside the bracket.
            terms.push_back((sigma(p, q) + sigma(rp, rq)) * k);
          }
        }
      const Point c{0.5 * (g.coord(lx[0] + g.kmin()) + g.coord(ln[0] + g.kmin())),
                    g.dim() == 2 ? 0.5 * (g.coord(lx[1] + g.kmin()) + g.coord(ln[1] + g.kmin())) : 0.0};
      std::vector<double> tail;
      for (const auto& piece : tail_pieces(g, {&e.far}, c))
        tail.push_back(piece.weight * (e.tail_member(piece.sample) ? -1.0 : 1.0) * laplace_radial(piece.r0, piece.r1, s));
      per_face.push_back(pairwise_sum(terms) + pairwise_sum(tail));
    }
  return pairwise_sum(per_face) / static_cast<double>(per_face.size());
}

IndicatorSet flow_set(const IndicatorSet& e, const VectorFieldX& x, double t) {
  if (x.grid.get() != e.grid.get()) throw std::invalid_argument("vector field and set live on different grids");
  const GridSpec& g = *e.grid;
  Mask m = e.membership;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!x.support[i]) continue;
    const Point y = g.point(i);
    const Point pre{y[0] - t * x.components[i][0], y[1] - t * x.components[i][1]};
    m[i] = e.contains_point(pre) ? 1 : 0;
  }
  return IndicatorSet(e.grid, std::move(m), e.far);
}

double first_variation_P2s(const IndicatorSet& e, const Mask& omega, const VectorFieldX& x, double s,
                           double t_step) {
  if (!(t_step > 0.0)) throw std::invalid_argument("t_step must be positive");
  x.validate(omega);
  if (x.sup_norm() == 0.0) return 0.0;
  const double plus = perimeter_P2s(flow_set(e, x, t_step), omega, s);
  const double minus = perimeter_P2s(flow_set(e, x, -t_step), omega, s);
  return (plus - minus) / (2.0 * t_step);
}

CurvatureResidual prescribed_curvature_residual(const IndicatorSet& e, const Mask& omega, const ScalarField& f,
                                                const std::vector<VectorFieldX>& fields, const FractionalParams& p,
                                                double steps) {
  const GridSpec& g = *e.grid;
  if (f.grid.get() != e.grid.get()) throw std::invalid_argument("forcing and set live on different grids");
  const auto n = static_cast<std::int64_t>(g.axis_count());
  CurvatureResidual out;
  for (const auto& x : fields) {
    x.validate(omega);
    const double norm = x.sup_norm();
    if (norm == 0.0) {
      out.variations.push_back(0.0);
      out.forcing.push_back(0.0);
      continue;
    }
    const double dp = first_variation_P2s(e, omega, x, p.s, steps * g.h() / norm);
    std::vector<double> terms;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!omega[i] || !e.contains(i)) continue;
      const auto l = g.local(i);
      double div = 0.0;
      for (int d = 0; d < g.dim(); ++d) {
        auto a = l, b = l;
        a[d] += 1;
        b[d] -= 1;
        if (a[d] >= n || b[d] < 0) continue;
        const std::size_t ia = g.flat(a[0], a[1]), ib = g.flat(b[0], b[1]);
        div += (f[ia] * x.components[ia][d] - f[ib] * x.components[ib][d]) / (2.0 * g.h());
      }
      terms.push_back(div);
    }
    const double forcing = g.cell_volume() * pairwise_sum(terms) / p.gamma_ns;
    out.variations.push_back(dp);
    out.forcing.push_back(forcing);
    out.max_residual = std::max(out.max_residual, std::abs(dp - forcing) / x.c1_norm());
  }
  return out;
}

SharmonicReport sharmonic_identity_check(const IndicatorSet& e, const Mask& omega, const FractionalParams& p,
                                         double min_cells, std::size_t max_nodes) {
  const GridSpec& g = *e.grid;
  const NodeSet cand = nodes_of(omega);
  const auto dist = boundary_distance(e, cand);
  NodeSet eligible;
  for (std::size_t k = 0; k < cand.size(); ++k)
    if (dist[k] >= min_cells * g.h() * (1.0 - 1e-12)) eligible.push_back(cand[k]);
  SharmonicReport rep;
  const std::size_t stride = std::max<std::size_t>(1, (eligible.size() + max_nodes - 1) / std::max<std::size_t>(1, max_nodes));
  for (std::size_t k = 0; k < eligible.size(); k += stride) rep.nodes.push_back(eligible[k]);
  rep.nodes_checked = rep.nodes.size();
  const ScalarField v = phase_function(e);
  rep.lhs.resize(rep.nodes.size());
  rep.rhs.resize(rep.nodes.size());
  const auto qn = static_cast<std::int64_t>(g.dim() == 2 ? g.axis_count() : 1);
  parallel_for(rep.nodes.size(), [&](std::size_t b, std::size_t end) {
    std::vector<double> terms;
    for (std::size_t k = b; k < end; ++k) {
      const std::size_t x = rep.nodes[k];
      rep.lhs[k] = frac_laplacian(v, x, p);
      // Mismatch mass: |v(x) - v(y)|^2 = 4 on mismatched pairs.
      const bool m = e.contains(x);
      const auto lx = g.local(x);
      terms.clear();
      for (std::int64_t pp = 0; pp < static_cast<std::int64_t>(g.axis_count()); ++pp)
        for (std::int64_t q = 0; q < qn; ++q)
          if (e.contains(g.flat(pp, q)) != m) terms.push_back(kernel_value(g, p.s, pp - lx[0], q - lx[1]));
      const double mass = pairwise_sum(terms) + tail_mismatch(e, g.point(x), m, p.s);
      rep.rhs[k] = 0.5 * p.gamma_ns * 4.0 * mass * v[x];
    }
  });
  for (std::size_t k = 0; k < rep.nodes.size(); ++k) {
    const double scale = std::max(std::abs(rep.lhs[k]), 1e-300);
    const double err = rep.lhs[k] == rep.rhs[k] ? 0.0 : std::abs(rep.lhs[k] - rep.rhs[k]) / scale;
    rep.max_relative_error = std::max(rep.max_relative_error, err);
  }
  return rep;
}

}  // namespace fracac
