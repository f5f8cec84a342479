#include "fracac/extension.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fracac/fractional.hpp"
#include "fracac/parallel.hpp"
#include "fracac/quadrature.hpp"
#include "fracac/summation.hpp"
#include "fracac/tails.hpp"

namespace fracac {

namespace {

// 1D cumulative Poisson mass of (0, t) for t >= 0.
double mass_to_1d(double t, double z, double s) { return 0.5 - poisson_mass_beyond_1d(t, z, s); }

double kernel_1d(double t, double z, double s, double sigma) {
  return sigma * std::pow(z, 2.0 * s) * std::pow(t * t + z * z, -0.5 - s);
}

double kernel_2d(double t, double u, double z, double s, double sigma) {
  return sigma * std::pow(z, 2.0 * s) * std::pow(t * t + u * u + z * z, -1.0 - s);
}

double gauss_cell_1d(double a, double b, double z, double s, double sigma, int order) {
  const GaussRule& r = gauss_legendre(order);
  const double c = 0.5 * (a + b), w = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t q = 0; q < r.nodes.size(); ++q) acc += r.weights[q] * kernel_1d(c + w * r.nodes[q], z, s, sigma);
  return w * acc;
}

double gauss_cell_2d(double a0, double b0, double a1, double b1, double z, double s, double sigma, int order) {
  const GaussRule& r = gauss_legendre(order);
  const double c0 = 0.5 * (a0 + b0), w0 = 0.5 * (b0 - a0);
  const double c1 = 0.5 * (a1 + b1), w1 = 0.5 * (b1 - a1);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i)
    for (std::size_t j = 0; j < r.nodes.size(); ++j)
      acc += r.weights[i] * r.weights[j] * kernel_2d(c0 + w0 * r.nodes[i], c1 + w1 * r.nodes[j], z, s, sigma);
  return w0 * w1 * acc;
}

// int_0^W (1 + w^2)^{-1-s} dw, odd in W.
double inner_primitive(double W, double s) {
  const double w2 = W * W;
  const double val = 0.5 * boost::math::beta(0.5, 0.5 + s) * boost::math::ibeta(0.5, 0.5 + s, w2 / (1.0 + w2));
  return W >= 0.0 ? val : -val;
}

// Kernel mass of the rectangle [0, X] x [0, Y], X, Y >= 0. With t = z sinh(tau) the outer
// integrand sigma cosh(tau)^{-2s} J(Y / (z cosh tau)) is smooth on the scale of tau.
double corner_mass(double X, double Y, double z, double s, double sigma) {
  if (X <= 0.0 || Y <= 0.0) return 0.0;
  const double T = std::asinh(X / z);
  const int pieces = std::max(1, static_cast<int>(std::ceil(T / 0.75)));
  const GaussRule& r = gauss_legendre(20);
  double acc = 0.0;
  for (int k = 0; k < pieces; ++k) {
    const double lo = T * k / pieces, hi = T * (k + 1) / pieces;
    const double c = 0.5 * (lo + hi), w = 0.5 * (hi - lo);
    double part = 0.0;
    for (std::size_t q = 0; q < r.nodes.size(); ++q) {
      const double ch = std::cosh(c + w * r.nodes[q]);
      part += r.weights[q] * std::pow(ch, -2.0 * s) * inner_primitive(Y / (z * ch), s);
    }
    acc += w * part;
  }
  return sigma * acc;
}

double signed_corner_mass(double X, double Y, double z, double s, double sigma) {
  const double m = corner_mass(std::abs(X), std::abs(Y), z, s, sigma);
  return (X < 0.0) != (Y < 0.0) ? -m : m;
}

double exact_cell_2d(double a0, double b0, double a1, double b1, double z, double s, double sigma) {
  return signed_corner_mass(b0, b1, z, s, sigma) - signed_corner_mass(a0, b1, z, s, sigma) -
         signed_corner_mass(b0, a1, z, s, sigma) + signed_corner_mass(a0, a1, z, s, sigma);
}

// Tail contributions for one footprint node, evaluated at every level.
class PoissonTail {
public:
  PoissonTail(const GridSpec& g, const FarField& f, const Point& x, double s, double sigma)
      : dim_(g.dim()), s_(s), sigma_(sigma) {
    for (const auto& piece : tail_pieces(g, {&f}, x)) {
      const double wv = piece.weight * f.value(piece.sample, g.dim());
      if (wv == 0.0) continue;
      pieces_.push_back({wv, piece.r0, piece.r1});
      rmin_ = std::min(rmin_, piece.r0);
    }
    if (dim_ == 2 && !pieces_.empty()) {
      moments_.assign(kTerms, 0.0);
      for (int k = 0; k < kTerms; ++k) {
        std::vector<double> terms;
        for (const auto& pc : pieces_) {
          const double e = -2.0 * s - 2.0 * k;
          terms.push_back(pc.wv * (std::pow(pc.r0, e) - (std::isinf(pc.r1) ? 0.0 : std::pow(pc.r1, e))));
        }
        moments_[k] = pairwise_sum(terms);
      }
    }
  }

  double operator()(double z) const {
    if (pieces_.empty()) return 0.0;
    if (dim_ == 2 && z < 0.5 * rmin_) {
      // (r^2 + z^2)^{-s} = sum_k binom(-s, k) r^{-2s-2k} z^{2k}
      double c = 1.0, zk = 1.0, acc = 0.0;
      for (int k = 0; k < kTerms; ++k) {
        acc += c * zk * moments_[k];
        c *= (-s_ - k) / (k + 1.0);
        zk *= z * z;
      }
      return sigma_ * std::pow(z, 2.0 * s_) * acc / (2.0 * s_);
    }
    double acc = 0.0;
    for (const auto& pc : pieces_) acc += pc.wv * poisson_radial(dim_, pc.r0, pc.r1, z, s_, sigma_);
    return acc;
  }

private:
  static constexpr int kTerms = 30;
  struct Piece {
    double wv, r0, r1;
  };
  int dim_;
  double s_, sigma_;
  double rmin_ = std::numeric_limits<double>::infinity();
  std::vector<Piece> pieces_;
  std::vector<double> moments_;
};

}  // namespace

std::size_t ExtensionGrid::slot(std::size_t base_node) const {
  if (!carries(base_node)) throw std::out_of_range("node outside the extension footprint");
  const auto l = base->local(base_node);
  return footprint.flat(l[0], l[1]);
}

bool ExtensionGrid::carries(std::size_t base_node) const {
  const auto l = base->local(base_node);
  for (int d = 0; d < 2; ++d)
    if (l[d] < footprint.lo[d] || l[d] >= footprint.lo[d] + footprint.extent[d]) return false;
  return true;
}

std::size_t ExtensionGrid::base_node(std::size_t k) const {
  const auto p = static_cast<std::int64_t>(k) / footprint.extent[1];
  const auto q = static_cast<std::int64_t>(k) % footprint.extent[1];
  return base->flat(footprint.lo[0] + p, footprint.lo[1] + q);
}

double ExtensionGrid::weight_between(double lo, double hi) const {
  if (hi <= lo) return 0.0;
  return (std::pow(hi, 1.0 + a) - std::pow(lo, 1.0 + a)) / (1.0 + a);
}

ExtensionGrid make_extension_grid(GridPtr base, double s, Point lo, Point hi, double z_min, double z_max,
                                  double ratio) {
  if (!base) throw std::invalid_argument("extension grid needs a base grid");
  if (!(s > 0.0 && s < 0.5)) throw std::invalid_argument("s must lie in (0, 1/2)");
  if (!(z_min > 0.0)) throw std::invalid_argument("z_min must be positive");
  if (z_max < base->omega().diameter(base->dim()) || z_max <= z_min)
    throw std::invalid_argument("z_max must be at least diam(Omega)");
  if (!(ratio > 1.0 && ratio <= 2.0)) throw std::invalid_argument("z ratio must lie in (1, 2]");

  ExtensionGrid eg;
  eg.base = base;
  eg.s = s;
  eg.a = 1.0 - 2.0 * s;
  eg.z.push_back(0.0);
  for (double z = z_min;; z *= ratio) {
    eg.z.push_back(z);
    if (z >= z_max) break;
  }
  for (std::size_t j = 0; j + 1 < eg.z.size(); ++j) eg.cell_weights.push_back(eg.weight_between(eg.z[j], eg.z[j + 1]));

  const GridSpec& g = *base;
  const double tol = 1e-9 * g.h();
  eg.footprint.dim = g.dim();
  for (int d = 0; d < g.dim(); ++d) {
    if (hi[d] < lo[d]) throw std::invalid_argument("empty extension footprint");
    std::int64_t kl = g.kmax() + 1, kh = g.kmin() - 1;
    for (std::int64_t k = g.kmin(); k <= g.kmax(); ++k) {
      const double c = g.coord(k);
      if (c >= lo[d] - tol && c <= hi[d] + tol) {
        kl = std::min(kl, k);
        kh = std::max(kh, k);
      }
    }
    if (kh < kl) throw std::invalid_argument("empty extension footprint");
    if (kl == g.kmin() || kh == g.kmax()) throw std::invalid_argument("extension footprint reaches the truncation box");
    eg.footprint.lo[d] = kl - g.kmin();
    eg.footprint.extent[d] = kh - kl + 1;
  }
  return eg;
}

double poisson_kernel(const Point& x_offset, double z, const FractionalParams& p) {
  if (!(z > 0.0)) throw std::invalid_argument("poisson kernel needs z > 0");
  const double r2 = x_offset[0] * x_offset[0] + (p.n == 2 ? x_offset[1] * x_offset[1] : 0.0);
  return p.sigma_ns * std::pow(z, 2.0 * p.s) * std::pow(r2 + z * z, -0.5 * (p.n + 2.0 * p.s));
}

double poisson_cell_mass(int dim, double h, double s, double sigma, std::int64_t di, std::int64_t dj, double z) {
  di = di < 0 ? -di : di;
  dj = dj < 0 ? -dj : dj;
  const double a0 = (static_cast<double>(di) - 0.5) * h, b0 = a0 + h;
  if (dim == 1) {
    if (di <= 8) {
      if (di == 0) return 2.0 * mass_to_1d(0.5 * h, z, s);
      return poisson_mass_beyond_1d(a0, z, s) - poisson_mass_beyond_1d(b0, z, s);
    }
    return gauss_cell_1d(a0, b0, z, s, sigma, di <= 64 ? 4 : 2);
  }
  const double a1 = (static_cast<double>(dj) - 0.5) * h, b1 = a1 + h;
  const std::int64_t m = std::max(di, dj);
  if (m <= 3 && z < 4.0 * h) return exact_cell_2d(a0, b0, a1, b1, z, s, sigma);
  return gauss_cell_2d(a0, b0, a1, b1, z, s, sigma, m <= 16 ? 4 : 2);
}

ExtensionField extend(const ScalarField& v, const ExtensionGrid& eg, const FractionalParams& p, ConvMethod method) {
  if (!v.grid || v.grid.get() != eg.base.get()) throw std::invalid_argument("field and extension grid differ");
  v.validate();
  const GridSpec& g = *eg.base;
  const std::size_t nn = eg.nodes();
  const std::size_t nl = eg.levels();

  ExtensionField u;
  u.grid = &eg;
  u.boundary_trace = v;
  u.values.assign(nl * nn, 0.0);
  for (std::size_t k = 0; k < nn; ++k) u.values[k] = v.values[eg.base_node(k)];

  const IndexBox src = full_box(g);
  const std::size_t ext = g.axis_count();
  const std::size_t stride = g.dim() == 2 ? ext : 1;
  parallel_for(nl - 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b + 1; j < e + 1; ++j) {
      const double z = eg.z[j];
      std::vector<double> table(ext * stride);
      for (std::size_t i = 0; i < ext; ++i)
        for (std::size_t q = 0; q < stride; ++q)
          table[i * stride + q] = poisson_cell_mass(g.dim(), g.h(), p.s, p.sigma_ns, static_cast<std::int64_t>(i),
                                                    static_cast<std::int64_t>(q), z);
      const Stencil st = [&](std::int64_t di, std::int64_t dj) {
        return table[static_cast<std::size_t>(std::abs(di)) * stride + static_cast<std::size_t>(std::abs(dj))];
      };
      const Convolver conv(src, eg.footprint, st, method);
      const auto c = conv.apply(v.values);
      for (std::size_t k = 0; k < nn; ++k) u.values[j * nn + k] = c[k];
    }
  });

  // Exterior of the truncation box.
  parallel_for(nn, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const PoissonTail tail(g, v.tail, g.point(eg.base_node(k)), p.s, p.sigma_ns);
      for (std::size_t j = 1; j < nl; ++j) u.values[j * nn + k] += tail(eg.z[j]);
    }
  });
  return u;
}

HalfRegion HalfRegion::ball(Point center, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("half-ball radius must be positive");
  HalfRegion h;
  h.kind = Kind::Ball;
  h.center = center;
  h.radius = r;
  h.z_top = r;
  return h;
}

HalfRegion HalfRegion::box(Point lo, Point hi, double z_top) {
  if (!(z_top > 0.0)) throw std::invalid_argument("half-box height must be positive");
  HalfRegion h;
  h.kind = Kind::Box;
  h.lo = lo;
  h.hi = hi;
  h.z_top = z_top;
  return h;
}

namespace {

struct RegionNode {
  std::size_t slot;
  Point x;
};

// Footprint nodes whose centers lie in the region's base; they and their axis neighbours must be carried.
std::vector<RegionNode> region_nodes(const ExtensionGrid& eg, const HalfRegion& r) {
  const GridSpec& g = *eg.base;
  const int n = g.dim();
  if (r.z_top > eg.z.back() * (1.0 + 1e-12)) throw std::invalid_argument("region outside the extension grid");
  std::vector<RegionNode> out;
  for (std::size_t k = 0; k < eg.nodes(); ++k) {
    const Point x = g.point(eg.base_node(k));
    bool in = true;
    if (r.kind == HalfRegion::Kind::Ball) {
      double d2 = 0.0;
      for (int d = 0; d < n; ++d) d2 += (x[d] - r.center[d]) * (x[d] - r.center[d]);
      in = d2 < r.radius * r.radius;
    } else {
      for (int d = 0; d < n; ++d) in = in && x[d] >= r.lo[d] - 1e-12 && x[d] <= r.hi[d] + 1e-12;
    }
    if (in) out.push_back({k, x});
  }
  // The base of the region must sit strictly inside the footprint.
  double reach_lo[2], reach_hi[2];
  for (int d = 0; d < n; ++d) {
    reach_lo[d] = r.kind == HalfRegion::Kind::Ball ? r.center[d] - r.radius : r.lo[d];
    reach_hi[d] = r.kind == HalfRegion::Kind::Ball ? r.center[d] + r.radius : r.hi[d];
    const double flo = g.coord(g.kmin() + eg.footprint.lo[d]);
    const double fhi = g.coord(g.kmin() + eg.footprint.lo[d] + eg.footprint.extent[d] - 1);
    if (reach_lo[d] < flo + g.h() * (1.0 - 1e-9) || reach_hi[d] > fhi - g.h() * (1.0 - 1e-9))
      throw std::invalid_argument("region outside the extension footprint");
  }
  return out;
}

double z_cap(const HalfRegion& r, const Point& x, int n) {
  if (r.kind == HalfRegion::Kind::Box) return r.z_top;
  double d2 = 0.0;
  for (int d = 0; d < n; ++d) d2 += (x[d] - r.center[d]) * (x[d] - r.center[d]);
  return std::sqrt(std::max(0.0, r.radius * r.radius - d2));
}

// Central-difference x-gradient of level j at a footprint slot.
std::array<double, 2> x_gradient(const ExtensionField& u, std::size_t j, std::size_t slot) {
  const ExtensionGrid& eg = *u.grid;
  const auto ext = eg.footprint.extent;
  const auto p = static_cast<std::int64_t>(slot) / ext[1];
  const auto q = static_cast<std::int64_t>(slot) % ext[1];
  const double h = eg.base->h();
  const std::size_t nn = eg.nodes();
  auto at = [&](std::int64_t pp, std::int64_t qq) { return u.values[j * nn + static_cast<std::size_t>(pp * ext[1] + qq)]; };
  std::array<double, 2> gr{0.0, 0.0};
  gr[0] = (at(p + 1, q) - at(p - 1, q)) / (2.0 * h);
  if (eg.base->dim() == 2) gr[1] = (at(p, q + 1) - at(p, q - 1)) / (2.0 * h);
  return gr;
}

}  // namespace

double weighted_energy(const ExtensionField& u, const HalfRegion& region, const FractionalParams& p) {
  const ExtensionGrid& eg = *u.grid;
  const auto nodes = region_nodes(eg, region);
  const std::size_t nn = eg.nodes();
  const int n = eg.base->dim();
  std::vector<double> per(nodes.size(), 0.0);
  parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) {
      const double cap = z_cap(region, nodes[t].x, n);
      std::vector<double> terms;
      auto g_lo = x_gradient(u, 0, nodes[t].slot);
      for (std::size_t j = 0; j + 1 < eg.levels() && eg.z[j] < cap; ++j) {
        const auto g_hi = x_gradient(u, j + 1, nodes[t].slot);
        const double w = eg.weight_between(eg.z[j], std::min(eg.z[j + 1], cap));
        const double dz = (u.values[(j + 1) * nn + nodes[t].slot] - u.values[j * nn + nodes[t].slot]) /
                          (eg.z[j + 1] - eg.z[j]);
        const double gx = 0.5 * (g_lo[0] * g_lo[0] + g_lo[1] * g_lo[1] + g_hi[0] * g_hi[0] + g_hi[1] * g_hi[1]);
        // Below z_1 the profile behaves like z^{2s}; integrate that model exactly instead of
        // treating the slope as constant (off by 1/(2s(1+a)), large for small s).
        const double zfac = j == 0 ? 2.0 * p.s * (1.0 + p.a) : 1.0;
        terms.push_back(w * (zfac * dz * dz + gx));
        g_lo = g_hi;
      }
      per[t] = pairwise_sum(terms);
    }
  });
  return 0.5 * p.d_s * eg.base->cell_volume() * pairwise_sum(per);
}

double radial_deficit(const ExtensionField& u, const Point& x0, double rho, double r, const FractionalParams& p) {
  if (!(rho >= 0.0 && r > rho)) throw std::invalid_argument("deficit needs 0 <= rho < r");
  const ExtensionGrid& eg = *u.grid;
  const auto nodes = region_nodes(eg, HalfRegion::ball(x0, r));
  const std::size_t nn = eg.nodes();
  const int n = eg.base->dim();
  std::vector<double> per(nodes.size(), 0.0);
  parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) {
      const Point& x = nodes[t].x;
      double d2 = 0.0;
      for (int d = 0; d < n; ++d) d2 += (x[d] - x0[d]) * (x[d] - x0[d]);
      const double zlo = std::sqrt(std::max(0.0, rho * rho - d2));
      const double zhi = std::sqrt(std::max(0.0, r * r - d2));
      std::vector<double> terms;
      for (std::size_t j = 0; j + 1 < eg.levels() && eg.z[j] < zhi; ++j) {
        const double a = std::max(eg.z[j], zlo), c = std::min(eg.z[j + 1], zhi);
        if (c <= a) continue;
        const double w = eg.weight_between(a, c);
        const double zm = 0.5 * (a + c);
        const auto g0 = x_gradient(u, j, nodes[t].slot);
        const auto g1 = x_gradient(u, j + 1, nodes[t].slot);
        const double dz = (u.values[(j + 1) * nn + nodes[t].slot] - u.values[j * nn + nodes[t].slot]) /
                          (eg.z[j + 1] - eg.z[j]);
        const double lam = (zm - eg.z[j]) / (eg.z[j + 1] - eg.z[j]);
        double radial = zm * dz;
        for (int d = 0; d < n; ++d) radial += (x[d] - x0[d]) * ((1.0 - lam) * g0[d] + lam * g1[d]);
        const double R2 = d2 + zm * zm;
        terms.push_back(w * radial * radial * std::pow(R2, -0.5 * (n + 2.0 - 2.0 * p.s)));
      }
      per[t] = pairwise_sum(terms);
    }
  });
  return p.d_s * eg.base->cell_volume() * pairwise_sum(per);
}

double dz2s_trace(const ExtensionField& u, std::size_t base_node, const FractionalParams& p) {
  const ExtensionGrid& eg = *u.grid;
  const std::size_t k = eg.slot(base_node);
  const double limit = 1e-2 * eg.base->omega().diameter(eg.base->dim());
  std::size_t small = 0;
  for (std::size_t j = 1; j < eg.levels(); ++j)
    if (eg.z[j] < limit) ++small;
  if (small < 3) throw std::invalid_argument("insufficient z-levels near the boundary");
  const std::size_t nn = eg.nodes();
  auto quotient = [&](std::size_t j) {
    return 2.0 * p.s * (u.values[k] - u.values[j * nn + k]) / std::pow(eg.z[j], 2.0 * p.s);
  };
  // The quotient is analytic in z^2 once z is well below h.
  const double z1 = eg.z[1], z2 = eg.z[2];
  return (z2 * z2 * quotient(1) - z1 * z1 * quotient(2)) / (z2 * z2 - z1 * z1);
}

std::string extension_slice_csv(const ExtensionField& u, std::size_t level) {
  const ExtensionGrid& eg = *u.grid;
  if (level >= eg.levels()) throw std::out_of_range("extension level out of range");
  std::ostringstream os;
  os.precision(17);
  os << (eg.base->dim() == 2 ? "x,y,z,value\n" : "x,z,value\n");
  for (std::size_t k = 0; k < eg.nodes(); ++k) {
    const Point x = eg.base->point(eg.base_node(k));
    os << x[0] << ',';
    if (eg.base->dim() == 2) os << x[1] << ',';
    os << eg.z[level] << ',' << u.at(level, k) << '\n';
  }
  return os.str();
}

}  // namespace fracac
