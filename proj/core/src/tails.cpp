#include "fracac/tails.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "fracac/quadrature.hpp"

namespace fracac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double t) {
  t = std::fmod(t, kTwoPi);
  return t < 0.0 ? t + kTwoPi : t;
}

// Splits the ray x + r e, r >= r_exit, at plane crossings and appends the spans.
void split_ray(const std::vector<const FarField*>& fields, int dim, const Point& x, const Point& e, double r_exit,
               double weight, std::vector<TailPiece>& out) {
  std::vector<double> cuts;
  for (const auto* f : fields) {
    if (f->is_constant()) continue;
    for (const auto& pl : f->planes) {
      const double ne = pl.normal[0] * e[0] + (dim == 2 ? pl.normal[1] * e[1] : 0.0);
      if (ne == 0.0) continue;
      const double nx = pl.normal[0] * x[0] + (dim == 2 ? pl.normal[1] * x[1] : 0.0);
      const double r = (pl.offset - nx) / ne;
      if (r > r_exit) cuts.push_back(r);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double r0 = r_exit;
  auto emit = [&](double a, double b) {
    const double mid = std::isinf(b) ? 2.0 * a + 1.0 : 0.5 * (a + b);
    out.push_back({weight, a, b, {x[0] + mid * e[0], x[1] + mid * e[1]}});
  };
  for (double c : cuts) {
    if (c > r0) {
      emit(r0, c);
      r0 = c;
    }
  }
  emit(r0, kInf);
}

double exit_distance(double L, const Point& x, const Point& e) {
  double r = kInf;
  for (int d = 0; d < 2; ++d) {
    if (e[d] > 0.0) r = std::min(r, (L - x[d]) / e[d]);
    if (e[d] < 0.0) r = std::min(r, (-L - x[d]) / e[d]);
  }
  return r;
}

}  // namespace

std::vector<TailPiece> tail_pieces(const GridSpec& g, const std::vector<const FarField*>& fields, const Point& x,
                                   int angular_order) {
  const double L = g.box_edge();
  std::vector<TailPiece> out;
  if (g.dim() == 1) {
    split_ray(fields, 1, x, {1.0, 0.0}, L - x[0], 1.0, out);
    split_ray(fields, 1, x, {-1.0, 0.0}, L + x[0], 1.0, out);
    return out;
  }

  std::vector<double> breaks;
  for (double cx : {-L, L})
    for (double cy : {-L, L}) breaks.push_back(wrap(std::atan2(cy - x[1], cx - x[0])));
  for (const auto* f : fields) {
    if (f->is_constant()) continue;
    for (const auto& pl : f->planes) {
      const double tn = std::atan2(pl.normal[1], pl.normal[0]);
      breaks.push_back(wrap(tn + 0.5 * std::numbers::pi));
      breaks.push_back(wrap(tn - 0.5 * std::numbers::pi));
      // Points where the plane meets the box boundary.
      for (int axis = 0; axis < 2; ++axis) {
        const int other = 1 - axis;
        if (pl.normal[other] == 0.0) continue;
        for (double side : {-L, L}) {
          const double t = (pl.offset - pl.normal[axis] * side) / pl.normal[other];
          if (std::abs(t) > L) continue;
          Point p{};
          p[axis] = side;
          p[other] = t;
          breaks.push_back(wrap(std::atan2(p[1] - x[1], p[0] - x[0])));
        }
      }
    }
  }
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> uniq;
  for (double b : breaks)
    if (uniq.empty() || b - uniq.back() > 1e-13) uniq.push_back(b);
  if (uniq.size() > 1 && uniq.front() + kTwoPi - uniq.back() <= 1e-13) uniq.pop_back();
  uniq.push_back(uniq.front() + kTwoPi);

  const GaussRule& rule = gauss_legendre(angular_order);
  for (std::size_t k = 0; k + 1 < uniq.size(); ++k) {
    const double ta = uniq[k];
    const double dt = uniq[k + 1] - ta;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      // Smoothstep substitution clusters nodes at the arc ends, where the integrand may have
      // algebraic endpoint behaviour.
      const double u = 0.5 * (rule.nodes[q] + 1.0);
      const double psi = u * u * (3.0 - 2.0 * u);
      const double dpsi = 6.0 * u * (1.0 - u);
      const double th = ta + dt * psi;
      const double w = 0.5 * rule.weights[q] * dt * dpsi;
      const Point e{std::cos(th), std::sin(th)};
      split_ray(fields, 2, x, e, exit_distance(L, x, e), w, out);
    }
  }
  return out;
}

double laplace_radial(double r0, double r1, double s) {
  const double a = std::pow(r0, -2.0 * s);
  const double b = std::isinf(r1) ? 0.0 : std::pow(r1, -2.0 * s);
  return (a - b) / (2.0 * s);
}

double poisson_mass_beyond_1d(double X, double z, double s) {
  if (std::isinf(X)) return 0.0;
  const double x2 = X * X, z2 = z * z;
  const double t = z2 / (x2 + z2);
  return 0.5 * boost::math::ibeta(s, 0.5, t);
}

double poisson_radial(int n, double r0, double r1, double z, double s, double sigma) {
  if (n == 1) return poisson_mass_beyond_1d(r0, z, s) - poisson_mass_beyond_1d(r1, z, s);
  const double a = std::pow(r0 * r0 + z * z, -s);
  const double b = std::isinf(r1) ? 0.0 : std::pow(r1 * r1 + z * z, -s);
  return sigma * std::pow(z, 2.0 * s) * (a - b) / (2.0 * s);
}

double tail_laplace_integral(const GridSpec& g, const FarField& f, const Point& x, double s) {
  const auto pieces = tail_pieces(g, {&f}, x);
  double acc = 0.0;
  for (const auto& p : pieces) acc += p.weight * f.value(p.sample, g.dim()) * laplace_radial(p.r0, p.r1, s);
  return acc;
}

double tail_laplace_mass(const GridSpec& g, const Point& x, double s) {
  const auto pieces = tail_pieces(g, {}, x);
  double acc = 0.0;
  for (const auto& p : pieces) acc += p.weight * laplace_radial(p.r0, p.r1, s);
  return acc;
}

}  // namespace fracac
