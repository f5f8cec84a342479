#pragma once

#include <vector>

#include "fracac/grid.hpp"

namespace fracac {

// One radial span of the exterior of the truncation box as seen from a point x: the ray
// x + r e(theta) for r in [r0, r1) carries the angular quadrature weight `weight` (1 in 1D).
// `sample` is a point inside the span, used to read piecewise-constant far-field values.
struct TailPiece {
  double weight = 1.0;
  double r0 = 0.0;
  double r1 = 0.0;  // +inf for the unbounded span
  Point sample{0.0, 0.0};
};

// Spans are split wherever one of the given far fields can change value along the ray.
std::vector<TailPiece> tail_pieces(const GridSpec& g, const std::vector<const FarField*>& fields, const Point& x,
                                   int angular_order = 20);

// Integral of r^{-1-2s} over [r0, r1): the radial part of |x-y|^{-n-2s} dy in polar coordinates.
double laplace_radial(double r0, double r1, double s);

// Integral of the Poisson kernel sigma z^{2s} (r^2+z^2)^{-(n+2s)/2} r^{n-1} over [r0, r1).
double poisson_radial(int n, double r0, double r1, double z, double s, double sigma);

// Poisson-kernel mass of {t > X} in 1D: (1/2) I_{z^2/(X^2+z^2)}(s, 1/2).
double poisson_mass_beyond_1d(double X, double z, double s);

// Integral over the tail of value(y) |x-y|^{-n-2s} for a single far field.
double tail_laplace_integral(const GridSpec& g, const FarField& f, const Point& x, double s);
// Kernel mass of the tail region.
double tail_laplace_mass(const GridSpec& g, const Point& x, double s);

}  // namespace fracac
