#pragma once

#include <string>
#include <vector>

#include "fracac/convolution.hpp"
#include "fracac/grid.hpp"
#include "fracac/params.hpp"

namespace fracac {

// Upper half-space over a block of base-grid nodes. Level 0 is the trace z = 0; levels 1.. are
// z_min rho^{j-1}, the last one being the first to reach z_max. cell_weights[j] is the exact
// integral of z^a over [z_j, z_{j+1}].
struct ExtensionGrid {
  GridPtr base;
  double s = 0.25;
  double a = 0.5;
  std::vector<double> z;
  std::vector<double> cell_weights;
  IndexBox footprint;

  std::size_t levels() const { return z.size(); }
  std::size_t nodes() const { return footprint.size(); }
  // Flat index of a base node inside the footprint; throws if it is not carried.
  std::size_t slot(std::size_t base_node) const;
  bool carries(std::size_t base_node) const;
  std::size_t base_node(std::size_t slot) const;
  // Integral of z^a over [lo, hi].
  double weight_between(double lo, double hi) const;
};

// Footprint = base nodes with coordinates in [lo, hi] (per axis).
ExtensionGrid make_extension_grid(GridPtr base, double s, Point lo, Point hi, double z_min, double z_max,
                                  double ratio = 1.25);

struct ExtensionField {
  const ExtensionGrid* grid = nullptr;
  // values[level * nodes + slot]
  std::vector<double> values;
  ScalarField boundary_trace;

  double at(std::size_t level, std::size_t slot) const { return values[level * grid->nodes() + slot]; }
};

// sigma_{n,s} z^{2s} / (|x|^2 + z^2)^{(n+2s)/2}.
double poisson_kernel(const Point& x_offset, double z, const FractionalParams& p);

// Mass of the Poisson kernel at height z over the lattice cell of offset (di, dj).
double poisson_cell_mass(int dim, double h, double s, double sigma, std::int64_t di, std::int64_t dj, double z);

ExtensionField extend(const ScalarField& v, const ExtensionGrid& eg, const FractionalParams& p,
                      ConvMethod method = ConvMethod::Auto);

struct HalfRegion {
  enum class Kind { Ball, Box };
  Kind kind = Kind::Ball;
  Point center{0.0, 0.0};
  double radius = 1.0;
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};
  double z_top = 0.0;

  static HalfRegion ball(Point center, double r);
  static HalfRegion box(Point lo, Point hi, double z_top);
};

// (d_s/2) sum over cells of z^a |grad u|^2 h^n; z-cells are clipped to the region exactly.
double weighted_energy(const ExtensionField& u, const HalfRegion& region, const FractionalParams& p);

// Same integrand restricted to the radial part ((x-x0).grad u)^2 / |X-X0|^{n+2-2s}, the
// deficit of the monotonicity formula between the radii rho < r.
double radial_deficit(const ExtensionField& u, const Point& x0, double rho, double r, const FractionalParams& p);

// Richardson limit of 2s (u(x,0) - u(x,z)) / z^{2s} as z -> 0.
double dz2s_trace(const ExtensionField& u, std::size_t base_node, const FractionalParams& p);

// CSV rows x[,y],z,value for one level.
std::string extension_slice_csv(const ExtensionField& u, std::size_t level);

}  // namespace fracac
