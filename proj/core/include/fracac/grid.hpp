#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace fracac {

// Points always carry two coordinates; the second one is ignored in 1D.
using Point = std::array<double, 2>;
using NodeSet = std::vector<std::size_t>;
using Mask = std::vector<std::uint8_t>;

struct Omega {
  enum class Shape { Interval, Box, Disc };

  Shape shape = Shape::Interval;
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};
  Point center{0.0, 0.0};
  double radius = 0.0;

  static Omega interval(double a, double b);
  static Omega box(Point lo, Point hi);
  static Omega square(double half_side);
  static Omega disc(Point center, double radius);

  // Open-set membership; nodes closer than `slack` to the boundary count as outside.
  bool contains(const Point& x, int dim, double slack = 0.0) const;
  double diameter(int dim) const;
  // Diameter in the max-norm, matching the axis-aligned truncation box.
  double width(int dim) const;
  // Largest |x_i| over the closure, used to check the truncation margin.
  double extent(int dim) const;
};

struct Hyperplane {
  Point normal{1.0, 0.0};
  double offset = 0.0;
};

// Field values beyond the truncation box: base + scale * prod_i sign(n_i . y - b_i).
struct FarField {
  double base = 0.0;
  double scale = 0.0;
  std::vector<Hyperplane> planes;

  static FarField constant(double c);
  // 1D: value `left` for y < 0 and `right` for y > 0.
  static FarField sides(double left, double right);
  static FarField half_space(Point normal, double offset, double inside = 1.0, double outside = -1.0);
  // sign(y1) * sign(y2), the phase of {y1 y2 > 0}.
  static FarField cross();

  double value(const Point& y, int dim) const;
  FarField negated() const;
  bool is_constant() const { return scale == 0.0 || planes.empty(); }
};

class GridSpec {
public:
  GridSpec(int dim, double h, double offset, std::int64_t kmin, std::int64_t kmax, Omega omega,
           double r_trunc, FarField tail);

  int dim() const { return dim_; }
  double h() const { return h_; }
  double offset() const { return offset_; }
  std::int64_t kmin() const { return kmin_; }
  std::int64_t kmax() const { return kmax_; }
  std::size_t axis_count() const { return static_cast<std::size_t>(kmax_ - kmin_ + 1); }
  std::size_t size() const { return size_; }
  double r_trunc() const { return r_trunc_; }
  // Half-width of the lattice cells' union, i.e. the truncation box is [-L, L]^n.
  double box_edge() const { return box_edge_; }
  double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }
  const Omega& omega() const { return omega_; }
  const FarField& tail() const { return tail_; }

  double coord(std::int64_t k) const { return (static_cast<double>(k) + offset_) * h_; }
  Point point(std::size_t idx) const;
  // Local per-axis indices (0-based) of a flat node index.
  std::array<std::int64_t, 2> local(std::size_t idx) const;
  std::size_t flat(std::int64_t p, std::int64_t q = 0) const;
  // Nearest node to an arbitrary point; returns false when the point lies outside the box.
  bool locate(const Point& x, std::size_t& idx) const;

  const Mask& interior_mask() const { return interior_; }
  bool is_interior(std::size_t idx) const { return interior_[idx] != 0; }
  const NodeSet& interior_nodes() const { return interior_nodes_; }
  std::size_t interior_count() const { return interior_nodes_.size(); }

  // Mask of nodes whose centers lie in a given open set.
  Mask mask_of(const Omega& region) const;

private:
  int dim_;
  double h_;
  double offset_;
  std::int64_t kmin_;
  std::int64_t kmax_;
  std::size_t size_;
  double r_trunc_;
  double box_edge_;
  Omega omega_;
  FarField tail_;
  Mask interior_;
  NodeSet interior_nodes_;
};

using GridPtr = std::shared_ptr<const GridSpec>;

// Lattice x = (k + offset) h covering [-R_trunc, R_trunc]^n. offset is 0 or 1/2.
GridPtr build_grid(int dim, double h, const Omega& omega, double r_trunc, FarField tail,
                   double offset = 0.0);

struct ScalarField {
  GridPtr grid;
  std::vector<double> values;
  FarField tail;

  ScalarField() = default;
  explicit ScalarField(GridPtr g);
  ScalarField(GridPtr g, std::vector<double> v);
  ScalarField(GridPtr g, std::vector<double> v, FarField t);

  static ScalarField from_function(GridPtr g, const std::function<double(const Point&)>& fn);
  static ScalarField constant(GridPtr g, double c);

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  void validate() const;
  // Value at an arbitrary point: nearest node inside the box, tail outside.
  double sample(const Point& x) const;
};

struct IndicatorSet {
  GridPtr grid;
  Mask membership;
  // Phase (+1 inside, -1 outside) of the set beyond the truncation box.
  FarField far;

  IndicatorSet() = default;
  IndicatorSet(GridPtr g, Mask m, FarField f);

  bool contains(std::size_t idx) const { return membership[idx] != 0; }
  bool contains_point(const Point& x) const;
  bool tail_member(const Point& y) const;
  IndicatorSet complement() const;
  std::size_t count() const;
  void validate() const;
};

ScalarField phase_function(const IndicatorSet& e);

NodeSet tubular_neighborhood(const NodeSet& points, double r, const GridSpec& grid);

// Least-squares slope of log N(r) against log(1/r) over the given box sizes.
double box_counting_dimension(const std::vector<Point>& points, int dim, const std::vector<double>& scales);
double box_counting_dimension(const NodeSet& nodes, const GridSpec& grid, const std::vector<double>& scales);

std::vector<Point> node_points(const NodeSet& nodes, const GridSpec& grid);
NodeSet nodes_of(const Mask& mask);
Mask mask_from(const NodeSet& nodes, std::size_t size);

}  // namespace fracac
