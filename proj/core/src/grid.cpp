#include "fracac/grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

namespace fracac {

namespace {

double signum(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Omega Omega::interval(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("empty interval");
  Omega o;
  o.shape = Shape::Interval;
  o.lo = {a, 0.0};
  o.hi = {b, 0.0};
  return o;
}

Omega Omega::box(Point lo, Point hi) {
  if (!(lo[0] < hi[0]) || !(lo[1] < hi[1])) throw std::invalid_argument("empty box");
  Omega o;
  o.shape = Shape::Box;
  o.lo = lo;
  o.hi = hi;
  return o;
}

Omega Omega::square(double half_side) { return box({-half_side, -half_side}, {half_side, half_side}); }

Omega Omega::disc(Point center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("empty disc");
  Omega o;
  o.shape = Shape::Disc;
  o.center = center;
  o.radius = radius;
  return o;
}

bool Omega::contains(const Point& x, int dim, double slack) const {
  switch (shape) {
    case Shape::Interval:
      return x[0] > lo[0] + slack && x[0] < hi[0] - slack;
    case Shape::Box:
      if (!(x[0] > lo[0] + slack && x[0] < hi[0] - slack)) return false;
      return dim == 1 || (x[1] > lo[1] + slack && x[1] < hi[1] - slack);
    case Shape::Disc: {
      const double dx = x[0] - center[0];
      const double dy = dim == 1 ? 0.0 : x[1] - center[1];
      return std::sqrt(dx * dx + dy * dy) < radius - slack;
    }
  }
  return false;
}

double Omega::diameter(int dim) const {
  switch (shape) {
    case Shape::Interval:
      return hi[0] - lo[0];
    case Shape::Box:
      if (dim == 1) return hi[0] - lo[0];
      return std::hypot(hi[0] - lo[0], hi[1] - lo[1]);
    case Shape::Disc:
      return 2.0 * radius;
  }
  return 0.0;
}

double Omega::width(int dim) const {
  switch (shape) {
    case Shape::Interval:
      return hi[0] - lo[0];
    case Shape::Box:
      return dim == 1 ? hi[0] - lo[0] : std::max(hi[0] - lo[0], hi[1] - lo[1]);
    case Shape::Disc:
      return 2.0 * radius;
  }
  return 0.0;
}

double Omega::extent(int dim) const {
  switch (shape) {
    case Shape::Interval:
      return std::max(std::abs(lo[0]), std::abs(hi[0]));
    case Shape::Box: {
      double e = std::max(std::abs(lo[0]), std::abs(hi[0]));
      if (dim == 2) e = std::max({e, std::abs(lo[1]), std::abs(hi[1])});
      return e;
    }
    case Shape::Disc: {
      double e = std::abs(center[0]) + radius;
      if (dim == 2) e = std::max(e, std::abs(center[1]) + radius);
      return e;
    }
  }
  return 0.0;
}

FarField FarField::constant(double c) {
  FarField f;
  f.base = c;
  return f;
}

FarField FarField::sides(double left, double right) {
  FarField f;
  f.base = 0.5 * (left + right);
  f.scale = 0.5 * (right - left);
  f.planes.push_back({{1.0, 0.0}, 0.0});
  return f;
}

FarField FarField::half_space(Point normal, double offset, double inside, double outside) {
  const double norm = std::hypot(normal[0], normal[1]);
  if (!(norm > 0.0)) throw std::invalid_argument("half-space normal must be nonzero");
  FarField f;
  f.base = 0.5 * (inside + outside);
  f.scale = 0.5 * (inside - outside);
  f.planes.push_back({{normal[0] / norm, normal[1] / norm}, offset / norm});
  return f;
}

FarField FarField::cross() {
  FarField f;
  f.scale = 1.0;
  f.planes.push_back({{1.0, 0.0}, 0.0});
  f.planes.push_back({{0.0, 1.0}, 0.0});
  return f;
}

double FarField::value(const Point& y, int dim) const {
  double prod = 1.0;
  for (const auto& pl : planes) {
    const double d = pl.normal[0] * y[0] + (dim == 2 ? pl.normal[1] * y[1] : 0.0) - pl.offset;
    prod *= signum(d);
  }
  return base + scale * prod;
}

FarField FarField::negated() const {
  FarField f = *this;
  f.base = -base;
  f.scale = -scale;
  return f;
}

GridSpec::GridSpec(int dim, double h, double offset, std::int64_t kmin, std::int64_t kmax, Omega omega,
                   double r_trunc, FarField tail)
    : dim_(dim),
      h_(h),
      offset_(offset),
      kmin_(kmin),
      kmax_(kmax),
      r_trunc_(r_trunc),
      omega_(omega),
      tail_(std::move(tail)) {
  const std::size_t n = axis_count();
  size_ = dim == 1 ? n : n * n;
  box_edge_ = (static_cast<double>(kmax_) + offset_ + 0.5) * h_;
  interior_.assign(size_, 0);
  const double slack = 1e-9 * h_;
  for (std::size_t i = 0; i < size_; ++i) {
    if (omega_.contains(point(i), dim_, slack)) {
      interior_[i] = 1;
      interior_nodes_.push_back(i);
    }
  }
}

Point GridSpec::point(std::size_t idx) const {
  if (dim_ == 1) return {coord(kmin_ + static_cast<std::int64_t>(idx)), 0.0};
  const auto l = local(idx);
  return {coord(kmin_ + l[0]), coord(kmin_ + l[1])};
}

std::array<std::int64_t, 2> GridSpec::local(std::size_t idx) const {
  if (dim_ == 1) return {static_cast<std::int64_t>(idx), 0};
  const std::size_t n = axis_count();
  return {static_cast<std::int64_t>(idx / n), static_cast<std::int64_t>(idx % n)};
}

std::size_t GridSpec::flat(std::int64_t p, std::int64_t q) const {
  if (dim_ == 1) return static_cast<std::size_t>(p);
  return static_cast<std::size_t>(p) * axis_count() + static_cast<std::size_t>(q);
}

bool GridSpec::locate(const Point& x, std::size_t& idx) const {
  std::array<std::int64_t, 2> loc{0, 0};
  for (int d = 0; d < dim_; ++d) {
    if (std::abs(x[d]) > box_edge_) return false;
    auto k = static_cast<std::int64_t>(std::llround(x[d] / h_ - offset_));
    k = std::clamp(k, kmin_, kmax_);
    loc[d] = k - kmin_;
  }
  idx = flat(loc[0], loc[1]);
  return true;
}

Mask GridSpec::mask_of(const Omega& region) const {
  Mask m(size_, 0);
  const double slack = 1e-9 * h_;
  for (std::size_t i = 0; i < size_; ++i) m[i] = region.contains(point(i), dim_, slack) ? 1 : 0;
  return m;
}

namespace {

bool connected(const GridSpec& g) {
  const auto& nodes = g.interior_nodes();
  if (nodes.empty()) return false;
  const auto& mask = g.interior_mask();
  std::vector<std::uint8_t> seen(g.size(), 0);
  std::deque<std::size_t> queue{nodes.front()};
  seen[nodes.front()] = 1;
  std::size_t reached = 0;
  const auto n = static_cast<std::int64_t>(g.axis_count());
  while (!queue.empty()) {
    const std::size_t cur = queue.front();
    queue.pop_front();
    ++reached;
    const auto l = g.local(cur);
    const std::array<std::array<std::int64_t, 2>, 4> steps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    for (int k = 0; k < (g.dim() == 1 ? 2 : 4); ++k) {
      const std::int64_t p = l[0] + steps[k][0];
      const std::int64_t q = l[1] + steps[k][1];
      if (p < 0 || p >= n || q < 0 || (g.dim() == 2 && q >= n)) continue;
      const std::size_t nb = g.flat(p, q);
      if (mask[nb] && !seen[nb]) {
        seen[nb] = 1;
        queue.push_back(nb);
      }
    }
  }
  return reached == nodes.size();
}

}  // namespace

GridPtr build_grid(int dim, double h, const Omega& omega, double r_trunc, FarField tail, double offset) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("dimension must be 1 or 2");
  if (!(h > 0.0)) throw std::invalid_argument("nonpositive spacing");
  if (offset != 0.0 && offset != 0.5) throw std::invalid_argument("lattice offset must be 0 or 1/2");
  if (dim == 1 && omega.shape != Omega::Shape::Interval)
    throw std::invalid_argument("1D domains must be intervals");
  if (dim == 2 && omega.shape == Omega::Shape::Interval)
    throw std::invalid_argument("2D domains must be boxes or discs");
  const double width = omega.width(dim);
  if (!(r_trunc >= 4.0 * width * (1.0 - 1e-12)))
    throw std::invalid_argument("truncation radius must be at least 4 diam(Omega)");
  if (!(omega.extent(dim) < r_trunc - h)) throw std::invalid_argument("Omega touches the truncation boundary");

  const auto k = static_cast<std::int64_t>(std::ceil(r_trunc / h - 1e-9));
  const std::int64_t kmin = -k;
  const std::int64_t kmax = offset == 0.0 ? k : k - 1;
  auto g = std::make_shared<GridSpec>(dim, h, offset, kmin, kmax, omega, r_trunc, std::move(tail));
  if (g->interior_count() == 0) throw std::invalid_argument("empty Omega: no interior nodes");
  if (!connected(*g)) throw std::invalid_argument("interior nodes are not connected");
  return g;
}

ScalarField::ScalarField(GridPtr g) : grid(std::move(g)) {
  values.assign(grid->size(), 0.0);
  tail = grid->tail();
}

ScalarField::ScalarField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  tail = grid->tail();
  validate();
}

ScalarField::ScalarField(GridPtr g, std::vector<double> v, FarField t)
    : grid(std::move(g)), values(std::move(v)), tail(std::move(t)) {
  validate();
}

ScalarField ScalarField::from_function(GridPtr g, const std::function<double(const Point&)>& fn) {
  ScalarField f(g);
  for (std::size_t i = 0; i < g->size(); ++i) f.values[i] = fn(g->point(i));
  f.validate();
  return f;
}

ScalarField ScalarField::constant(GridPtr g, double c) {
  ScalarField f(g);
  std::fill(f.values.begin(), f.values.end(), c);
  f.tail = FarField::constant(c);
  return f;
}

void ScalarField::validate() const {
  if (!grid) throw std::invalid_argument("field without grid");
  if (values.size() != grid->size()) throw std::invalid_argument("value count differs from node count");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite field value");
}

double ScalarField::sample(const Point& x) const {
  std::size_t idx = 0;
  if (grid->locate(x, idx)) return values[idx];
  return tail.value(x, grid->dim());
}

IndicatorSet::IndicatorSet(GridPtr g, Mask m, FarField f)
    : grid(std::move(g)), membership(std::move(m)), far(std::move(f)) {
  validate();
}

bool IndicatorSet::contains_point(const Point& x) const {
  std::size_t idx = 0;
  if (grid->locate(x, idx)) return membership[idx] != 0;
  return tail_member(x);
}

bool IndicatorSet::tail_member(const Point& y) const { return far.value(y, grid->dim()) > 0.0; }

IndicatorSet IndicatorSet::complement() const {
  Mask m(membership.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = membership[i] ? 0 : 1;
  return IndicatorSet(grid, std::move(m), far.negated());
}

std::size_t IndicatorSet::count() const {
  return static_cast<std::size_t>(std::count(membership.begin(), membership.end(), 1));
}

void IndicatorSet::validate() const {
  if (!grid) throw std::invalid_argument("set without grid");
  if (membership.size() != grid->size()) throw std::invalid_argument("membership count differs from node count");
  for (auto m : membership)
    if (m > 1) throw std::invalid_argument("membership values must be 0 or 1");
}

ScalarField phase_function(const IndicatorSet& e) {
  std::vector<double> v(e.membership.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = e.membership[i] ? 1.0 : -1.0;
  return ScalarField(e.grid, std::move(v), e.far);
}

NodeSet tubular_neighborhood(const NodeSet& points, double r, const GridSpec& grid) {
  if (r < 0.0) throw std::invalid_argument("negative tube radius");
  if (points.empty() || r == 0.0) return {};
  const double h = grid.h();
  const auto reach = static_cast<std::int64_t>(std::floor(r / h)) + 1;
  std::vector<std::array<std::int64_t, 2>> offsets;
  const std::int64_t qreach = grid.dim() == 2 ? reach : 0;
  for (std::int64_t p = -reach; p <= reach; ++p)
    for (std::int64_t q = -qreach; q <= qreach; ++q)
      if (h * std::sqrt(static_cast<double>(p * p + q * q)) < r) offsets.push_back({p, q});

  const auto n = static_cast<std::int64_t>(grid.axis_count());
  Mask hit(grid.size(), 0);
  for (std::size_t idx : points) {
    const auto l = grid.local(idx);
    for (const auto& o : offsets) {
      const std::int64_t p = l[0] + o[0];
      const std::int64_t q = l[1] + o[1];
      if (p < 0 || p >= n) continue;
      if (grid.dim() == 2 && (q < 0 || q >= n)) continue;
      hit[grid.flat(p, q)] = 1;
    }
  }
  return nodes_of(hit);
}

double box_counting_dimension(const std::vector<Point>& points, int dim, const std::vector<double>& scales) {
  if (points.empty()) throw std::invalid_argument("box counting needs a nonempty point set");
  if (scales.size() < 3) throw std::invalid_argument("box counting needs at least 3 scales");
  const auto [smin, smax] = std::minmax_element(scales.begin(), scales.end());
  if (!(*smin > 0.0)) throw std::invalid_argument("box sizes must be positive");
  if (*smax < 10.0 * *smin * (1.0 - 1e-12)) throw std::invalid_argument("box sizes must span one decade");
  std::set<double> distinct(scales.begin(), scales.end());
  if (distinct.size() != scales.size()) throw std::invalid_argument("repeated box size");

  std::vector<double> xs, ys;
  for (double r : scales) {
    std::set<std::pair<std::int64_t, std::int64_t>> boxes;
    for (const auto& p : points) {
      const auto bx = static_cast<std::int64_t>(std::floor(p[0] / r));
      const auto by = dim == 2 ? static_cast<std::int64_t>(std::floor(p[1] / r)) : 0;
      boxes.emplace(bx, by);
    }
    xs.push_back(std::log(1.0 / r));
    ys.push_back(std::log(static_cast<double>(boxes.size())));
  }
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

double box_counting_dimension(const NodeSet& nodes, const GridSpec& grid, const std::vector<double>& scales) {
  return box_counting_dimension(node_points(nodes, grid), grid.dim(), scales);
}

std::vector<Point> node_points(const NodeSet& nodes, const GridSpec& grid) {
  std::vector<Point> pts;
  pts.reserve(nodes.size());
  for (std::size_t i : nodes) pts.push_back(grid.point(i));
  return pts;
}

NodeSet nodes_of(const Mask& mask) {
  NodeSet out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

Mask mask_from(const NodeSet& nodes, std::size_t size) {
  Mask m(size, 0);
  for (std::size_t i : nodes) m.at(i) = 1;
  return m;
}

}  // namespace fracac
