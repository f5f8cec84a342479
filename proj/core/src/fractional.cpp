#include "fracac/fractional.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fracac/parallel.hpp"
#include "fracac/summation.hpp"
#include "fracac/tails.hpp"

namespace fracac {

namespace {

double kernel_value(const GridSpec& g, double s, std::int64_t di, std::int64_t dj) {
  if (di == 0 && dj == 0) return 0.0;
  const double h = g.h();
  const double r2 = static_cast<double>(di * di + dj * dj) * h * h;
  const double n = g.dim();
  return g.cell_volume() * std::pow(r2, -0.5 * (n + 2.0 * s));
}

ConvMethod resolve(ConvMethod m, std::size_t targets, std::size_t sources) {
  if (m != ConvMethod::Auto) return m;
  return static_cast<double>(targets) * static_cast<double>(sources) <= 2e4 ? ConvMethod::Direct : ConvMethod::FFT;
}

void same_grid(const ScalarField& a, const ScalarField& b) {
  if (a.grid.get() != b.grid.get()) throw std::invalid_argument("fields live on different grids");
}

}  // namespace

KernelTable::KernelTable(const GridSpec& g, double s) {
  const std::size_t n = g.axis_count();
  stride_ = g.dim() == 2 ? n : 1;
  w_.resize(n * stride_);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < stride_; ++j)
      w_[i * stride_ + j] = kernel_value(g, s, static_cast<std::int64_t>(i), static_cast<std::int64_t>(j));
}

Stencil laplace_stencil(const GridSpec& g, double s) {
  return [&g, s](std::int64_t di, std::int64_t dj) { return kernel_value(g, s, di, dj); };
}

IndexBox full_box(const GridSpec& g) {
  IndexBox b;
  b.dim = g.dim();
  const auto n = static_cast<std::int64_t>(g.axis_count());
  b.lo = {0, 0};
  b.extent = {n, g.dim() == 2 ? n : 1};
  return b;
}

IndexBox bounding_box(const GridSpec& g, const NodeSet& nodes) {
  if (nodes.empty()) throw std::invalid_argument("bounding box of an empty node set");
  std::array<std::int64_t, 2> lo{INT64_MAX, INT64_MAX}, hi{INT64_MIN, INT64_MIN};
  for (std::size_t i : nodes) {
    const auto l = g.local(i);
    for (int a = 0; a < 2; ++a) {
      lo[a] = std::min(lo[a], l[a]);
      hi[a] = std::max(hi[a], l[a]);
    }
  }
  IndexBox b;
  b.dim = g.dim();
  b.lo = lo;
  b.extent = {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1};
  return b;
}

std::vector<double> restrict_to(const GridSpec& g, const std::vector<double>& values, const IndexBox& box) {
  std::vector<double> out(box.size());
  for (std::int64_t p = 0; p < box.extent[0]; ++p)
    for (std::int64_t q = 0; q < box.extent[1]; ++q)
      out[static_cast<std::size_t>(p * box.extent[1] + q)] = values[g.flat(box.lo[0] + p, box.lo[1] + q)];
  return out;
}

std::vector<double> kernel_sums(const GridSpec& g, double s, const std::vector<double>& f, const NodeSet& targets,
                                ConvMethod method) {
  if (f.size() != g.size()) throw std::invalid_argument("kernel_sums: field size mismatch");
  std::vector<double> out(targets.size(), 0.0);
  if (targets.empty()) return out;
  method = resolve(method, targets.size(), g.size());
  if (method == ConvMethod::Direct) {
    const KernelTable K(g, s);
    parallel_for(targets.size(), [&](std::size_t b, std::size_t e) {
      std::vector<double> terms(g.size());
      for (std::size_t t = b; t < e; ++t) {
        const auto lx = g.local(targets[t]);
        for (std::size_t y = 0; y < g.size(); ++y) {
          const auto ly = g.local(y);
          terms[y] = K(lx[0] - ly[0], lx[1] - ly[1]) * f[y];
        }
        out[t] = pairwise_sum(terms);
      }
    });
    return out;
  }
  const IndexBox dst = bounding_box(g, targets);
  const Convolver conv(full_box(g), dst, laplace_stencil(g, s), ConvMethod::FFT);
  const auto c = conv.apply(f);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto l = g.local(targets[t]);
    out[t] = c[dst.flat(l[0], l[1])];
  }
  return out;
}

double frac_laplacian(const ScalarField& v, std::size_t node, const FractionalParams& p) {
  const GridSpec& g = *v.grid;
  if (node >= g.size()) throw std::out_of_range("node outside the grid");
  const auto lx = g.local(node);
  const double vx = v.values[node];
  std::vector<double> terms(g.size());
  for (std::size_t y = 0; y < g.size(); ++y) {
    const auto ly = g.local(y);
    terms[y] = (vx - v.values[y]) * kernel_value(g, p.s, lx[0] - ly[0], lx[1] - ly[1]);
  }
  double acc = pairwise_sum(terms);
  const Point x = g.point(node);
  for (const auto& piece : tail_pieces(g, {&v.tail}, x))
    acc += piece.weight * (vx - v.tail.value(piece.sample, g.dim())) * laplace_radial(piece.r0, piece.r1, p.s);
  return p.gamma_ns * acc;
}

std::vector<double> frac_laplacian(const ScalarField& v, const NodeSet& targets, const FractionalParams& p,
                                   ConvMethod method) {
  const GridSpec& g = *v.grid;
  std::vector<double> out(targets.size(), 0.0);
  if (targets.empty()) return out;
  method = resolve(method, targets.size(), g.size());
  if (method == ConvMethod::Direct) {
    parallel_for(targets.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t t = b; t < e; ++t) out[t] = frac_laplacian(v, targets[t], p);
    });
    return out;
  }
  const std::vector<double> ones(g.size(), 1.0);
  const auto mass = kernel_sums(g, p.s, ones, targets, ConvMethod::FFT);
  const auto cv = kernel_sums(g, p.s, v.values, targets, ConvMethod::FFT);
  parallel_for(targets.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) {
      const double vx = v.values[targets[t]];
      double tail = 0.0;
      for (const auto& piece : tail_pieces(g, {&v.tail}, g.point(targets[t])))
        tail += piece.weight * (vx - v.tail.value(piece.sample, g.dim())) * laplace_radial(piece.r0, piece.r1, p.s);
      out[t] = p.gamma_ns * (vx * mass[t] - cv[t] + tail);
    }
  });
  return out;
}

double bilinear_form(const ScalarField& v, const ScalarField& phi, const Mask& omega, double s, ConvMethod method) {
  same_grid(v, phi);
  const GridSpec& g = *v.grid;
  if (omega.size() != g.size()) throw std::invalid_argument("omega mask size mismatch");
  const NodeSet targets = nodes_of(omega);
  if (targets.empty()) return 0.0;
  std::vector<double> wt(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) wt[i] = omega[i] ? 0.5 : 1.0;

  std::vector<double> e(targets.size(), 0.0);
  method = resolve(method, targets.size(), g.size());
  if (method == ConvMethod::Direct) {
    const KernelTable K(g, s);
    parallel_for(targets.size(), [&](std::size_t b, std::size_t end) {
      std::vector<double> terms(g.size());
      for (std::size_t t = b; t < end; ++t) {
        const std::size_t x = targets[t];
        const auto lx = g.local(x);
        const double vx = v.values[x], px = phi.values[x];
        for (std::size_t y = 0; y < g.size(); ++y) {
          const auto ly = g.local(y);
          terms[y] = wt[y] * (vx - v.values[y]) * (px - phi.values[y]) * K(lx[0] - ly[0], lx[1] - ly[1]);
        }
        e[t] = pairwise_sum(terms);
      }
    });
  } else {
    std::vector<double> f1(g.size()), f2(g.size()), f3(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      f1[i] = wt[i] * phi.values[i];
      f2[i] = wt[i] * v.values[i];
      f3[i] = wt[i] * v.values[i] * phi.values[i];
    }
    const IndexBox dst = bounding_box(g, targets);
    const Convolver conv(full_box(g), dst, laplace_stencil(g, s), ConvMethod::FFT);
    const auto c0 = conv.apply(wt), c1 = conv.apply(f1), c2 = conv.apply(f2), c3 = conv.apply(f3);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const auto l = g.local(targets[t]);
      const std::size_t k = dst.flat(l[0], l[1]);
      const double vx = v.values[targets[t]], px = phi.values[targets[t]];
      e[t] = vx * px * c0[k] - vx * c1[k] - px * c2[k] + c3[k];
    }
  }
  parallel_for(targets.size(), [&](std::size_t b, std::size_t end) {
    for (std::size_t t = b; t < end; ++t) {
      const std::size_t x = targets[t];
      const double vx = v.values[x], px = phi.values[x];
      std::vector<double> tail_terms;
      for (const auto& piece : tail_pieces(g, {&v.tail, &phi.tail}, g.point(x))) {
        const double tv = v.tail.value(piece.sample, g.dim());
        const double tp = phi.tail.value(piece.sample, g.dim());
        tail_terms.push_back(piece.weight * (vx - tv) * (px - tp) * laplace_radial(piece.r0, piece.r1, s));
      }
      e[t] += pairwise_sum(tail_terms);
    }
  });
  return g.cell_volume() * pairwise_sum(e);
}

double energy_E(const ScalarField& v, const Mask& omega, const FractionalParams& p, ConvMethod method) {
  return 0.5 * p.gamma_ns * bilinear_form(v, v, omega, p.s, method);
}

double pairing(const ScalarField& v, const ScalarField& phi, const Mask& omega, const FractionalParams& p,
               ConvMethod method) {
  same_grid(v, phi);
  for (std::size_t i = 0; i < phi.values.size(); ++i)
    if (!omega.at(i) && phi.values[i] != 0.0) throw std::invalid_argument("test function must vanish outside omega");
  if (phi.tail.base != 0.0 || phi.tail.scale != 0.0)
    throw std::invalid_argument("test function must vanish outside omega");
  return p.gamma_ns * bilinear_form(v, phi, omega, p.s, method);
}

}  // namespace fracac
