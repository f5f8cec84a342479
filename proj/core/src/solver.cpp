#include "fracac/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fracac/convolution.hpp"
#include "fracac/fractional.hpp"
#include "fracac/parallel.hpp"
#include "fracac/summation.hpp"
#include "fracac/tails.hpp"

namespace fracac {

namespace {

bool same_far(const FarField& a, const FarField& b) {
  if (a.base != b.base || a.scale != b.scale || a.planes.size() != b.planes.size()) return false;
  for (std::size_t k = 0; k < a.planes.size(); ++k)
    if (a.planes[k].normal != b.planes[k].normal || a.planes[k].offset != b.planes[k].offset) return false;
  return true;
}

void require_pinned(const ScalarField& v, const ProblemSpec& spec) {
  if (v.grid.get() != spec.grid.get()) throw std::invalid_argument("field and problem live on different grids");
  const Mask& om = spec.grid->interior_mask();
  for (std::size_t i = 0; i < v.values.size(); ++i)
    if (!om[i] && v.values[i] != spec.g.values[i]) throw std::invalid_argument("field differs from g outside omega");
  if (!same_far(v.tail, spec.g.tail)) throw std::invalid_argument("field tail differs from the tail of g");
}

double potential_sum(const ProblemSpec& spec, const std::vector<double>& u) {
  std::vector<double> w(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) w[k] = spec.well.W(u[k]);
  return std::pow(spec.params.eps, -2.0 * spec.params.s) * spec.grid->cell_volume() * pairwise_sum(w);
}

double forcing_sum(const ProblemSpec& spec, const NodeSet& nodes, const std::vector<double>& u) {
  std::vector<double> w(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) w[k] = spec.f.values[nodes[k]] * u[k];
  return spec.grid->cell_volume() * pairwise_sum(w);
}

}  // namespace

void ProblemSpec::validate(double g_bound) const {
  if (!grid) throw std::invalid_argument("problem without grid");
  if (g.grid.get() != grid.get() || f.grid.get() != grid.get())
    throw std::invalid_argument("g and f must live on the problem grid");
  if (params.n != grid->dim()) throw std::invalid_argument("parameter dimension differs from the grid");
  if (!well.W || !well.Wp || !well.Wpp) throw std::invalid_argument("incomplete double well");
  g.validate();
  f.validate();
  const Mask& om = grid->interior_mask();
  for (std::size_t i = 0; i < grid->size(); ++i)
    if (!om[i] && f.values[i] != 0.0) throw std::invalid_argument("f must vanish outside omega");
  if (f.tail.base != 0.0 || f.tail.scale != 0.0) throw std::invalid_argument("f must vanish outside omega");
  if (exterior_sup() > g_bound + 1e-12) throw std::invalid_argument("exterior data exceeds its bound");
}

double ProblemSpec::exterior_sup() const {
  const Mask& om = grid->interior_mask();
  double m = std::abs(g.tail.base) + (g.tail.is_constant() ? 0.0 : std::abs(g.tail.scale));
  for (std::size_t i = 0; i < grid->size(); ++i)
    if (!om[i]) m = std::max(m, std::abs(g.values[i]));
  return m;
}

ProblemSpec make_problem(GridPtr grid, const FractionalParams& p, DoubleWell well, const ScalarField& g,
                         std::optional<ScalarField> f) {
  ProblemSpec spec;
  spec.grid = grid;
  spec.params = p;
  spec.well = std::move(well);
  spec.g = g;
  spec.f = f ? *f : ScalarField(grid, std::vector<double>(grid->size(), 0.0), FarField::constant(0.0));
  spec.validate(std::numeric_limits<double>::infinity());
  return spec;
}

EnergyTerms functional_F(const ScalarField& v, const ProblemSpec& spec) {
  require_pinned(v, spec);
  const NodeSet& nodes = spec.grid->interior_nodes();
  std::vector<double> u(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) u[k] = v.values[nodes[k]];
  EnergyTerms t;
  t.dirichlet = energy_E(v, spec.grid->interior_mask(), spec.params);
  t.potential = potential_sum(spec, u);
  t.forcing = forcing_sum(spec, nodes, u);
  t.total = t.dirichlet + t.potential - t.forcing;
  return t;
}

double residual_EL(const ScalarField& v, const ProblemSpec& spec) {
  require_pinned(v, spec);
  const NodeSet& nodes = spec.grid->interior_nodes();
  const auto lap = frac_laplacian(v, nodes, spec.params);
  const double scale = std::pow(spec.params.eps, -2.0 * spec.params.s);
  double r = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double x = v.values[nodes[k]];
    r = std::max(r, std::abs(lap[k] + scale * spec.well.Wp(x) - spec.f.values[nodes[k]]));
  }
  return r;
}

double max_principle_bound(const ProblemSpec& spec) {
  double fmax = 0.0;
  for (std::size_t i : spec.grid->interior_nodes()) fmax = std::max(fmax, std::abs(spec.f.values[i]));
  const double inner =
      std::pow(1.0 + spec.well.c_W * std::pow(spec.params.eps, 2.0 * spec.params.s) * fmax, 1.0 / (spec.well.p - 1.0));
  return std::max(inner, spec.exterior_sup());
}

MaxPrincipleCheck check_max_principle(const ScalarField& v, const ProblemSpec& spec) {
  MaxPrincipleCheck c;
  c.bound = max_principle_bound(spec) + 1e-6;
  for (std::size_t i : spec.grid->interior_nodes()) c.max_abs = std::max(c.max_abs, std::abs(v.values[i]));
  c.margin = c.bound - c.max_abs;
  c.pass = c.margin >= 0.0;
  return c;
}

ScalarField sharp_initial(const ProblemSpec& spec, double mollify_cells) {
  const GridSpec& g = *spec.grid;
  const Mask& om = g.interior_mask();
  const NodeSet& nodes = g.interior_nodes();
  ScalarField v = spec.g;
  // The nearest exterior node of an interior node lies in the bounding box of omega grown by one.
  IndexBox box = bounding_box(g, nodes);
  const auto n = static_cast<std::int64_t>(g.axis_count());
  NodeSet cand;
  for (std::int64_t p = std::max<std::int64_t>(0, box.lo[0] - 1); p <= std::min(n - 1, box.lo[0] + box.extent[0]); ++p) {
    if (g.dim() == 1) {
      if (!om[g.flat(p, 0)]) cand.push_back(g.flat(p, 0));
      continue;
    }
    for (std::int64_t q = std::max<std::int64_t>(0, box.lo[1] - 1); q <= std::min(n - 1, box.lo[1] + box.extent[1]); ++q)
      if (!om[g.flat(p, q)]) cand.push_back(g.flat(p, q));
  }
  if (cand.empty()) throw std::invalid_argument("omega has no exterior nodes");
  std::vector<double> filled(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto lx = g.local(nodes[k]);
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (std::size_t c : cand) {
        const auto ly = g.local(c);
        best = std::min(best, (lx[0] - ly[0]) * (lx[0] - ly[0]) + (lx[1] - ly[1]) * (lx[1] - ly[1]));
      }
      double sum = 0.0;
      int count = 0;
      for (std::size_t c : cand) {
        const auto ly = g.local(c);
        if ((lx[0] - ly[0]) * (lx[0] - ly[0]) + (lx[1] - ly[1]) * (lx[1] - ly[1]) == best) {
          sum += spec.g.values[c];
          ++count;
        }
      }
      filled[k] = sum / count;
    }
  });
  for (std::size_t k = 0; k < nodes.size(); ++k) v.values[nodes[k]] = filled[k];
  if (mollify_cells > 0.0) {
    const auto r = static_cast<std::int64_t>(std::floor(mollify_cells));
    const std::vector<double> src = v.values;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const auto lx = g.local(nodes[k]);
      double sum = 0.0;
      int count = 0;
      for (std::int64_t dp = -r; dp <= r; ++dp)
        for (std::int64_t dq = (g.dim() == 2 ? -r : 0); dq <= (g.dim() == 2 ? r : 0); ++dq) {
          const std::int64_t p = lx[0] + dp, q = lx[1] + dq;
          if (p < 0 || p >= n || q < 0 || (g.dim() == 2 && q >= n)) continue;
          sum += src[g.flat(p, q)];
          ++count;
        }
      v.values[nodes[k]] = sum / count;
    }
  }
  return v;
}

struct InteriorOperator::Impl {
  GridPtr grid;
  FractionalParams params;
  NodeSet nodes;
  IndexBox box;
  std::vector<std::size_t> slot;  // box index of each node
  std::unique_ptr<Convolver> conv;
  std::vector<double> mass;        // full row mass incl. tail
  std::vector<double> half_in;     // (1/2) sum over omega of K
  std::vector<double> ext_mass;    // sum over exterior nodes of K, plus the tail mass
  std::vector<double> ext_v;       // sum over exterior nodes of K g, plus the tail integral of g
  std::vector<double> ext_v2;      // same with g^2

  std::vector<double> convolve(const std::vector<double>& u) const {
    std::vector<double> in(box.size(), 0.0);
    for (std::size_t k = 0; k < nodes.size(); ++k) in[slot[k]] = u[k];
    const auto c = conv->apply(in);
    std::vector<double> out(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) out[k] = c[slot[k]];
    return out;
  }
};

InteriorOperator::InteriorOperator(const ProblemSpec& spec) : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  m.grid = spec.grid;
  m.params = spec.params;
  const GridSpec& g = *spec.grid;
  m.nodes = g.interior_nodes();
  m.box = bounding_box(g, m.nodes);
  m.slot.resize(m.nodes.size());
  for (std::size_t k = 0; k < m.nodes.size(); ++k) {
    const auto l = g.local(m.nodes[k]);
    m.slot[k] = m.box.flat(l[0], l[1]);
  }
  const double sz = static_cast<double>(m.box.size());
  m.conv = std::make_unique<Convolver>(m.box, m.box, laplace_stencil(g, spec.params.s),
                                       sz * sz <= 2e4 ? ConvMethod::Direct : ConvMethod::FFT);

  const Mask& om = g.interior_mask();
  std::vector<double> ext1(g.size()), extg(g.size()), extg2(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool out = !om[i];
    ext1[i] = out ? 1.0 : 0.0;
    extg[i] = out ? spec.g.values[i] : 0.0;
    extg2[i] = out ? spec.g.values[i] * spec.g.values[i] : 0.0;
  }
  const double s = spec.params.s;
  m.ext_mass = kernel_sums(g, s, ext1, m.nodes);
  m.ext_v = kernel_sums(g, s, extg, m.nodes);
  m.ext_v2 = kernel_sums(g, s, extg2, m.nodes);
  const auto in_mass = m.convolve(std::vector<double>(m.nodes.size(), 1.0));
  m.mass.resize(m.nodes.size());
  m.half_in.resize(m.nodes.size());
  parallel_for(m.nodes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      double tm = 0.0, tv = 0.0, tv2 = 0.0;
      for (const auto& piece : tail_pieces(g, {&spec.g.tail}, g.point(m.nodes[k]))) {
        const double w = piece.weight * laplace_radial(piece.r0, piece.r1, s);
        const double val = spec.g.tail.value(piece.sample, g.dim());
        tm += w;
        tv += w * val;
        tv2 += w * val * val;
      }
      m.ext_mass[k] += tm;
      m.ext_v[k] += tv;
      m.ext_v2[k] += tv2;
      m.mass[k] = in_mass[k] + m.ext_mass[k];
      m.half_in[k] = 0.5 * in_mass[k];
    }
  });
}

InteriorOperator::~InteriorOperator() = default;

const NodeSet& InteriorOperator::nodes() const { return impl_->nodes; }

std::vector<double> InteriorOperator::apply(const std::vector<double>& u) const {
  const Impl& m = *impl_;
  if (u.size() != m.nodes.size()) throw std::invalid_argument("interior vector size mismatch");
  const auto c = m.convolve(u);
  std::vector<double> out(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = m.params.gamma_ns * (m.mass[k] * u[k] - c[k] - m.ext_v[k]);
  return out;
}

std::vector<double> InteriorOperator::apply_homogeneous(const std::vector<double>& u) const {
  const Impl& m = *impl_;
  if (u.size() != m.nodes.size()) throw std::invalid_argument("interior vector size mismatch");
  const auto c = m.convolve(u);
  std::vector<double> out(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = m.params.gamma_ns * (m.mass[k] * u[k] - c[k]);
  return out;
}

double InteriorOperator::dirichlet_energy(const std::vector<double>& u) const {
  const Impl& m = *impl_;
  if (u.size() != m.nodes.size()) throw std::invalid_argument("interior vector size mismatch");
  std::vector<double> u2(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) u2[k] = u[k] * u[k];
  const auto c1 = m.convolve(u), c2 = m.convolve(u2);
  // sum_y w_y (u_x - v_y)^2 K, w = 1/2 on omega and 1 outside, expanded in powers of u_x.
  std::vector<double> rows(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double a = m.half_in[k] + m.ext_mass[k];
    const double b = 0.5 * c1[k] + m.ext_v[k];
    const double c = 0.5 * c2[k] + m.ext_v2[k];
    rows[k] = u[k] * u[k] * a - 2.0 * u[k] * b + c;
  }
  return 0.5 * m.params.gamma_ns * m.grid->cell_volume() * pairwise_sum(rows);
}

double InteriorOperator::row_bound() const {
  return 2.0 * impl_->params.gamma_ns * *std::max_element(impl_->mass.begin(), impl_->mass.end());
}

SolveResult minimize(const ProblemSpec& spec, std::optional<ScalarField> init, const SolverOptions& opt) {
  if (!(opt.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (!(opt.tau_scale > 0.0)) throw std::invalid_argument("tau_scale must be positive");
  spec.validate(std::numeric_limits<double>::infinity());
  const auto t0 = std::chrono::steady_clock::now();
  ScalarField v = init ? *init : sharp_initial(spec, opt.mollify_cells);
  if (init) {
    // Projection onto the class: exterior values and tail come from g.
    const Mask& om = spec.grid->interior_mask();
    if (v.grid.get() != spec.grid.get()) throw std::invalid_argument("initial field lives on another grid");
    for (std::size_t i = 0; i < v.values.size(); ++i)
      if (!om[i]) v.values[i] = spec.g.values[i];
    v.tail = spec.g.tail;
  }

  const InteriorOperator op(spec);
  const NodeSet& nodes = op.nodes();
  std::vector<double> u(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) u[k] = v.values[nodes[k]];

  SolveReport rep;
  const double e2s = std::pow(spec.params.eps, 2.0 * spec.params.s);
  const double bound = max_principle_bound(spec);
  rep.L_W = well_lipschitz(spec.well, bound);
  rep.C_h = e2s * op.row_bound();
  const double tau_cert = e2s / (rep.L_W + rep.C_h);
  rep.tau_initial = opt.tau_scale * tau_cert;
  double tau = rep.tau_initial;

  const double hn = spec.grid->cell_volume();
  auto direction = [&](const std::vector<double>& w) {
    auto d = op.apply(w);
    for (std::size_t k = 0; k < w.size(); ++k) {
      d[k] += spec.well.Wp(w[k]) / e2s - spec.f.values[nodes[k]];
      if (!std::isfinite(d[k])) throw std::runtime_error("non-finite iterate");
    }
    return d;
  };
  auto sup = [](const std::vector<double>& d) {
    double m = 0.0;
    for (double x : d) m = std::max(m, std::abs(x));
    return m;
  };

  double F = op.dirichlet_energy(u) + potential_sum(spec, u) - forcing_sum(spec, nodes, u);
  if (!std::isfinite(F)) throw std::runtime_error("non-finite iterate");
  rep.history.push_back(F);
  auto d = direction(u);
  double r = sup(d);
  std::vector<double> trial(u.size()), terms(u.size());
  while (true) {
    if (r <= opt.tol) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= opt.max_iters) {
      rep.message = "maximum iterations reached";
      break;
    }
    // Change of F along -d: with d = Lu + W'/e - f the first-order part is -tau |d|^2, the
    // Dirichlet part is exactly quadratic, and the well contributes its second-order remainder.
    const auto ad = op.apply_homogeneous(d);
    for (std::size_t k = 0; k < u.size(); ++k) terms[k] = d[k] * d[k];
    const double dd = pairwise_sum(terms);
    for (std::size_t k = 0; k < u.size(); ++k) terms[k] = d[k] * ad[k];
    const double curv = pairwise_sum(terms);
    bool accepted = false;
    for (std::size_t bt = 0; bt <= opt.max_backtracks; ++bt) {
      for (std::size_t k = 0; k < u.size(); ++k) {
        const double delta = tau * d[k];
        trial[k] = u[k] - delta;
        if (!std::isfinite(trial[k])) throw std::runtime_error("non-finite iterate");
        // W(u - delta) - W(u) + delta W'(u); the midpoint form avoids cancellation for small steps.
        terms[k] = std::abs(delta) < 1e-4 ? 0.5 * delta * delta * spec.well.Wpp(u[k] - 0.5 * delta)
                                          : spec.well.W(trial[k]) - spec.well.W(u[k]) + delta * spec.well.Wp(u[k]);
      }
      const double dF = hn * (-tau * dd + 0.5 * tau * tau * curv + pairwise_sum(terms) / e2s);
      if (!std::isfinite(dF)) throw std::runtime_error("non-finite functional value");
      if (dF <= 0.0) {
        u.swap(trial);
        F += dF;
        accepted = true;
        break;
      }
      tau *= 0.5;
      ++rep.rejected_steps;
    }
    if (!accepted) {
      rep.message = "line search failed";
      break;
    }
    ++rep.iterations;
    rep.history.push_back(F);
    d = direction(u);
    r = sup(d);
  }
  rep.tau_final = tau;
  for (std::size_t k = 0; k < nodes.size(); ++k) v.values[nodes[k]] = u[k];
  rep.final_residual = r;
  rep.energy_terms = functional_F(v, spec);
  rep.max_principle = check_max_principle(v, spec);
  rep.bound_ok = rep.max_principle.pass;
  if (rep.converged) rep.message = "converged";
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(v), std::move(rep)};
}

}  // namespace fracac
