#include <benchmark/benchmark.h>

#include <cmath>

#include "fracac/diagnostics.hpp"
#include "fracac/extension.hpp"
#include "fracac/fractional.hpp"
#include "fracac/geometry.hpp"
#include "fracac/solver.hpp"

using namespace fracac;

namespace {

GridPtr line(int k) { return build_grid(1, std::ldexp(1.0, -k), Omega::interval(-1, 1), 8.0, FarField::sides(-1, 1)); }

GridPtr square(int cells) {
  return build_grid(2, 1.0 / cells, Omega::square(1.0), 8.0, FarField::half_space({1, 0}, 0.0));
}

ScalarField sign_field(GridPtr g) {
  auto v = ScalarField::from_function(g, [](const Point& x) { return x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0); });
  v.tail = g->tail();
  return v;
}

}  // namespace

// Lattice part of the operator on all interior nodes, direct sums against FFT.
static void BM_LaplacianDirect1D(benchmark::State& state) {
  auto g = line(static_cast<int>(state.range(0)));
  const auto v = sign_field(g);
  const auto p = make_params(1, 0.25, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(frac_laplacian(v, g->interior_nodes(), p, ConvMethod::Direct));
  state.counters["nodes"] = static_cast<double>(g->interior_count());
}
BENCHMARK(BM_LaplacianDirect1D)->DenseRange(7, 10)->Unit(benchmark::kMillisecond);

static void BM_LaplacianFFT1D(benchmark::State& state) {
  auto g = line(static_cast<int>(state.range(0)));
  const auto v = sign_field(g);
  const auto p = make_params(1, 0.25, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(frac_laplacian(v, g->interior_nodes(), p, ConvMethod::FFT));
  state.counters["nodes"] = static_cast<double>(g->interior_count());
}
BENCHMARK(BM_LaplacianFFT1D)->DenseRange(7, 11)->Unit(benchmark::kMillisecond);

static void BM_LaplacianFFT2D(benchmark::State& state) {
  auto g = square(static_cast<int>(state.range(0)));
  const auto v = sign_field(g);
  const auto p = make_params(2, 0.25, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(frac_laplacian(v, g->interior_nodes(), p, ConvMethod::FFT));
  state.counters["nodes"] = static_cast<double>(g->interior_count());
}
BENCHMARK(BM_LaplacianFFT2D)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_Energy1D(benchmark::State& state) {
  auto g = line(static_cast<int>(state.range(0)));
  const auto v = sign_field(g);
  const auto p = make_params(1, 0.25, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(energy_E(v, g->interior_mask(), p));
}
BENCHMARK(BM_Energy1D)->DenseRange(8, 10)->Unit(benchmark::kMillisecond);

// One operator application of the precomputed interior operator, the unit cost of a descent step.
static void BM_InteriorApply1D(benchmark::State& state) {
  auto g = line(static_cast<int>(state.range(0)));
  const auto spec = make_problem(g, make_params(1, 0.25, 0.05), make_prototype_well(), sign_field(g));
  const InteriorOperator op(spec);
  std::vector<double> u(op.nodes().size(), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(op.apply(u));
}
BENCHMARK(BM_InteriorApply1D)->DenseRange(8, 11)->Unit(benchmark::kMicrosecond);

static void BM_Solve1D(benchmark::State& state) {
  auto g = line(static_cast<int>(state.range(0)));
  const auto spec = make_problem(g, make_params(1, 0.25, 0.05), make_prototype_well(), sign_field(g));
  SolverOptions o;
  o.tol = 1e-8;
  o.max_iters = 200000;
  for (auto _ : state) {
    auto r = minimize(spec, std::nullopt, o);
    state.counters["iterations"] = static_cast<double>(r.report.iterations);
    benchmark::DoNotOptimize(r.v.values.data());
  }
}
BENCHMARK(BM_Solve1D)->DenseRange(8, 10)->Unit(benchmark::kMillisecond);

static void BM_Extend1D(benchmark::State& state) {
  auto g = line(static_cast<int>(state.range(0)));
  const auto p = make_params(1, 0.25, 1.0);
  const auto eg = make_extension_grid(g, 0.25, {-1, 0}, {1, 0}, 1e-3 * g->h(), 2.0, 1.1);
  const auto v = sign_field(g);
  for (auto _ : state) benchmark::DoNotOptimize(extend(v, eg, p));
  state.counters["levels"] = static_cast<double>(eg.levels());
}
BENCHMARK(BM_Extend1D)->DenseRange(8, 10)->Unit(benchmark::kMillisecond);

static void BM_Perimeter2D(benchmark::State& state) {
  auto g = build_grid(2, 1.0 / static_cast<double>(state.range(0)), Omega::disc({0, 0}, 0.5), 4.0, FarField::cross());
  const auto e = cross_set(g);
  for (auto _ : state) benchmark::DoNotOptimize(perimeter_P2s(e, g->interior_mask(), 0.25));
}
BENCHMARK(BM_Perimeter2D)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_ThetaConstant1D(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(theta_ns_constant(1, 0.25, std::ldexp(1.0, -static_cast<int>(state.range(0)))));
}
BENCHMARK(BM_ThetaConstant1D)->Arg(8)->Arg(9)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
