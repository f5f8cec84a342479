#pragma once

#include <vector>

#include "fracac/convolution.hpp"
#include "fracac/grid.hpp"
#include "fracac/params.hpp"

namespace fracac {

// Tabulated lattice kernel h^n |d h|^{-n-2s} by absolute offsets, 0 at d = 0.
class KernelTable {
public:
  KernelTable(const GridSpec& g, double s);
  double operator()(std::int64_t di, std::int64_t dj = 0) const {
    const auto i = static_cast<std::size_t>(di < 0 ? -di : di);
    const auto j = static_cast<std::size_t>(dj < 0 ? -dj : dj);
    return w_[i * stride_ + j];
  }

private:
  std::size_t stride_;
  std::vector<double> w_;
};

// Lattice kernel h^n |d h|^{-n-2s} for integer offsets d != 0, and 0 at d = 0.
Stencil laplace_stencil(const GridSpec& g, double s);

IndexBox full_box(const GridSpec& g);
IndexBox bounding_box(const GridSpec& g, const NodeSet& nodes);
// Values of a full-grid vector restricted to a box of local indices.
std::vector<double> restrict_to(const GridSpec& g, const std::vector<double>& values, const IndexBox& box);

// sum_{y != x, y in the truncation box} h^n |x-y|^{-n-2s} f(y), for each target x.
std::vector<double> kernel_sums(const GridSpec& g, double s, const std::vector<double>& f, const NodeSet& targets,
                                ConvMethod method = ConvMethod::Auto);

// (-Delta)^s v at one node: gamma [sum_{y != x} (v(x)-v(y)) K h^n + tail integral].
double frac_laplacian(const ScalarField& v, std::size_t node, const FractionalParams& p);
// The same at a set of nodes, with the lattice sum evaluated by convolution.
std::vector<double> frac_laplacian(const ScalarField& v, const NodeSet& targets, const FractionalParams& p,
                                   ConvMethod method = ConvMethod::Auto);

// Fractional Dirichlet energy of v localized to omega.
double energy_E(const ScalarField& v, const Mask& omega, const FractionalParams& p,
                ConvMethod method = ConvMethod::Auto);

// Symmetric bilinear form associated with energy_E; phi must vanish outside omega.
double pairing(const ScalarField& v, const ScalarField& phi, const Mask& omega, const FractionalParams& p,
               ConvMethod method = ConvMethod::Auto);

// gamma-free form sum_{x in omega} h^n [sum_y w_y (v_x-v_y)(phi_x-phi_y) K h^n + tail], with w = 1/2 on omega
// and 1 outside. energy_E = gamma/2 * form(v, v), pairing = gamma * form(v, phi).
double bilinear_form(const ScalarField& v, const ScalarField& phi, const Mask& omega, double s,
                     ConvMethod method = ConvMethod::Auto);

}  // namespace fracac
