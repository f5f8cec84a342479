#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fracac/grid.hpp"
#include "fracac/params.hpp"

namespace fracac {

// Named sets on a grid; the far field is the phase (+1 in E) beyond the truncation box.
IndicatorSet half_space_set(GridPtr g, Point normal, double offset);
IndicatorSet ball_set(GridPtr g, Point center, double radius);
IndicatorSet box_set(GridPtr g, Point lo, Point hi);
// {y1 y2 > 0}
IndicatorSet cross_set(GridPtr g);
IndicatorSet empty_set(GridPtr g);
IndicatorSet whole_set(GridPtr g);

// Rows x[,y],member with member in {0,1}; the far field is not part of the file.
std::string set_to_csv(const IndicatorSet& e);
// Every grid node must appear exactly once, matched to the nearest node within h/4.
IndicatorSet set_from_csv(GridPtr g, const std::string& text, FarField far);

// Nodes with an axis neighbour of opposite membership.
bool is_boundary_node(const IndicatorSet& e, std::size_t node);
NodeSet boundary_nodes(const IndicatorSet& e);

struct VectorFieldX {
  GridPtr grid;
  std::vector<Point> components;
  Mask support;

  static VectorFieldX from_function(GridPtr g, const std::function<Point(const Point&)>& fn);
  // Throws unless the field vanishes off its support and the support stays inside omega,
  // with at least one node of margin.
  void validate(const Mask& omega) const;
  double sup_norm() const;
  // sup |X| + sup |DX|, the derivative by central differences.
  double c1_norm() const;
};

// Three-term fractional perimeter with kernel |x-y|^{-n-2s'}, on the same lattice quadrature as
// energy_E, so that energy_E(phase(E)) = 2 gamma P.
double perimeter_P2s(const IndicatorSet& e, const Mask& omega, double s_prime);

// |energy_E(phase(E)) - 2 gamma P| / max(|.|, 1e-12).
double phase_energy_identity_check(const IndicatorSet& e, const Mask& omega, const FractionalParams& p);

// Principal value of (chi_{E^c} - chi_E)(y) |c-y|^{-n-2s} dy at the midpoint c between a boundary
// node and a neighbour of opposite membership, summed in reflection pairs around c, plus the
// exterior tail; averaged over such neighbours.
double mean_curvature_H2s(const IndicatorSet& e, std::size_t node, double s);

// One explicit Euler step of the flow of X: y belongs to the image iff y - t X(y) lies in E.
IndicatorSet flow_set(const IndicatorSet& e, const VectorFieldX& x, double t);

// Central difference in t of the perimeter of the flowed set.
double first_variation_P2s(const IndicatorSet& e, const Mask& omega, const VectorFieldX& x, double s,
                           double t_step);

struct CurvatureResidual {
  double max_residual = 0.0;          // per unit C^1 norm of the test field
  std::vector<double> variations;     // delta P[X] per field
  std::vector<double> forcing;        // (1/gamma) sum_{E cap Omega} div(f X) h^n per field
};

// Weak form of H = f / gamma tested against each field; t_step = steps * h / |X|_inf.
CurvatureResidual prescribed_curvature_residual(const IndicatorSet& e, const Mask& omega, const ScalarField& f,
                                                const std::vector<VectorFieldX>& fields, const FractionalParams& p,
                                                double steps = 3.0);

struct SharmonicReport {
  double max_relative_error = 0.0;
  std::size_t nodes_checked = 0;
  NodeSet nodes;
  std::vector<double> lhs;
  std::vector<double> rhs;
};

// Compares (-Delta)^s v_E with (gamma/2 int |v_E(x)-v_E(y)|^2 K dy) v_E(x) at nodes of omega at
// least min_cells * h away from the discrete boundary of E; at most max_nodes of them, evenly strided.
SharmonicReport sharmonic_identity_check(const IndicatorSet& e, const Mask& omega, const FractionalParams& p,
                                         double min_cells = 10.0, std::size_t max_nodes = 200);

// Distance from each given node to the nearest discrete boundary node (+inf if there is none).
std::vector<double> boundary_distance(const IndicatorSet& e, const NodeSet& nodes);

}  // namespace fracac
