#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fracac/grid.hpp"
#include "fracac/params.hpp"
#include "fracac/potential.hpp"

namespace fracac {

// Exterior data g (its values at nodes outside Omega and its far field) and forcing f on Omega.
struct ProblemSpec {
  GridPtr grid;
  FractionalParams params;
  DoubleWell well;
  ScalarField g;
  ScalarField f;

  // Throws on grid mismatches, f nonzero off Omega or |g| above `g_bound`.
  void validate(double g_bound = 1.0) const;
  // max |g| over exterior nodes and the far field.
  double exterior_sup() const;
};

ProblemSpec make_problem(GridPtr grid, const FractionalParams& p, DoubleWell well, const ScalarField& g,
                         std::optional<ScalarField> f = std::nullopt);

struct EnergyTerms {
  double dirichlet = 0.0;  // E(v, Omega)
  double potential = 0.0;  // eps^{-2s} sum_Omega W(v) h^n
  double forcing = 0.0;    // sum_Omega f v h^n
  double total = 0.0;      // dirichlet + potential - forcing
};

EnergyTerms functional_F(const ScalarField& v, const ProblemSpec& spec);

// max over Omega of |(-Delta)^s v + eps^{-2s} W'(v) - f|.
double residual_EL(const ScalarField& v, const ProblemSpec& spec);

struct MaxPrincipleCheck {
  bool pass = false;
  double bound = 0.0;   // includes the 1e-6 slack
  double max_abs = 0.0;
  double margin = 0.0;  // bound - max_abs
};

MaxPrincipleCheck check_max_principle(const ScalarField& v, const ProblemSpec& spec);
// max((1 + c_W eps^{2s} max|f|)^{1/(p-1)}, max_ext |g|), without slack.
double max_principle_bound(const ProblemSpec& spec);

// Interior nodes take the exterior value of g at the nearest exterior node; equidistant
// candidates are averaged. mollify_cells > 0 then box-averages the interior over that radius.
ScalarField sharp_initial(const ProblemSpec& spec, double mollify_cells = 0.0);

struct SolverOptions {
  double tol = 1e-6;
  std::size_t max_iters = 20000;
  double mollify_cells = 0.0;  // used by the "from-g" start
  // Multiplies the certified initial step; values above 1 rely on backtracking.
  double tau_scale = 1.0;
  std::size_t max_backtracks = 60;
};

struct SolveReport {
  std::size_t iterations = 0;
  std::size_t rejected_steps = 0;
  bool converged = false;
  double final_residual = 0.0;
  EnergyTerms energy_terms;
  bool bound_ok = false;
  MaxPrincipleCheck max_principle;
  double tau_initial = 0.0;
  double tau_final = 0.0;
  double C_h = 0.0;
  double L_W = 0.0;
  double wall_time = 0.0;
  // F after each accepted step, starting with the initial value; steps add the exactly expanded
  // change of F, so the sequence is non-increasing by construction of the acceptance test.
  std::vector<double> history;
  std::string message;
};

struct SolveResult {
  ScalarField v;
  SolveReport report;
};

// Projected gradient descent with backtracking on F; exterior values stay pinned to g.
// Without `init` the sharp start from g is used.
SolveResult minimize(const ProblemSpec& spec, std::optional<ScalarField> init, const SolverOptions& opt);

// The operator restricted to Omega with the exterior and tail contributions of g precomputed.
// Exposed for tests and benchmarks.
class InteriorOperator {
public:
  explicit InteriorOperator(const ProblemSpec& spec);
  ~InteriorOperator();
  InteriorOperator(const InteriorOperator&) = delete;
  InteriorOperator& operator=(const InteriorOperator&) = delete;

  const NodeSet& nodes() const;
  // (-Delta)^s v at the nodes of Omega, from the interior values u (one per node of Omega).
  std::vector<double> apply(const std::vector<double>& u) const;
  // The same operator with zero exterior data.
  std::vector<double> apply_homogeneous(const std::vector<double>& u) const;
  double dirichlet_energy(const std::vector<double>& u) const;
  // 2 gamma max_x (row mass), so that |(-Delta)^s| <= C.
  double row_bound() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fracac
