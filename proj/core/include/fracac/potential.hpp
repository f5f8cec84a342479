#pragma once

#include <functional>
#include <string>
#include <vector>

namespace fracac {

using RealFn = std::function<double(double)>;

struct DoubleWell {
  std::string name;
  RealFn W;
  RealFn Wp;
  RealFn Wpp;
  double p = 4.0;
  double c_W = 3.0;
  double delta_W = 0.18;
  double kappa_W = 1.0;
};

// W(t) = (1 - t^2)^2 / 4 with certified constants p = 4, c_W = 3, delta_W = 0.18.
DoubleWell make_prototype_well();

// Wraps user-supplied W, W', W'' with stated constants; kappa_W = min(W''(1), W''(-1)) / 2.
DoubleWell make_well(std::string name, RealFn W, RealFn Wp, RealFn Wpp, double p, double c_W, double delta_W);

// W on (kappa - delta_W, kappa + delta_W), continued affinely with matching value and slope outside.
RealFn convexified_well(const DoubleWell& w, int kappa);

struct AssumptionCheck {
  std::string name;
  bool pass = false;
  double margin = 0.0;
  std::string detail;
};

struct WellReport {
  std::vector<AssumptionCheck> checks;
  double fd_first_error = 0.0;
  double fd_second_error = 0.0;
  double fd_step = 0.0;

  bool all_pass() const;
  const AssumptionCheck* find(const std::string& name) const;
};

WellReport verify_structural_assumptions(const DoubleWell& w, double lo, double hi, std::size_t n_samples);

// Largest |W''| over [-bound, bound], sampled.
double well_lipschitz(const DoubleWell& w, double bound, std::size_t n_samples = 4001);

}  // namespace fracac
