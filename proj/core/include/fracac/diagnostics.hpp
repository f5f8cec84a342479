#pragma once

#include <limits>
#include <string>
#include <vector>

#include "fracac/extension.hpp"
#include "fracac/grid.hpp"
#include "fracac/solver.hpp"

namespace fracac {

enum class DensityVariant { Eps, Sharp };

struct DensityCurve {
  Point center{0.0, 0.0};
  std::vector<double> radii;
  std::vector<double> theta_values;
  std::vector<double> drift_terms;
  DensityVariant variant = DensityVariant::Eps;
  // Sharp variant with f = 0: deficit integral between radii[i-1] and radii[i]; deficits[0] = 0.
  std::vector<double> deficits;

  // Largest relative drop Theta(r_{i-1}) - Theta(r_i) over consecutive radii, scaled by Theta(max r).
  double worst_drop() const;
  bool non_decreasing(double rel_slack) const;
  // max_i |increment_i - deficit_i| / |increment_i|; needs deficits.
  double deficit_mismatch() const;
  std::string to_csv() const;
};

struct DensityOptions {
  // c_{n,q}; not explicit in the theory, so it is configured (0 drops the drift).
  double drift_constant = 0.0;
  // Exponent q in (n/(1+2s), n); NaN selects the middle of that range.
  double q = std::numeric_limits<double>::quiet_NaN();
  std::size_t drift_nodes = 64;
};

// Homogeneous W^{1,q} norm of f over the disc D_t(x0): L^{q*} norm plus L^q norm of the central
// difference gradient, q* = nq/(n-q).
double forcing_norm(const ScalarField& f, const Point& x0, double t, double q);

// r^{2s-n} [E(u, B_r^+) + eps^{-2s} sum_{D_r} W(v) h^n] + drift, u the extension of v.
DensityCurve density_theta_eps(const ScalarField& v, const ScalarField& f, const Point& x0,
                               const std::vector<double>& radii, const ProblemSpec& spec,
                               const ExtensionGrid& eg, const DensityOptions& opt = {});

// r^{2s-n} E(u, B_r^+) + drift for u the extension of the phase of E. With f = 0 the
// radial deficits between consecutive radii are filled in.
DensityCurve density_theta_sharp(const IndicatorSet& e, const ScalarField& f, const Point& x0,
                                 const std::vector<double>& radii, const FractionalParams& p,
                                 const ExtensionGrid& eg, const DensityOptions& opt = {});

// Pointwise limit of c_fine + (c_fine - c_coarse) / (2^k - 1), for curves computed on
// lattices of spacing h and 2h with an error ~ h^k.
DensityCurve richardson(const DensityCurve& fine, const DensityCurve& coarse, double k);

struct ThetaEstimate {
  double value = 0.0;    // Richardson limit
  double fine = 0.0;     // raw value at h
  double coarse = 0.0;   // raw value at 2h
  double error = 0.0;    // |value - fine|
  double h = 0.0;
};

// (d_s/2) int_{B_1^+} z^a |grad phi|^2 for the extension of the phase of {x_1 > 0}, centred at
// `center` on the boundary, computed on half-offset lattices of spacing h and 2h and
// extrapolated in h^{1-2s}, the order of the energy lost next to the interface in 1D and 2D.
// `radius` rescales the ball (the value is r-independent).
ThetaEstimate theta_ns_constant(int n, double s, double h, double radius = 1.0, Point center = {0.0, 0.0});

struct ClearingOutOptions {
  double lambda = 1.0;             // Poincare constant used for eta_0
  double density_threshold = 0.5;  // "small density" for the flag
};

struct ClearingOutReport {
  double theta = 0.0;
  double deviation = 0.0;  // max over D_{r/2}(x0) of ||v| - 1|
  double eta0 = 0.0;       // 9 omega_n^2 / (2^{n+4-2s} lambda^2)
  bool cleared = false;    // theta below the threshold and deviation <= delta_W
};

ClearingOutReport clearing_out_probe(const ScalarField& v, const ProblemSpec& spec, const Point& x0, double r,
                                     const ExtensionGrid& eg, const ClearingOutOptions& opt = {});

double clearing_out_eta0(int n, double s, double lambda);

struct SweepEntry {
  double eps = 0.0;
  ScalarField v;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<double> x;  // log abscissae used
  std::vector<double> y;  // log ordinates used
};

// Least-squares line through (log x_i, log y_i); throws with fewer than 2 points.
SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

// Slope of log sum_{Omega'} W(v_eps) h^n against log eps. Needs >= 4 values with max/min eps >= 8.
SlopeFit potential_decay_fit(const std::vector<SweepEntry>& sweep, const Mask& omega_prime, const DoubleWell& well);

// Along the ray x0 + t dir, t in [t_min, t_max], fits log W(v) against log dist(x, interface),
// the distance measured to the nearest sign change of v. The expected slope is -4s.
SlopeFit potential_envelope_fit(const ScalarField& v, const DoubleWell& well, const Point& x0, const Point& dir,
                                double t_min, double t_max);

struct TransitionVolume {
  std::vector<double> radii;
  std::vector<double> volumes;  // h^n |T_r(transition) within Omega|
  std::size_t transition_nodes = 0;
  bool fitted = false;
  SlopeFit fit;
};

// Tube volumes around {|v| < 1 - delta_W} inside Omega and their log-log slope (skipped when
// the transition set is empty).
TransitionVolume transition_volume_scaling(const ScalarField& v, const ProblemSpec& spec,
                                           const std::vector<double>& radii);

// Points where v - t changes sign along lattice edges, placed by linear interpolation.
std::vector<Point> level_crossings(const ScalarField& v, double t);
// Interface points of a set: midpoints of lattice edges joining nodes of opposite membership.
std::vector<Point> set_interface(const IndicatorSet& e);

struct LevelSetDistance {
  double eps = 0.0;
  double d1 = 0.0;  // sup over level points in K of the distance to the interface of E_*
  double d2 = 0.0;  // sup over interface points in K of the distance to the level set
  double max() const { return d1 > d2 ? d1 : d2; }
};

std::vector<LevelSetDistance> level_set_convergence(const std::vector<SweepEntry>& sweep, double t,
                                                    const IndicatorSet& e_star, const Mask& k);

// Box-counting dimension of the zero crossings of a 2D field inside the mask.
double interface_dimension(const ScalarField& v, const Mask& k, const std::vector<double>& scales);

}  // namespace fracac
