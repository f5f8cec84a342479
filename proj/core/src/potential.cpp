#include "fracac/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace fracac {

DoubleWell make_prototype_well() {
  DoubleWell w;
  w.name = "prototype";
  w.W = [](double t) {
    const double q = 1.0 - t * t;
    return 0.25 * q * q;
  };
  w.Wp = [](double t) { return t * t * t - t; };
  w.Wpp = [](double t) { return 3.0 * t * t - 1.0; };
  w.p = 4.0;
  w.c_W = 3.0;
  w.delta_W = 0.18;
  w.kappa_W = 1.0;
  return w;
}

DoubleWell make_well(std::string name, RealFn W, RealFn Wp, RealFn Wpp, double p, double c_W, double delta_W) {
  if (!(p > 1.0)) throw std::invalid_argument("growth exponent p must exceed 1");
  if (!(c_W > 0.0)) throw std::invalid_argument("c_W must be positive");
  if (!(delta_W > 0.0 && delta_W <= 0.5)) throw std::invalid_argument("delta_W must lie in (0, 1/2]");
  DoubleWell w;
  w.name = std::move(name);
  w.W = std::move(W);
  w.Wp = std::move(Wp);
  w.Wpp = std::move(Wpp);
  w.p = p;
  w.c_W = c_W;
  w.delta_W = delta_W;
  w.kappa_W = 0.5 * std::min(w.Wpp(1.0), w.Wpp(-1.0));
  return w;
}

RealFn convexified_well(const DoubleWell& w, int kappa) {
  if (kappa != 1 && kappa != -1) throw std::invalid_argument("kappa must be +1 or -1");
  const double lo = kappa - w.delta_W;
  const double hi = kappa + w.delta_W;
  const double w_lo = w.W(lo), s_lo = w.Wp(lo);
  const double w_hi = w.W(hi), s_hi = w.Wp(hi);
  auto W = w.W;
  return [=](double t) {
    if (t < lo) return w_lo + s_lo * (t - lo);
    if (t > hi) return w_hi + s_hi * (t - hi);
    return W(t);
  };
}

bool WellReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.pass; });
}

const AssumptionCheck* WellReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

WellReport verify_structural_assumptions(const DoubleWell& w, double lo, double hi, std::size_t n_samples) {
  if (n_samples < 1000) throw std::invalid_argument("at least 1000 samples required");
  if (!(lo < hi)) throw std::invalid_argument("empty sample range");
  WellReport rep;
  const double dt = (hi - lo) / static_cast<double>(n_samples - 1);
  auto sample = [&](std::size_t i) { return lo + dt * static_cast<double>(i); };

  {
    AssumptionCheck c{"{W=0} = {+-1}", true, std::numeric_limits<double>::infinity(), ""};
    const double at_wells = std::max(std::abs(w.W(1.0)), std::abs(w.W(-1.0)));
    if (at_wells > 1e-12) {
      c.pass = false;
      c.detail = "W(+-1) = " + std::to_string(at_wells);
    }
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double t = sample(i);
      if (std::abs(std::abs(t) - 1.0) < 1e-3) continue;
      const double v = w.W(t);
      c.margin = std::min(c.margin, v);
      if (!(v > 0.0)) {
        c.pass = false;
        c.detail = "W vanishes away from the wells at t = " + std::to_string(t);
      }
    }
    c.margin = std::min(c.margin, -at_wells);
    rep.checks.push_back(c);
  }
  {
    AssumptionCheck c{"W >= 0", true, std::numeric_limits<double>::infinity(), ""};
    for (std::size_t i = 0; i < n_samples; ++i) c.margin = std::min(c.margin, w.W(sample(i)));
    c.pass = c.margin >= -1e-12;
    rep.checks.push_back(c);
  }
  {
    const double m = std::min(w.Wpp(1.0), w.Wpp(-1.0));
    rep.checks.push_back({"W''(+-1) > 0", m > 0.0, m, ""});
  }
  {
    AssumptionCheck c{"W'' >= kappa_W near the wells", w.delta_W > 0.0 && w.delta_W <= 0.5,
                      std::numeric_limits<double>::infinity(), ""};
    const double kappa = 0.5 * std::min(w.Wpp(1.0), w.Wpp(-1.0));
    const std::size_t m = std::max<std::size_t>(n_samples / 4, 1000);
    for (int sgn : {-1, 1}) {
      for (std::size_t i = 0; i < m; ++i) {
        const double t = sgn * (1.0 - w.delta_W + 2.0 * w.delta_W * static_cast<double>(i) / (m - 1));
        c.margin = std::min(c.margin, w.Wpp(t) - kappa);
      }
    }
    if (c.margin < -1e-12) c.pass = false;
    rep.checks.push_back(c);
  }
  {
    AssumptionCheck lower{"(H3) lower growth", true, std::numeric_limits<double>::infinity(), ""};
    AssumptionCheck upper{"(H3) upper growth", true, std::numeric_limits<double>::infinity(), ""};
    auto probe = [&](double t) {
      const double at = std::abs(t);
      const double g = std::pow(at, w.p - 1.0);
      const double d = std::abs(w.Wp(t));
      const double lo_gap = d - (g - 1.0) / w.c_W;
      const double hi_gap = w.c_W * (g + 1.0) - d;
      const double scale = g + 1.0;
      lower.margin = std::min(lower.margin, lo_gap / scale);
      upper.margin = std::min(upper.margin, hi_gap / scale);
      if (lo_gap < -1e-12 * scale && lower.pass) {
        lower.pass = false;
        lower.detail = "violated at t = " + std::to_string(t);
      }
      if (hi_gap < -1e-12 * scale && upper.pass) {
        upper.pass = false;
        upper.detail = "violated at t = " + std::to_string(t);
      }
    };
    for (std::size_t i = 0; i < n_samples; ++i) probe(sample(i));
    // Asymptotic ratio: the growth bounds must also hold far outside the sampled range.
    for (double t : {1e3, 1e4, 1e6, -1e3, -1e4, -1e6}) probe(t);
    rep.checks.push_back(lower);
    rep.checks.push_back(upper);
  }
  {
    const double step = 1e-4 * std::max(1.0, hi - lo);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double t = sample(i);
      const double scale = 1.0 + std::pow(std::abs(t), w.p);
      e1 = std::max(e1, std::abs(w.Wp(t) - (w.W(t + step) - w.W(t)) / step) / scale);
      e2 = std::max(e2, std::abs(w.Wpp(t) - (w.Wp(t + step) - w.Wp(t)) / step) / scale);
    }
    rep.fd_first_error = e1;
    rep.fd_second_error = e2;
    rep.fd_step = step;
    const bool ok = e1 <= 100.0 * step && e2 <= 100.0 * step;
    std::ostringstream os;
    os << "|W' - dW/dt| = " << e1 << ", |W'' - dW'/dt| = " << e2 << " at step " << step;
    rep.checks.push_back({"finite-difference consistency", ok, 100.0 * step - std::max(e1, e2), os.str()});
  }
  return rep;
}

double well_lipschitz(const DoubleWell& w, double bound, std::size_t n_samples) {
  double m = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = -bound + 2.0 * bound * static_cast<double>(i) / static_cast<double>(n_samples - 1);
    m = std::max(m, std::abs(w.Wpp(t)));
  }
  return m;
}

}  // namespace fracac
