#include "fracac/params.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fracac {

double gamma_ns(int n, double s) {
  const double nd = n;
  return s * std::pow(2.0, 2.0 * s) * std::pow(std::numbers::pi, -0.5 * nd) * std::tgamma(0.5 * (nd + 2.0 * s)) /
         std::tgamma(1.0 - s);
}

double sigma_ns(int n, double s) {
  const double nd = n;
  return std::pow(std::numbers::pi, -0.5 * nd) * std::tgamma(0.5 * (nd + 2.0 * s)) / std::tgamma(s);
}

double d_s(double s) { return std::pow(2.0, 2.0 * s - 1.0) * std::tgamma(s) / std::tgamma(1.0 - s); }

FractionalParams make_params(int n, double s, double eps) {
  if (n != 1 && n != 2) throw std::invalid_argument("dimension must be 1 or 2");
  if (!(s > 0.0 && s < 0.5)) throw std::invalid_argument("s must lie in (0, 1/2)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  FractionalParams p;
  p.n = n;
  p.s = s;
  p.a = 1.0 - 2.0 * s;
  p.eps = eps;
  p.gamma_ns = gamma_ns(n, s);
  p.sigma_ns = sigma_ns(n, s);
  p.d_s = d_s(s);
  return p;
}

double unit_ball_volume(double m) { return std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(1.0 + 0.5 * m); }

double theta_q(int n, double s, double q) {
  const double lo = n / (1.0 + 2.0 * s);
  if (!(q > lo && q < n)) throw std::invalid_argument("q must lie in (n/(1+2s), n)");
  return 1.0 + 2.0 * s - n / q;
}

}  // namespace fracac
