#pragma once

namespace fracac {

struct FractionalParams {
  int n = 1;
  double s = 0.25;
  double a = 0.5;
  double eps = 1.0;
  double gamma_ns = 0.0;
  double sigma_ns = 0.0;
  double d_s = 0.0;
};

FractionalParams make_params(int n, double s, double eps);

double gamma_ns(int n, double s);
double sigma_ns(int n, double s);
double d_s(double s);

// Volume of the unit ball in dimension m, extended to real m.
double unit_ball_volume(double m);
// Exponent 1 + 2s - n/q of the drift term in the monotonicity formula.
double theta_q(int n, double s, double q);

}  // namespace fracac
