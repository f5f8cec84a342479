#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracac/grid.hpp"
#include "fracac/potential.hpp"
#include "fracac/solver.hpp"

namespace fracac::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RegionSpec {
  std::string shape = "interval";  // interval, box, square, disc
  Point lo{-1.0, 0.0};
  Point hi{1.0, 0.0};
  Point center{0.0, 0.0};
  double radius = 1.0;
  double half_side = 1.0;

  Omega omega(int dim) const;
};

// Exterior data g or forcing f.
struct DataSpec {
  std::string kind = "zero";  // zero, constant, sign, cross (g); zero, constant, linear (f)
  Point normal{1.0, 0.0};
  double offset = 0.0;
  double value = 0.0;
  Point slope{0.0, 0.0};
};

struct SetSpec {
  std::string name;  // half-line, half-space, interval, box, ball, cross, empty, whole, csv
  Point normal{1.0, 0.0};
  double offset = 0.0;
  Point lo{-1.0, 0.0};
  Point hi{1.0, 0.0};
  Point center{0.0, 0.0};
  double radius = 1.0;
  std::string path;
  std::string far = "constant-out";  // for csv: constant-in, constant-out, half-space, cross
};

// Compactly supported test field: translation bump(|y-c|/r) dir, or dilation (y-c) bump(|y-c|/r).
struct FieldSpec {
  std::string kind = "translation";
  Point center{0.0, 0.0};
  double radius = 0.5;
  Point direction{1.0, 0.0};
};

struct ExperimentConfig {
  // grid
  int dim = 1;
  double h = 1.0 / 1024;
  double offset = 0.0;
  RegionSpec omega;
  double r_trunc = 8.0;
  // physics
  double s = 0.25;
  std::optional<double> eps;
  std::vector<double> eps_list;
  std::string potential = "prototype";
  DataSpec g;
  DataSpec f;
  std::optional<double> gamma_override;
  // solver
  double tol = 1e-8;
  std::size_t max_iters = 200000;
  std::string init = "from-g";  // from-g, mollified
  double mollify_cells = 2.0;
  // diagnostics
  std::vector<double> radii;
  std::vector<Point> centers;
  std::optional<RegionSpec> omega_prime;
  std::vector<double> levels{0.0, 0.5};
  std::optional<RegionSpec> k;
  std::vector<double> transition_radii;
  double drift_constant = 0.0;
  double lambda = 1.0;
  // geometry
  std::optional<SetSpec> set;
  double s_prime = 0.25;
  std::vector<Point> points;
  std::vector<FieldSpec> fields;
  double variation_steps = 3.0;
  Point apex{0.0, 0.0};

  // Canonical (key-sorted) JSON text and its SHA-1, recorded in output headers.
  std::string canonical;
  std::string hash;
};

// Strict parsing: unknown keys, wrong types and invalid constants throw ConfigError with the
// offending field path (or the parser's line and column).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::string sha1_hex(const std::string& data);

// Objects built from a configuration.
GridPtr make_grid(const ExperimentConfig& c, double h_scale = 1.0);
FarField data_tail(const DataSpec& d, int dim);
ScalarField make_g(const ExperimentConfig& c, GridPtr g);
ScalarField make_f(const ExperimentConfig& c, GridPtr g);
FractionalParams make_physics(const ExperimentConfig& c, double eps);
DoubleWell make_potential(const ExperimentConfig& c);
ProblemSpec make_spec(const ExperimentConfig& c, GridPtr g, double eps);
IndicatorSet make_set(const SetSpec& s, GridPtr g);
// Limit set suggested by the exterior data (sign: the half-space; cross: the cross; constant: whole or empty).
IndicatorSet limit_set(const ExperimentConfig& c, GridPtr g);

}  // namespace fracac::cli
