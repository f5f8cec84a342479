#pragma once

#include <vector>

namespace fracac {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Gauss-Legendre rule of the given order (supported: 2, 3, 4, 5, 8, 10, 16, 20, 30).
const GaussRule& gauss_legendre(int order);

}  // namespace fracac
