#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fracac {

// Fixed binary-tree summation: the result depends only on the input order.
double pairwise_sum(std::span<const double> xs);
inline double pairwise_sum(const std::vector<double>& xs) { return pairwise_sum(std::span<const double>(xs)); }

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace fracac
