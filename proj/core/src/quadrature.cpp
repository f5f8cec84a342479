#include "fracac/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <map>
#include <mutex>
#include <stdexcept>

namespace fracac {

namespace {

template <unsigned N>
GaussRule expand() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  GaussRule r;
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    r.nodes.push_back(-x[i]);
    r.weights.push_back(w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.nodes.push_back(x[i]);
    r.weights.push_back(w[i]);
  }
  return r;
}

GaussRule make_rule(int order) {
  switch (order) {
    case 2: return expand<2>();
    case 3: return expand<3>();
    case 4: return expand<4>();
    case 5: return expand<5>();
    case 8: return expand<8>();
    case 10: return expand<10>();
    case 16: return expand<16>();
    case 20: return expand<20>();
    case 30: return expand<30>();
    default: throw std::invalid_argument("unsupported Gauss-Legendre order");
  }
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, make_rule(order)).first;
  return it->second;
}

}  // namespace fracac
