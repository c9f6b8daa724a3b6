#include "venttsel/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace venttsel::quad {

namespace {

Rule1D compute_gauss_legendre(int n) {
  Rule1D r;
  r.points.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const auto idx = static_cast<std::size_t>(n - 1 - i);
    r.points[idx] = 0.5 * (x + 1.0);
    r.weights[idx] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

template <class RuleT, class Make>
const RuleT& cached(std::map<int, std::unique_ptr<RuleT>>& cache, std::mutex& mu, int n, Make make) {
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<RuleT>(make(n))).first;
  return *it->second;
}

}  // namespace

const Rule1D& gauss_legendre(int n) {
  if (n < 1) throw Error("quadrature.order", "Gauss-Legendre order must be positive");
  static std::map<int, std::unique_ptr<Rule1D>> cache;
  static std::mutex mu;
  return cached(cache, mu, n, compute_gauss_legendre);
}

const RuleTriangle& triangle_degree2() {
  static const RuleTriangle rule{
      {Point(1.0 / 6.0, 1.0 / 6.0), Point(2.0 / 3.0, 1.0 / 6.0), Point(1.0 / 6.0, 2.0 / 3.0)},
      {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0}};
  return rule;
}

const RuleTriangle& triangle_collapsed(int n) {
  static std::map<int, std::unique_ptr<RuleTriangle>> cache;
  static std::mutex mu;
  return cached(cache, mu, n, [](int m) {
    const Rule1D& g = gauss_legendre(m);
    RuleTriangle r;
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        const double u = g.points[i];
        const double v = g.points[j];
        r.points.emplace_back(u, v * (1.0 - u));
        r.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - u));
      }
    }
    return r;
  });
}

}  // namespace venttsel::quad
