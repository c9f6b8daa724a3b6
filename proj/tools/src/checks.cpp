#include "venttsel/app/checks.hpp"

#include "venttsel/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace venttsel::app {

Vector smooth_random_field(const Mesh& m, std::mt19937_64& rng, int modes) {
  Point lo = m.nodes.front(), hi = m.nodes.front();
  for (const auto& x : m.nodes) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  const Point ext = (hi - lo).cwiseMax(Point::Constant(1e-300));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  Vector u = Vector::Zero(static_cast<Eigen::Index>(m.node_count()));
  for (int j = 0; j <= modes; ++j) {
    for (int k = 0; k <= modes; ++k) {
      const double a = normal(rng) / (1.0 + j + k);
      const double px = phase(rng), py = phase(rng);
      for (std::size_t n = 0; n < m.node_count(); ++n) {
        const Point t = (m.nodes[n] - lo).cwiseQuotient(ext);
        u[static_cast<Eigen::Index>(n)] += a * std::cos(kPi * j * t.x() + px) * std::cos(kPi * k * t.y() + py);
      }
    }
  }
  return u;
}

nlohmann::json to_json(const CheckResult& r) {
  return {{"name", r.name}, {"pass", r.pass}, {"value", r.value}, {"limit", r.limit}, {"detail", r.detail}};
}

double max_friedrichs_ratio(const FemSpace& space, int fields, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double best = 0.0;
  for (int i = 0; i < fields; ++i) {
    best = std::max(best, friedrichs_ratio(space, smooth_random_field(space.mesh(), rng)));
  }
  return best;
}

Extremes rayleigh_extremes(const FemSpace& space, const DiscreteSystem& sys, int fields, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Extremes e{std::numeric_limits<double>::infinity(), 0.0};
  for (int i = 0; i < fields; ++i) {
    const Vector u = smooth_random_field(space.mesh(), rng);
    const double v1 = v1_norm(space, u);
    const double q = u.dot(sys.apply(u)) / (v1 * v1);
    e.min = std::min(e.min, q);
    e.max = std::max(e.max, q);
  }
  return e;
}

}  // namespace venttsel::app
