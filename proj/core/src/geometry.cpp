#include "venttsel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace venttsel {

namespace {

double orient(const Point& a, const Point& b, const Point& c) { return cross(b - a, c - a); }

bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double d1 = orient(c, d, a);
  const double d2 = orient(c, d, b);
  const double d3 = orient(a, b, c);
  const double d4 = orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  // Collinear overlap or touching endpoints of non-adjacent sides.
  const double scale = std::max({(b - a).norm(), (d - c).norm(), 1e-300});
  const double eps = 1e-14 * scale * scale;
  auto on_seg = [&](const Point& p, const Point& q, const Point& r, double o) {
    return std::abs(o) <= eps && std::min(p.x(), q.x()) - 1e-14 * scale <= r.x() &&
           r.x() <= std::max(p.x(), q.x()) + 1e-14 * scale &&
           std::min(p.y(), q.y()) - 1e-14 * scale <= r.y() &&
           r.y() <= std::max(p.y(), q.y()) + 1e-14 * scale;
  };
  return on_seg(c, d, a, d1) || on_seg(c, d, b, d2) || on_seg(a, b, c, d3) || on_seg(a, b, d, d4);
}

double signed_area(const std::vector<Point>& v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * a;
}

}  // namespace

double point_segment_distance(const Point& x, const Point& a, const Point& b) {
  const Point d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (x - a).norm();
  const double t = std::clamp((x - a).dot(d) / len2, 0.0, 1.0);
  return (x - (a + t * d)).norm();
}

double segment_distance(const Point& a0, const Point& a1, const Point& b0, const Point& b1) {
  if (segments_intersect(a0, a1, b0, b1)) return 0.0;
  return std::min({point_segment_distance(a0, b0, b1), point_segment_distance(a1, b0, b1),
                   point_segment_distance(b0, a0, a1), point_segment_distance(b1, a0, a1)});
}

Polygon build_polygon(std::span<const Point> points) {
  if (points.size() < 3) throw Error("polygon.vertex_count", "polygon needs at least 3 points");
  double scale = 0.0;
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error("polygon.non_finite", "polygon vertex is not finite");
    scale = std::max(scale, p.cwiseAbs().maxCoeff());
  }
  const double tol = 1e-12 * std::max(scale, 1.0);
  std::vector<Point> v(points.begin(), points.end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if ((v[i] - v[(i + 1) % v.size()]).norm() <= tol) {
      throw Error("polygon.repeated_point",
                  "consecutive polygon points " + std::to_string(i) + " and " +
                      std::to_string((i + 1) % v.size()) + " coincide");
    }
  }

  // Drop straight-angle vertices: they are not corners.
  bool changed = true;
  while (changed && v.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point& prev = v[(i + v.size() - 1) % v.size()];
      const Point& next = v[(i + 1) % v.size()];
      const Point e1 = (v[i] - prev).normalized();
      const Point e2 = (next - v[i]).normalized();
      if (std::abs(cross(e1, e2)) <= 1e-12 && e1.dot(e2) > 0.0) {
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  if (v.size() < 3) throw Error("polygon.vertex_count", "polygon degenerates to fewer than 3 corners");

  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Adjacent sides may only share their common vertex; a reversal
        // (angle 0 or 2 pi) is a cusp.
        const std::size_t shared = (j == i + 1) ? j : i;
        const Point& prev = v[(shared + n - 1) % n];
        const Point& next = v[(shared + 1) % n];
        const Point e1 = (prev - v[shared]).normalized();
        const Point e2 = (next - v[shared]).normalized();
        if (std::abs(cross(e1, e2)) <= 1e-12 && e1.dot(e2) > 0.0) {
          throw Error("polygon.cusp", "polygon has a cusp at vertex " + std::to_string(shared));
        }
        continue;
      }
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) {
        throw Error("polygon.self_intersecting", "polygon sides " + std::to_string(i) + " and " +
                                                     std::to_string(j) + " intersect");
      }
    }
  }

  Polygon p;
  if (signed_area(v) < 0.0) {
    std::reverse(v.begin(), v.end());
    // keep the caller's first vertex first
    std::rotate(v.begin(), v.end() - 1, v.end());
    p.reoriented_ = true;
  }
  p.vertices_ = std::move(v);
  p.angles_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point& prev = p.vertices_[(i + n - 1) % n];
    const Point& next = p.vertices_[(i + 1) % n];
    const Point to_next = next - p.vertices_[i];
    const Point to_prev = prev - p.vertices_[i];
    // Interior lies to the left of each directed side; sweep from the next
    // side counterclockwise to the previous one.
    double a = std::atan2(cross(to_next, to_prev), to_next.dot(to_prev));
    if (a <= 0.0) a += 2.0 * kPi;
    p.angles_[i] = a;
  }
  p.alpha_max_ = *std::max_element(p.angles_.begin(), p.angles_.end());
  return p;
}

Polygon build_polygon(std::initializer_list<Point> points) {
  return build_polygon(std::span<const Point>(points.begin(), points.size()));
}

double Polygon::side_length(std::size_t i) const { return (vertex(i + 1) - vertex(i)).norm(); }

Point Polygon::side_tangent(std::size_t i) const { return (vertex(i + 1) - vertex(i)).normalized(); }

Point Polygon::side_normal(std::size_t i) const {
  const Point t = side_tangent(i);
  return {t.y(), -t.x()};
}

double Polygon::perimeter() const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += side_length(i);
  return s;
}

double Polygon::area() const { return signed_area(vertices_); }

double Polygon::shortest_side() const {
  double s = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i) s = std::min(s, side_length(i));
  return s;
}

double Polygon::diameter() const {
  double d = 0.0;
  for (const auto& a : vertices_)
    for (const auto& b : vertices_) d = std::max(d, (a - b).norm());
  return d;
}

double Polygon::dist_to_side(const Point& x, std::size_t i) const {
  return point_segment_distance(x, vertex(i), vertex(i + 1));
}

double Polygon::dist_to_boundary(const Point& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i) d = std::min(d, dist_to_side(x, i));
  return d;
}

bool Polygon::contains(const Point& x, double tol) const {
  if (dist_to_boundary(x) <= tol * std::max(1.0, diameter())) return true;
  // Winding via crossing number.
  bool inside = false;
  const std::size_t n = size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = vertices_[i];
    const Point& b = vertices_[j];
    if ((a.y() > x.y()) != (b.y() > x.y())) {
      const double xc = a.x() + (x.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (x.x() < xc) inside = !inside;
    }
  }
  return inside;
}

bool WeightWindow::contains(double sigma) const noexcept {
  if (empty()) return false;
  const bool above = lower_closed ? sigma >= lower : sigma > lower;
  return above && sigma < upper;
}

WeightWindow sigma_window(const Polygon& p) {
  const double angle_bound = 1.0 - kPi / p.alpha_max();
  WeightWindow w;
  if (angle_bound > -0.5) {
    w.lower = angle_bound;
    w.lower_closed = false;
  } else {
    w.lower = -0.5;
    w.lower_closed = true;
  }
  return w;
}

double dist_to_vertices(const Polygon& p, const Point& x) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& v : p.vertices()) d = std::min(d, (x - v).norm());
  return d;
}

std::size_t nearest_vertex(const Polygon& p, const Point& x) {
  std::size_t best = 0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double di = (x - p.vertex(i)).norm();
    if (di < d) {
      d = di;
      best = i;
    }
  }
  return best;
}

namespace shapes {

Polygon unit_square() { return build_polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }

Polygon l_shape() { return build_polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}); }

}  // namespace shapes

}  // namespace venttsel
