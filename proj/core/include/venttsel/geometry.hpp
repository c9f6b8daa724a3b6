#pragma once

#include "venttsel/common.hpp"

#include <span>
#include <vector>

namespace venttsel {

/// Simple polygon with counterclockwise vertices and interior angles.
///
/// Side i runs from vertex i to vertex i+1 (cyclic). Vertices whose interior
/// angle is exactly pi are merged away during construction, so every stored
/// vertex is a true corner.
class Polygon {
 public:
  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<double>& angles() const noexcept { return angles_; }
  std::size_t size() const noexcept { return vertices_.size(); }
  const Point& vertex(std::size_t i) const { return vertices_[i % vertices_.size()]; }

  double alpha_max() const noexcept { return alpha_max_; }
  bool is_convex() const noexcept { return alpha_max_ < kPi; }
  /// True when the input was clockwise and got reversed.
  bool reoriented() const noexcept { return reoriented_; }

  double side_length(std::size_t i) const;
  Point side_tangent(std::size_t i) const;
  /// Outward unit normal of side i (constant along the side).
  Point side_normal(std::size_t i) const;
  double perimeter() const;
  double area() const;
  double shortest_side() const;
  double diameter() const;

  /// Distance from x to side i (closed segment).
  double dist_to_side(const Point& x, std::size_t i) const;
  double dist_to_boundary(const Point& x) const;
  bool contains(const Point& x, double tol = 1e-12) const;

  friend Polygon build_polygon(std::span<const Point> points);

 private:
  std::vector<Point> vertices_;
  std::vector<double> angles_;
  double alpha_max_ = 0.0;
  bool reoriented_ = false;
};

/// Validates and normalizes a vertex list. Throws Error on fewer than three
/// distinct corners, repeated consecutive points, or self-intersection.
Polygon build_polygon(std::span<const Point> points);
Polygon build_polygon(std::initializer_list<Point> points);

/// Admissible sigma range max(1 - pi/alpha, -1/2) (<|<=) sigma < 1/2.
struct WeightWindow {
  double lower = -0.5;
  bool lower_closed = true;
  double upper = 0.5;

  bool empty() const noexcept { return !(lower < upper); }
  bool contains(double sigma) const noexcept;
  double midpoint() const noexcept { return 0.5 * (lower + upper); }
};

WeightWindow sigma_window(const Polygon& p);

/// Euclidean distance from x to the nearest polygon vertex.
double dist_to_vertices(const Polygon& p, const Point& x);
/// Index of the vertex nearest to x.
std::size_t nearest_vertex(const Polygon& p, const Point& x);

/// Distance between two closed segments [a0,a1] and [b0,b1].
double segment_distance(const Point& a0, const Point& a1, const Point& b0, const Point& b1);
double point_segment_distance(const Point& x, const Point& a, const Point& b);

namespace shapes {
Polygon unit_square();
Polygon l_shape();
}  // namespace shapes

}  // namespace venttsel
