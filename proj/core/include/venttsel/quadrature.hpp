#pragma once

#include "venttsel/common.hpp"

#include <vector>

namespace venttsel::quad {

/// Gauss-Legendre rule on [0, 1].
struct Rule1D {
  std::vector<double> points;
  std::vector<double> weights;
  std::size_t size() const noexcept { return points.size(); }
};

/// Rule on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2.
struct RuleTriangle {
  std::vector<Point> points;
  std::vector<double> weights;
  std::size_t size() const noexcept { return points.size(); }
};

/// n-point Gauss-Legendre on [0,1], computed by Newton iteration on P_n and
/// cached per order. Thread-safe.
const Rule1D& gauss_legendre(int n);

/// Symmetric 3-point rule exact for quadratics.
const RuleTriangle& triangle_degree2();
/// Collapsed (Duffy) tensor Gauss rule with n points per direction; exact
/// for polynomials of degree 2n - 2.
const RuleTriangle& triangle_collapsed(int n);

/// Maps a reference-triangle point onto triangle (a, b, c).
inline Point map_triangle(const Point& ref, const Point& a, const Point& b, const Point& c) {
  return a + ref.x() * (b - a) + ref.y() * (c - a);
}

inline double triangle_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * cross(b - a, c - a);
}

}  // namespace venttsel::quad
