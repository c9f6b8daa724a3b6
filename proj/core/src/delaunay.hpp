#pragma once

#include "venttsel/common.hpp"
#include "venttsel/geometry.hpp"

#include <array>
#include <functional>
#include <vector>

namespace venttsel::detail {

struct LayoutPoint {
  Point x;
  int side = -1;    // side the point lies on (corners: the side starting there)
  int corner = -1;  // polygon vertex index, or -1
};

struct RefineOptions {
  /// Circumradius-to-shortest-edge bound; sqrt(2) gives a 20.7 degree floor.
  double max_radius_edge_ratio = 1.4142135623730951;
  /// A triangle is too large when its circumradius exceeds this times the
  /// local size target.
  double size_factor = 0.75;
  std::size_t max_points = 4'000'000;
};

struct RawMesh {
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> side;
  std::vector<int> corner;
  std::vector<char> boundary;
};

/// Conforming Delaunay triangulation of the polygon bounded by `layout`
/// (counterclockwise, closed), refined until every triangle meets the
/// quality bound and the size target. Boundary segments are split at
/// midpoints when missing or encroached.
RawMesh delaunay_refine(const Polygon& polygon, const std::vector<LayoutPoint>& layout,
                        const std::function<double(const Point&)>& size,
                        const RefineOptions& options = {});

}  // namespace venttsel::detail
