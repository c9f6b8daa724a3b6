#pragma once

#include "venttsel/common.hpp"
#include "venttsel/geometry.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace venttsel {

/// Conforming P1 triangulation of a polygon.
struct Mesh {
  Polygon polygon;
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<char> boundary;                 // per node
  std::vector<int> corner;                    // polygon vertex index, -1 if none
  std::vector<int> side;                      // polygon side for non-corner boundary nodes, else -1
  double h_target = 0.0;
  double grading = 1.0;

  std::size_t node_count() const noexcept { return nodes.size(); }
  std::size_t triangle_count() const noexcept { return triangles.size(); }
  /// Mesh node sitting on polygon vertex v.
  int corner_node(std::size_t v) const;
};

/// Target local mesh size h * min(1, max(r, h^q))^(1 - 1/q), r the distance
/// to the nearest corner. Equals h for q = 1.
double grading_size(const Polygon& p, double h, double q, const Point& x);

/// Grading exponent compensating a weight sigma in (0, 1/2): 1 / (1 - sigma).
double default_grading(double sigma);

/// Boundary layout plus Delaunay refinement to a 20 degree angle floor and the
/// grading_size() target. Throws for h above the shortest side or q < 1.
Mesh triangulate(const Polygon& p, double h, double q = 1.0);

/// Red refinement: every triangle split into four by its edge midpoints.
/// Existing nodes keep their indices.
Mesh refine(const Mesh& m);

struct BoundarySegment {
  std::array<int, 2> local;   // boundary-node numbering
  std::array<int, 2> global;  // mesh-node numbering (-1 for standalone polylines)
  int side = -1;
  double length = 0.0;
  Point normal = Point::Zero();  // outward unit normal
};

/// Closed counterclockwise boundary polyline; segment k joins boundary
/// nodes k and k+1 (mod n).
struct BoundaryMesh {
  std::vector<Point> points;
  std::vector<int> nodes;               // global index of each boundary node
  std::vector<int> corner;              // polygon vertex index or -1
  std::vector<double> arclength;        // cumulative, arclength[0] = 0
  std::vector<BoundarySegment> segments;
  std::vector<int> global_to_local;     // size = mesh node count, -1 for interior nodes

  std::size_t size() const noexcept { return points.size(); }
  double perimeter() const;

  /// Standalone closed polyline (no bulk mesh). Sides default to one per segment.
  static BoundaryMesh from_polyline(std::span<const Point> points, std::span<const int> sides = {});
};

BoundaryMesh extract_boundary(const Mesh& m);

// Quality measures.
double total_area(const Mesh& m);
double triangle_diameter(const Mesh& m, std::size_t t);
double min_angle_degrees(const Mesh& m);
double max_diameter(const Mesh& m);
double min_diameter(const Mesh& m);
/// Length of the shortest boundary edge incident to the corner node at vertex v.
double corner_local_size(const Mesh& m, std::size_t v);
/// Smallest diameter among triangles incident to the corner node at vertex v.
double corner_element_diameter(const Mesh& m, std::size_t v);
/// Structural checks: positive areas, conformity, boundary on the polygon.
/// Returns an empty string when valid, else a description of the first defect.
std::string validate_mesh(const Mesh& m);

/// Plain-text dump: `nodes N triangles T`, N lines `x y`, T lines `i j k`.
void write_mesh(std::ostream& os, const Mesh& m);
/// Mesh dump followed by `field N` and one value per line.
void write_field(std::ostream& os, const Mesh& m, const Vector& values);

/// Containing-triangle lookup on a mesh through a uniform bucket grid.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& m);
  /// Triangle index and barycentric coordinates of x, or nullopt if outside.
  std::optional<std::pair<int, std::array<double, 3>>> locate(const Point& x) const;
  /// P1 interpolation of nodal values at x; x outside snaps to the closest triangle.
  double evaluate(const Vector& values, const Point& x) const;

 private:
  const Mesh& mesh_;
  Point lo_, hi_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// Interpolates a field on `from` at every node of `to`.
Vector transfer_field(const Mesh& from, const Vector& values, const Mesh& to);

}  // namespace venttsel
