#include "venttsel/mesh.hpp"

#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <unordered_map>

namespace venttsel {

namespace {

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

// Sides a boundary node can lie on: its own side, or both sides at a corner.
std::array<int, 2> node_sides(const Mesh& m, int v) {
  const auto i = static_cast<std::size_t>(v);
  if (m.corner[i] >= 0) {
    const int n = static_cast<int>(m.polygon.size());
    return {m.corner[i], (m.corner[i] + n - 1) % n};
  }
  return {m.side[i], m.side[i]};
}

int common_side(const Mesh& m, int a, int b) {
  const auto sa = node_sides(m, a);
  const auto sb = node_sides(m, b);
  for (const int x : sa) {
    if (x < 0) continue;
    for (const int y : sb)
      if (x == y) return x;
  }
  return -1;
}

// Points along side i spaced so that consecutive gaps follow the size target.
std::vector<detail::LayoutPoint> side_layout(const Polygon& p, std::size_t i, double h, double q) {
  const Point a = p.vertex(i);
  const Point tau = p.side_tangent(i);
  const double len = p.side_length(i);
  const double hmin = h * std::pow(std::min(1.0, h), q - 1.0);
  const auto steps = static_cast<std::size_t>(
      std::clamp(40.0 * len / hmin, 20000.0, 4.0e6));
  std::vector<double> phi(steps + 1, 0.0);
  const double dt = len / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * dt;
    phi[k + 1] = phi[k] + dt / grading_size(p, h, q, a + t * tau);
  }
  const double total = phi.back();
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(total - 1e-9)));
  std::vector<detail::LayoutPoint> out;
  out.push_back({a, static_cast<int>(i), static_cast<int>(i)});
  std::size_t k = 0;
  for (std::size_t j = 1; j < n; ++j) {
    const double target = total * static_cast<double>(j) / static_cast<double>(n);
    while (k + 1 < steps && phi[k + 1] < target) ++k;
    const double frac = (target - phi[k]) / (phi[k + 1] - phi[k]);
    const double t = (static_cast<double>(k) + frac) * dt;
    out.push_back({a + t * tau, static_cast<int>(i), -1});
  }
  return out;
}

}  // namespace

int Mesh::corner_node(std::size_t v) const {
  for (std::size_t i = 0; i < corner.size(); ++i)
    if (corner[i] == static_cast<int>(v)) return static_cast<int>(i);
  throw Error("mesh.corner_missing", "polygon vertex is not a mesh node");
}

double grading_size(const Polygon& p, double h, double q, const Point& x) {
  if (q == 1.0) return h;
  const double r = dist_to_vertices(p, x);
  return h * std::pow(std::min(1.0, std::max(r, std::pow(h, q))), 1.0 - 1.0 / q);
}

double default_grading(double sigma) {
  if (!(sigma > 0.0 && sigma < 0.5)) return 1.0;
  return 1.0 / (1.0 - sigma);
}

Mesh triangulate(const Polygon& p, double h, double q) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error("mesh.h_positive", "mesh size h must be positive");
  if (!(q >= 1.0)) throw Error("mesh.grading", "grading exponent q must be at least 1");
  if (h > p.shortest_side() * (1.0 + 1e-12)) {
    throw Error("mesh.h_too_large", "mesh size h exceeds the shortest polygon side");
  }
  std::vector<detail::LayoutPoint> layout;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pts = side_layout(p, i, h, q);
    layout.insert(layout.end(), pts.begin(), pts.end());
  }
  const auto size = [&](const Point& x) { return grading_size(p, h, q, x); };
  detail::RawMesh raw = detail::delaunay_refine(p, layout, size);

  Mesh m;
  m.polygon = p;
  m.nodes = std::move(raw.nodes);
  m.triangles = std::move(raw.triangles);
  m.boundary = std::move(raw.boundary);
  m.corner = std::move(raw.corner);
  m.side = std::move(raw.side);
  for (std::size_t i = 0; i < m.side.size(); ++i) {
    if (m.corner[i] >= 0 || !m.boundary[i]) m.side[i] = -1;
  }
  m.h_target = h;
  m.grading = q;
  return m;
}

Mesh refine(const Mesh& m) {
  Mesh out;
  out.polygon = m.polygon;
  out.nodes = m.nodes;
  out.boundary = m.boundary;
  out.corner = m.corner;
  out.side = m.side;
  out.h_target = 0.5 * m.h_target;
  out.grading = m.grading;

  std::unordered_map<std::uint64_t, int> count;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) ++count[edge_key(t[static_cast<std::size_t>(e)], t[static_cast<std::size_t>((e + 1) % 3)])];

  std::unordered_map<std::uint64_t, int> mid;
  const auto midpoint = [&](int a, int b) {
    const auto key = edge_key(a, b);
    const auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const int id = static_cast<int>(out.nodes.size());
    out.nodes.push_back(0.5 * (m.nodes[static_cast<std::size_t>(a)] + m.nodes[static_cast<std::size_t>(b)]));
    const bool bnd = count.at(key) == 1;
    out.boundary.push_back(bnd ? 1 : 0);
    out.corner.push_back(-1);
    out.side.push_back(bnd ? common_side(m, a, b) : -1);
    mid.emplace(key, id);
    return id;
  };
  out.triangles.reserve(4 * m.triangles.size());
  for (const auto& t : m.triangles) {
    const int ab = midpoint(t[0], t[1]);
    const int bc = midpoint(t[1], t[2]);
    const int ca = midpoint(t[2], t[0]);
    out.triangles.push_back({t[0], ab, ca});
    out.triangles.push_back({ab, t[1], bc});
    out.triangles.push_back({ca, bc, t[2]});
    out.triangles.push_back({ab, bc, ca});
  }
  return out;
}

double BoundaryMesh::perimeter() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.length;
  return total;
}

BoundaryMesh BoundaryMesh::from_polyline(std::span<const Point> points, std::span<const int> sides) {
  const std::size_t n = points.size();
  if (n < 2) throw Error("boundary.too_small", "a closed polyline needs at least two points");
  if (!sides.empty() && sides.size() != n) throw Error("boundary.sides", "one side id per segment expected");
  BoundaryMesh bm;
  bm.points.assign(points.begin(), points.end());
  bm.nodes.assign(n, -1);
  bm.corner.assign(n, -1);
  bm.arclength.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    BoundarySegment seg;
    seg.local = {static_cast<int>(k), static_cast<int>((k + 1) % n)};
    seg.global = {-1, -1};
    seg.side = sides.empty() ? static_cast<int>(k) : sides[k];
    const Point d = points[(k + 1) % n] - points[k];
    seg.length = d.norm();
    if (!(seg.length > 0.0)) throw Error("boundary.zero_length", "boundary segment has zero length");
    seg.normal = Point(d.y(), -d.x()) / seg.length;
    bm.segments.push_back(seg);
    if (k + 1 < n) bm.arclength[k + 1] = bm.arclength[k] + seg.length;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& prev = bm.segments[(k + n - 1) % n];
    if (prev.side != bm.segments[k].side) bm.corner[k] = bm.segments[k].side;
  }
  return bm;
}

BoundaryMesh extract_boundary(const Mesh& m) {
  std::unordered_map<std::uint64_t, std::pair<int, std::pair<int, int>>> edges;
  for (const auto& t : m.triangles) {
    for (std::size_t e = 0; e < 3; ++e) {
      const int a = t[e];
      const int b = t[(e + 1) % 3];
      auto& entry = edges[edge_key(a, b)];
      ++entry.first;
      entry.second = {a, b};
    }
  }
  std::vector<int> next(m.node_count(), -1);
  std::size_t n_bdry = 0;
  for (const auto& [key, entry] : edges) {
    if (entry.first > 2) throw Error("mesh.nonconforming", "edge shared by more than two triangles");
    if (entry.first != 1) continue;
    const auto [a, b] = entry.second;
    if (next[static_cast<std::size_t>(a)] != -1) {
      throw Error("mesh.boundary_not_cycle", "boundary branches at a node");
    }
    next[static_cast<std::size_t>(a)] = b;
    ++n_bdry;
  }

  BoundaryMesh bm;
  bm.global_to_local.assign(m.node_count(), -1);
  const int start = m.corner_node(0);
  int v = start;
  do {
    if (v < 0 || bm.global_to_local[static_cast<std::size_t>(v)] >= 0) {
      throw Error("mesh.boundary_not_cycle", "boundary is not a single closed cycle");
    }
    bm.global_to_local[static_cast<std::size_t>(v)] = static_cast<int>(bm.nodes.size());
    bm.nodes.push_back(v);
    v = next[static_cast<std::size_t>(v)];
  } while (v != start);
  if (bm.nodes.size() != n_bdry) throw Error("mesh.boundary_not_cycle", "boundary has more than one component");

  const std::size_t n = bm.nodes.size();
  bm.points.reserve(n);
  bm.corner.reserve(n);
  bm.arclength.assign(n, 0.0);
  for (const int g : bm.nodes) {
    bm.points.push_back(m.nodes[static_cast<std::size_t>(g)]);
    bm.corner.push_back(m.corner[static_cast<std::size_t>(g)]);
  }
  for (std::size_t k = 0; k < n; ++k) {
    BoundarySegment seg;
    seg.local = {static_cast<int>(k), static_cast<int>((k + 1) % n)};
    seg.global = {bm.nodes[k], bm.nodes[(k + 1) % n]};
    seg.side = common_side(m, seg.global[0], seg.global[1]);
    if (seg.side < 0) throw Error("mesh.boundary_side", "boundary segment does not lie on a polygon side");
    seg.length = (bm.points[(k + 1) % n] - bm.points[k]).norm();
    if (!(seg.length > 0.0)) throw Error("boundary.zero_length", "boundary segment has zero length");
    seg.normal = m.polygon.side_normal(static_cast<std::size_t>(seg.side));
    bm.segments.push_back(seg);
    if (k + 1 < n) bm.arclength[k + 1] = bm.arclength[k] + seg.length;
  }
  return bm;
}

double total_area(const Mesh& m) {
  double a = 0.0;
  for (const auto& t : m.triangles) {
    a += 0.5 * cross(m.nodes[static_cast<std::size_t>(t[1])] - m.nodes[static_cast<std::size_t>(t[0])],
                     m.nodes[static_cast<std::size_t>(t[2])] - m.nodes[static_cast<std::size_t>(t[0])]);
  }
  return a;
}

double triangle_diameter(const Mesh& m, std::size_t t) {
  const auto& tri = m.triangles[t];
  const Point& a = m.nodes[static_cast<std::size_t>(tri[0])];
  const Point& b = m.nodes[static_cast<std::size_t>(tri[1])];
  const Point& c = m.nodes[static_cast<std::size_t>(tri[2])];
  return std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
}

double min_angle_degrees(const Mesh& m) {
  double best = 180.0;
  for (const auto& tri : m.triangles) {
    for (std::size_t k = 0; k < 3; ++k) {
      const Point& o = m.nodes[static_cast<std::size_t>(tri[k])];
      const Point u = m.nodes[static_cast<std::size_t>(tri[(k + 1) % 3])] - o;
      const Point w = m.nodes[static_cast<std::size_t>(tri[(k + 2) % 3])] - o;
      best = std::min(best, std::atan2(std::abs(cross(u, w)), u.dot(w)) * 180.0 / kPi);
    }
  }
  return best;
}

double max_diameter(const Mesh& m) {
  double d = 0.0;
  for (std::size_t t = 0; t < m.triangle_count(); ++t) d = std::max(d, triangle_diameter(m, t));
  return d;
}

double min_diameter(const Mesh& m) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < m.triangle_count(); ++t) d = std::min(d, triangle_diameter(m, t));
  return d;
}

double corner_local_size(const Mesh& m, std::size_t v) {
  const BoundaryMesh bm = extract_boundary(m);
  const int local = bm.global_to_local[static_cast<std::size_t>(m.corner_node(v))];
  const std::size_t n = bm.size();
  const auto k = static_cast<std::size_t>(local);
  return std::min(bm.segments[k].length, bm.segments[(k + n - 1) % n].length);
}

double corner_element_diameter(const Mesh& m, std::size_t v) {
  const int c = m.corner_node(v);
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    if (tri[0] == c || tri[1] == c || tri[2] == c) d = std::min(d, triangle_diameter(m, t));
  }
  return d;
}

std::string validate_mesh(const Mesh& m) {
  const std::size_t n = m.node_count();
  if (m.boundary.size() != n || m.corner.size() != n || m.side.size() != n) return "per-node arrays have wrong length";
  const double scale = std::max(1.0, m.polygon.diameter());
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    for (const int v : tri)
      if (v < 0 || static_cast<std::size_t>(v) >= n) return "triangle " + std::to_string(t) + " has an invalid index";
    const double a = cross(m.nodes[static_cast<std::size_t>(tri[1])] - m.nodes[static_cast<std::size_t>(tri[0])],
                           m.nodes[static_cast<std::size_t>(tri[2])] - m.nodes[static_cast<std::size_t>(tri[0])]);
    if (!(a > 0.0)) return "triangle " + std::to_string(t) + " has nonpositive area";
  }
  std::unordered_map<std::uint64_t, std::array<int, 2>> edges;  // {count, oriented count}
  for (const auto& tri : m.triangles) {
    for (std::size_t e = 0; e < 3; ++e) {
      const int a = tri[e];
      const int b = tri[(e + 1) % 3];
      auto& c = edges[edge_key(a, b)];
      ++c[0];
      c[1] += a < b ? 1 : -1;
    }
  }
  std::vector<char> on_bdry_edge(n, 0);
  for (const auto& [key, c] : edges) {
    if (c[0] > 2) return "edge shared by more than two triangles";
    if (c[0] == 2 && c[1] != 0) return "neighboring triangles have inconsistent orientation";
    if (c[0] == 1) {
      const int a = static_cast<int>(key >> 32);
      const int b = static_cast<int>(key & 0xffffffffu);
      on_bdry_edge[static_cast<std::size_t>(a)] = 1;
      on_bdry_edge[static_cast<std::size_t>(b)] = 1;
      const Point mid = 0.5 * (m.nodes[static_cast<std::size_t>(a)] + m.nodes[static_cast<std::size_t>(b)]);
      if (m.polygon.dist_to_boundary(mid) > 1e-12 * scale) return "a boundary edge leaves the polygon boundary";
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<bool>(on_bdry_edge[i]) != static_cast<bool>(m.boundary[i])) return "boundary flags disagree with the edge structure";
    if (m.boundary[i] && m.polygon.dist_to_boundary(m.nodes[i]) > 1e-12 * scale) return "boundary node off the polygon";
  }
  // Euler characteristic of a disk.
  const auto chi = static_cast<long long>(n) - static_cast<long long>(edges.size()) +
                   static_cast<long long>(m.triangle_count());
  if (chi != 1) return "triangulation is not a topological disk";
  for (std::size_t v = 0; v < m.polygon.size(); ++v) {
    bool found = false;
    for (std::size_t i = 0; i < n && !found; ++i) found = m.corner[i] == static_cast<int>(v);
    if (!found) return "polygon vertex " + std::to_string(v) + " is not a mesh node";
  }
  const double area = total_area(m);
  if (std::abs(area - m.polygon.area()) > 1e-10 * m.polygon.area()) return "triangle areas do not sum to the polygon area";
  return {};
}

void write_mesh(std::ostream& os, const Mesh& m) {
  os.precision(17);
  os << "nodes " << m.node_count() << " triangles " << m.triangle_count() << '\n';
  for (const auto& x : m.nodes) os << x.x() << ' ' << x.y() << '\n';
  for (const auto& t : m.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void write_field(std::ostream& os, const Mesh& m, const Vector& values) {
  if (static_cast<std::size_t>(values.size()) != m.node_count()) {
    throw Error("field.size", "field length differs from the node count");
  }
  write_mesh(os, m);
  os << "field " << values.size() << '\n';
  for (Eigen::Index i = 0; i < values.size(); ++i) os << values[i] << '\n';
}

PointLocator::PointLocator(const Mesh& m) : mesh_(m) {
  lo_ = hi_ = m.nodes.front();
  for (const auto& x : m.nodes) {
    lo_ = lo_.cwiseMin(x);
    hi_ = hi_.cwiseMax(x);
  }
  const double w = std::max(hi_.x() - lo_.x(), 1e-300);
  const double hgt = std::max(hi_.y() - lo_.y(), 1e-300);
  const double cells = std::max(1.0, static_cast<double>(m.triangle_count()) / 2.0);
  const double side = std::sqrt(w * hgt / cells);
  nx_ = std::clamp(static_cast<int>(w / side), 1, 4096);
  ny_ = std::clamp(static_cast<int>(hgt / side), 1, 4096);
  buckets_.assign(static_cast<std::size_t>(nx_ * ny_), {});
  const auto cell = [&](double v, double lo, double ext, int count) {
    return std::clamp(static_cast<int>((v - lo) / ext * count), 0, count - 1);
  };
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    Point a = m.nodes[static_cast<std::size_t>(m.triangles[t][0])];
    Point b = a;
    for (const int v : m.triangles[t]) {
      a = a.cwiseMin(m.nodes[static_cast<std::size_t>(v)]);
      b = b.cwiseMax(m.nodes[static_cast<std::size_t>(v)]);
    }
    const int i0 = cell(a.x(), lo_.x(), w, nx_), i1 = cell(b.x(), lo_.x(), w, nx_);
    const int j0 = cell(a.y(), lo_.y(), hgt, ny_), j1 = cell(b.y(), lo_.y(), hgt, ny_);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(static_cast<int>(t));
  }
}

namespace {

std::array<double, 3> barycentric(const Mesh& m, std::size_t t, const Point& x) {
  const auto& tri = m.triangles[t];
  const Point& a = m.nodes[static_cast<std::size_t>(tri[0])];
  const Point& b = m.nodes[static_cast<std::size_t>(tri[1])];
  const Point& c = m.nodes[static_cast<std::size_t>(tri[2])];
  const double area = cross(b - a, c - a);
  const double l1 = cross(x - a, c - a) / area;
  const double l2 = cross(b - a, x - a) / area;
  return {1.0 - l1 - l2, l1, l2};
}

}  // namespace

std::optional<std::pair<int, std::array<double, 3>>> PointLocator::locate(const Point& x) const {
  const double w = std::max(hi_.x() - lo_.x(), 1e-300);
  const double hgt = std::max(hi_.y() - lo_.y(), 1e-300);
  const int i = static_cast<int>((x.x() - lo_.x()) / w * nx_);
  const int j = static_cast<int>((x.y() - lo_.y()) / hgt * ny_);
  if (i < -1 || j < -1 || i > nx_ || j > ny_) return std::nullopt;
  const int ci = std::clamp(i, 0, nx_ - 1);
  const int cj = std::clamp(j, 0, ny_ - 1);
  constexpr double tol = -1e-12;
  for (const int t : buckets_[static_cast<std::size_t>(cj * nx_ + ci)]) {
    const auto l = barycentric(mesh_, static_cast<std::size_t>(t), x);
    if (l[0] >= tol && l[1] >= tol && l[2] >= tol) return std::make_pair(t, l);
  }
  return std::nullopt;
}

double PointLocator::evaluate(const Vector& values, const Point& x) const {
  std::pair<int, std::array<double, 3>> hit;
  if (auto loc = locate(x)) {
    hit = *loc;
  } else {
    // Outside by rounding: take the triangle that is least violated.
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh_.triangle_count(); ++t) {
      const auto l = barycentric(mesh_, t, x);
      const double worst = std::min({l[0], l[1], l[2]});
      if (worst > best) {
        best = worst;
        hit = {static_cast<int>(t), l};
      }
    }
    double sum = 0.0;
    for (auto& v : hit.second) sum += (v = std::max(v, 0.0));
    for (auto& v : hit.second) v /= sum;
  }
  const auto& tri = mesh_.triangles[static_cast<std::size_t>(hit.first)];
  return hit.second[0] * values[tri[0]] + hit.second[1] * values[tri[1]] + hit.second[2] * values[tri[2]];
}

Vector transfer_field(const Mesh& from, const Vector& values, const Mesh& to) {
  const PointLocator loc(from);
  Vector out(static_cast<Eigen::Index>(to.node_count()));
  for (std::size_t i = 0; i < to.node_count(); ++i) out[static_cast<Eigen::Index>(i)] = loc.evaluate(values, to.nodes[i]);
  return out;
}

}  // namespace venttsel
