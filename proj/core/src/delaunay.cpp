#include "delaunay.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <unordered_set>

namespace venttsel::detail {

namespace {

using Real = long double;

Real orient2d(const Point& a, const Point& b, const Point& c) {
  return (Real(b.x()) - Real(a.x())) * (Real(c.y()) - Real(a.y())) -
         (Real(b.y()) - Real(a.y())) * (Real(c.x()) - Real(a.x()));
}

// Positive when d lies strictly inside the circle through counterclockwise a, b, c.
Real incircle(const Point& a, const Point& b, const Point& c, const Point& d) {
  const Real adx = Real(a.x()) - d.x(), ady = Real(a.y()) - d.y();
  const Real bdx = Real(b.x()) - d.x(), bdy = Real(b.y()) - d.y();
  const Real cdx = Real(c.x()) - d.x(), cdy = Real(c.y()) - d.y();
  const Real alift = adx * adx + ady * ady;
  const Real blift = bdx * bdx + bdy * bdy;
  const Real clift = cdx * cdx + cdy * cdy;
  return alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) +
         clift * (adx * bdy - bdx * ady);
}

Point circumcenter(const Point& a, const Point& b, const Point& c) {
  const Point ba = b - a;
  const Point ca = c - a;
  const double d = 2.0 * cross(ba, ca);
  const double b2 = ba.squaredNorm();
  const double c2 = ca.squaredNorm();
  return a + Point((ca.y() * b2 - ba.y() * c2) / d, (ba.x() * c2 - ca.x() * b2) / d);
}

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

class Refiner {
 public:
  Refiner(const Polygon& polygon, const std::function<double(const Point&)>& size,
          const RefineOptions& options)
      : polygon_(polygon), size_(size), options_(options) {}

  RawMesh run(const std::vector<LayoutPoint>& layout);

 private:
  struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> nb{-1, -1, -1};  // neighbor across the edge opposite v[i]
    bool alive = true;
  };
  struct Located {
    int tri = -1;
    int blocked_edge = -1;  // >= 0 when the walk hit a boundary edge
  };
  struct CavityEdge {
    int u, w, outside;
  };

  int add_point(const Point& x, int side, int corner, bool on_boundary);
  int new_tri(int a, int b, int c);
  Located locate(const Point& p, int start) const;
  void collect_cavity(const Point& p, int seed, std::optional<std::uint64_t> split_edge,
                      std::vector<int>& cavity, std::vector<CavityEdge>& rim);
  bool insert(int pidx, int seed, std::optional<std::pair<int, int>> split_edge);
  void split_segment(int u, int w);
  bool is_bad(int t) const;
  void examine_new_triangles();
  bool encroaches(const Point& x, int u, int w) const;
  int any_alive() const;

  const Polygon& polygon_;
  const std::function<double(const Point&)>& size_;
  RefineOptions options_;

  std::vector<Point> pts_;
  std::vector<int> side_, corner_;
  std::vector<char> bnd_;
  std::vector<Tri> tris_;
  std::vector<int> free_;
  std::vector<unsigned> mark_;
  unsigned stamp_ = 0;
  bool constrained_ = false;
  int hint_ = 0;
  double scale_ = 1.0;

  std::unordered_map<std::uint64_t, int> bedge_;     // boundary edge -> triangle
  std::unordered_map<std::uint64_t, int> seg_side_;  // boundary edge -> polygon side
  std::deque<std::pair<int, std::array<int, 3>>> bad_;
  std::deque<std::pair<int, int>> encroached_;
  std::vector<int> created_;
};

int Refiner::add_point(const Point& x, int side, int corner, bool on_boundary) {
  pts_.push_back(x);
  side_.push_back(side);
  corner_.push_back(corner);
  bnd_.push_back(on_boundary ? 1 : 0);
  return static_cast<int>(pts_.size()) - 1;
}

int Refiner::new_tri(int a, int b, int c) {
  int id;
  if (!free_.empty()) {
    id = free_.back();
    free_.pop_back();
  } else {
    id = static_cast<int>(tris_.size());
    tris_.emplace_back();
    mark_.push_back(0);
  }
  Tri& t = tris_[static_cast<std::size_t>(id)];
  t.v = {a, b, c};
  t.nb = {-1, -1, -1};
  t.alive = true;
  return id;
}

int Refiner::any_alive() const {
  for (std::size_t i = 0; i < tris_.size(); ++i)
    if (tris_[i].alive) return static_cast<int>(i);
  return -1;
}

Refiner::Located Refiner::locate(const Point& p, int start) const {
  int t = (start >= 0 && tris_[static_cast<std::size_t>(start)].alive) ? start : any_alive();
  const std::size_t limit = 4 * tris_.size() + 100;
  for (std::size_t step = 0; step < limit; ++step) {
    const Tri& tri = tris_[static_cast<std::size_t>(t)];
    bool inside = true;
    for (int k = 0; k < 3; ++k) {
      const int i = static_cast<int>((static_cast<std::size_t>(k) + step) % 3);
      const int u = tri.v[static_cast<std::size_t>((i + 1) % 3)];
      const int w = tri.v[static_cast<std::size_t>((i + 2) % 3)];
      if (orient2d(pts_[static_cast<std::size_t>(u)], pts_[static_cast<std::size_t>(w)], p) < 0) {
        inside = false;
        const int n = tri.nb[static_cast<std::size_t>(i)];
        if (n < 0) return {t, i};
        t = n;
        break;
      }
    }
    if (inside) return {t, -1};
  }
  throw Error("mesh.locate", "point location did not terminate");
}

void Refiner::collect_cavity(const Point& p, int seed, std::optional<std::uint64_t> split_edge,
                             std::vector<int>& cavity, std::vector<CavityEdge>& rim) {
  ++stamp_;
  cavity.clear();
  rim.clear();
  std::vector<int> stack{seed};
  mark_[static_cast<std::size_t>(seed)] = stamp_;
  while (!stack.empty()) {
    const int t = stack.back();
    stack.pop_back();
    cavity.push_back(t);
    const Tri& tri = tris_[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < 3; ++i) {
      const int n = tri.nb[i];
      if (n < 0 || mark_[static_cast<std::size_t>(n)] == stamp_) continue;
      const Tri& nt = tris_[static_cast<std::size_t>(n)];
      if (incircle(pts_[static_cast<std::size_t>(nt.v[0])], pts_[static_cast<std::size_t>(nt.v[1])],
                   pts_[static_cast<std::size_t>(nt.v[2])], p) > 0) {
        mark_[static_cast<std::size_t>(n)] = stamp_;
        stack.push_back(n);
      }
    }
  }
  for (const int t : cavity) {
    const Tri& tri = tris_[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < 3; ++i) {
      const int n = tri.nb[i];
      if (n >= 0 && mark_[static_cast<std::size_t>(n)] == stamp_) continue;
      const int u = tri.v[(i + 1) % 3];
      const int w = tri.v[(i + 2) % 3];
      if (split_edge && edge_key(u, w) == *split_edge) continue;
      rim.push_back({u, w, n});
    }
  }
}

bool Refiner::insert(int pidx, int seed, std::optional<std::pair<int, int>> split_edge) {
  const Point p = pts_[static_cast<std::size_t>(pidx)];
  std::optional<std::uint64_t> split_key;
  if (split_edge) split_key = edge_key(split_edge->first, split_edge->second);

  std::vector<int> cavity;
  std::vector<CavityEdge> rim;
  collect_cavity(p, seed, split_key, cavity, rim);
  for (const auto& e : rim) {
    if (orient2d(pts_[static_cast<std::size_t>(e.u)], pts_[static_cast<std::size_t>(e.w)], p) <= 0) {
      return false;
    }
  }

  for (const int t : cavity) {
    tris_[static_cast<std::size_t>(t)].alive = false;
    free_.push_back(t);
  }
  if (split_key) bedge_.erase(*split_key);

  created_.clear();
  for (const auto& e : rim) {
    const int k = new_tri(e.u, e.w, pidx);
    Tri& nt = tris_[static_cast<std::size_t>(k)];
    nt.nb[2] = e.outside;
    if (e.outside >= 0) {
      Tri& o = tris_[static_cast<std::size_t>(e.outside)];
      for (std::size_t i = 0; i < 3; ++i) {
        const int a = o.v[(i + 1) % 3];
        const int b = o.v[(i + 2) % 3];
        if (a == e.w && b == e.u) o.nb[i] = k;
      }
    } else if (constrained_) {
      bedge_[edge_key(e.u, e.w)] = k;
    }
    created_.push_back(k);
  }
  // Stitch the fan around p: triangle (u, w, p) meets the one starting at w
  // across (w, p) and the one ending at u across (p, u).
  for (const int k : created_) {
    Tri& nt = tris_[static_cast<std::size_t>(k)];
    const int u = nt.v[0];
    const int w = nt.v[1];
    for (const int j : created_) {
      if (j == k) continue;
      const Tri& other = tris_[static_cast<std::size_t>(j)];
      if (other.v[0] == w) nt.nb[0] = j;
      if (other.v[1] == u) nt.nb[1] = j;
    }
    if (constrained_) {
      if (nt.nb[0] < 0) bedge_[edge_key(w, pidx)] = k;
      if (nt.nb[1] < 0) bedge_[edge_key(pidx, u)] = k;
    }
  }
  hint_ = created_.front();
  return true;
}

bool Refiner::encroaches(const Point& x, int u, int w) const {
  const Point a = pts_[static_cast<std::size_t>(u)] - x;
  const Point b = pts_[static_cast<std::size_t>(w)] - x;
  return a.dot(b) < -1e-12 * (pts_[static_cast<std::size_t>(u)] - pts_[static_cast<std::size_t>(w)]).squaredNorm();
}

void Refiner::split_segment(int u, int w) {
  const auto key = edge_key(u, w);
  const auto it = bedge_.find(key);
  if (it == bedge_.end()) return;
  const int seed = it->second;
  const int side = seg_side_.at(key);
  const Point m = 0.5 * (pts_[static_cast<std::size_t>(u)] + pts_[static_cast<std::size_t>(w)]);
  const int pidx = add_point(m, side, -1, true);
  if (!insert(pidx, seed, std::make_pair(u, w))) {
    throw Error("mesh.refinement_failed", "boundary segment split produced an invalid cavity");
  }
  seg_side_.erase(key);
  seg_side_[edge_key(u, pidx)] = side;
  seg_side_[edge_key(pidx, w)] = side;
  examine_new_triangles();
}

bool Refiner::is_bad(int t) const {
  const Tri& tri = tris_[static_cast<std::size_t>(t)];
  const Point& a = pts_[static_cast<std::size_t>(tri.v[0])];
  const Point& b = pts_[static_cast<std::size_t>(tri.v[1])];
  const Point& c = pts_[static_cast<std::size_t>(tri.v[2])];
  const std::array<double, 3> len{(c - b).norm(), (a - c).norm(), (b - a).norm()};
  const double area2 = cross(b - a, c - a);
  const double radius = len[0] * len[1] * len[2] / (2.0 * area2);
  const auto shortest = static_cast<std::size_t>(std::min_element(len.begin(), len.end()) - len.begin());
  const Point centroid = (a + b + c) / 3.0;
  if (radius > options_.size_factor * size_(centroid)) return true;
  if (radius / len[shortest] > options_.max_radius_edge_ratio) {
    // Skinny triangles forced by a sharp input corner cannot be repaired.
    const int apex = corner_[static_cast<std::size_t>(tri.v[shortest])];
    if (apex >= 0 && polygon_.angles()[static_cast<std::size_t>(apex)] < kPi / 3.0) return false;
    return true;
  }
  return false;
}

void Refiner::examine_new_triangles() {
  for (const int k : created_) {
    const Tri& t = tris_[static_cast<std::size_t>(k)];
    if (!t.alive) continue;
    if (constrained_) {
      if (is_bad(k)) bad_.emplace_back(k, t.v);
      for (std::size_t i = 0; i < 3; ++i) {
        if (t.nb[i] >= 0) continue;
        const int u = t.v[(i + 1) % 3];
        const int w = t.v[(i + 2) % 3];
        if (encroaches(pts_[static_cast<std::size_t>(t.v[i])], u, w)) encroached_.emplace_back(u, w);
      }
    }
  }
}

RawMesh Refiner::run(const std::vector<LayoutPoint>& layout) {
  scale_ = std::max(polygon_.diameter(), 1e-300);
  Point center = Point::Zero();
  for (const auto& v : polygon_.vertices()) center += v;
  center /= static_cast<double>(polygon_.size());
  const double big = 100.0 * scale_;
  for (int k = 0; k < 3; ++k) {
    const double th = kPi / 2.0 + 2.0 * kPi * k / 3.0;
    add_point(center + big * Point(std::cos(th), std::sin(th)), -1, -1, false);
  }
  new_tri(0, 1, 2);

  const double dup_tol = 1e-13 * scale_;
  auto insert_free_point = [&](int pidx) {
    const Point& p = pts_[static_cast<std::size_t>(pidx)];
    const Located loc = locate(p, hint_);
    if (loc.blocked_edge >= 0) throw Error("mesh.locate", "boundary point outside the super triangle");
    for (const int v : tris_[static_cast<std::size_t>(loc.tri)].v) {
      if ((pts_[static_cast<std::size_t>(v)] - p).norm() <= dup_tol) {
        throw Error("mesh.duplicate_point", "boundary layout contains coincident points");
      }
    }
    if (!insert(pidx, loc.tri, std::nullopt)) throw Error("mesh.refinement_failed", "degenerate insertion");
  };

  struct Seg {
    int a, b, side;
  };
  std::vector<Seg> segs;
  const int first = static_cast<int>(pts_.size());
  for (const auto& lp : layout) {
    const int id = add_point(lp.x, lp.side, lp.corner, true);
    insert_free_point(id);
  }
  const int n_layout = static_cast<int>(layout.size());
  for (int k = 0; k < n_layout; ++k) {
    segs.push_back({first + k, first + (k + 1) % n_layout, layout[static_cast<std::size_t>(k)].side});
  }

  // Conforming phase: split segments until each is a Delaunay edge.
  for (int round = 0;; ++round) {
    if (round > 64) throw Error("mesh.refinement_failed", "boundary recovery did not converge");
    std::unordered_set<std::uint64_t> edges;
    for (const auto& t : tris_) {
      if (!t.alive) continue;
      for (std::size_t i = 0; i < 3; ++i) edges.insert(edge_key(t.v[(i + 1) % 3], t.v[(i + 2) % 3]));
    }
    std::vector<Seg> next;
    bool missing = false;
    for (const auto& s : segs) {
      if (edges.count(edge_key(s.a, s.b))) {
        next.push_back(s);
        continue;
      }
      missing = true;
      const Point m = 0.5 * (pts_[static_cast<std::size_t>(s.a)] + pts_[static_cast<std::size_t>(s.b)]);
      const int id = add_point(m, s.side, -1, true);
      insert_free_point(id);
      next.push_back({s.a, id, s.side});
      next.push_back({id, s.b, s.side});
    }
    segs = std::move(next);
    if (!missing) break;
  }

  // Drop everything outside the polygon; boundary edges become walls.
  std::vector<char> interior(tris_.size(), 0);
  for (std::size_t i = 0; i < tris_.size(); ++i) {
    const Tri& t = tris_[i];
    if (!t.alive) continue;
    if (t.v[0] < 3 || t.v[1] < 3 || t.v[2] < 3) continue;
    const Point c = (pts_[static_cast<std::size_t>(t.v[0])] + pts_[static_cast<std::size_t>(t.v[1])] +
                     pts_[static_cast<std::size_t>(t.v[2])]) /
                    3.0;
    interior[i] = polygon_.contains(c, 0.0) ? 1 : 0;
  }
  for (const auto& s : segs) seg_side_[edge_key(s.a, s.b)] = s.side;
  constrained_ = true;
  for (std::size_t i = 0; i < tris_.size(); ++i) {
    Tri& t = tris_[i];
    if (!t.alive) continue;
    if (!interior[i]) {
      t.alive = false;
      free_.push_back(static_cast<int>(i));
      continue;
    }
    for (std::size_t k = 0; k < 3; ++k) {
      const int n = t.nb[k];
      if (n >= 0 && interior[static_cast<std::size_t>(n)]) continue;
      t.nb[k] = -1;
      const auto key = edge_key(t.v[(k + 1) % 3], t.v[(k + 2) % 3]);
      if (!seg_side_.count(key)) throw Error("mesh.refinement_failed", "interior region leaks across the boundary");
      bedge_[key] = static_cast<int>(i);
    }
  }
  if (bedge_.size() != segs.size()) throw Error("mesh.refinement_failed", "boundary segments not recovered");
  hint_ = any_alive();

  for (std::size_t i = 0; i < tris_.size(); ++i) {
    if (!tris_[i].alive) continue;
    created_.push_back(static_cast<int>(i));
  }
  examine_new_triangles();

  std::size_t failures = 0;
  while (true) {
    if (pts_.size() > options_.max_points) {
      throw Error("mesh.refinement_failed", "mesh refinement exceeded the point budget");
    }
    if (!encroached_.empty()) {
      const auto [u, w] = encroached_.front();
      encroached_.pop_front();
      split_segment(u, w);
      continue;
    }
    if (bad_.empty()) break;
    const auto [t, verts] = bad_.front();
    bad_.pop_front();
    const Tri& tri = tris_[static_cast<std::size_t>(t)];
    if (!tri.alive || tri.v != verts || !is_bad(t)) continue;

    const Point c = circumcenter(pts_[static_cast<std::size_t>(verts[0])], pts_[static_cast<std::size_t>(verts[1])],
                                 pts_[static_cast<std::size_t>(verts[2])]);
    const Located loc = locate(c, t);
    if (loc.blocked_edge >= 0) {
      const Tri& bt = tris_[static_cast<std::size_t>(loc.tri)];
      const int u = bt.v[static_cast<std::size_t>((loc.blocked_edge + 1) % 3)];
      const int w = bt.v[static_cast<std::size_t>((loc.blocked_edge + 2) % 3)];
      encroached_.emplace_back(u, w);
      bad_.emplace_back(t, verts);
      continue;
    }
    bool near_vertex = false;
    for (const int v : tris_[static_cast<std::size_t>(loc.tri)].v) {
      if ((pts_[static_cast<std::size_t>(v)] - c).norm() <= dup_tol) near_vertex = true;
    }
    if (near_vertex) {
      ++failures;
      continue;
    }
    std::vector<int> cavity;
    std::vector<CavityEdge> rim;
    collect_cavity(c, loc.tri, std::nullopt, cavity, rim);
    bool encroached = false;
    for (const auto& e : rim) {
      if (e.outside < 0 && encroaches(c, e.u, e.w)) {
        encroached_.emplace_back(e.u, e.w);
        encroached = true;
      }
    }
    if (encroached) {
      bad_.emplace_back(t, verts);
      continue;
    }
    const int pidx = add_point(c, -1, -1, false);
    if (!insert(pidx, loc.tri, std::nullopt)) {
      pts_.pop_back();
      side_.pop_back();
      corner_.pop_back();
      bnd_.pop_back();
      ++failures;
      continue;
    }
    examine_new_triangles();
  }
  if (failures > 0) spdlog::debug("delaunay refinement skipped {} insertions", failures);

  RawMesh out;
  std::vector<int> remap(pts_.size(), -1);
  for (const auto& t : tris_) {
    if (!t.alive) continue;
    for (const int v : t.v) {
      if (remap[static_cast<std::size_t>(v)] < 0) remap[static_cast<std::size_t>(v)] = 0;
    }
  }
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    if (remap[i] < 0) continue;
    remap[i] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(pts_[i]);
    out.side.push_back(side_[i]);
    out.corner.push_back(corner_[i]);
    out.boundary.push_back(bnd_[i]);
  }
  for (const auto& t : tris_) {
    if (!t.alive) continue;
    out.triangles.push_back({remap[static_cast<std::size_t>(t.v[0])], remap[static_cast<std::size_t>(t.v[1])],
                             remap[static_cast<std::size_t>(t.v[2])]});
  }
  return out;
}

}  // namespace

RawMesh delaunay_refine(const Polygon& polygon, const std::vector<LayoutPoint>& layout,
                        const std::function<double(const Point&)>& size, const RefineOptions& options) {
  Refiner r(polygon, size, options);
  return r.run(layout);
}

}  // namespace venttsel::detail
