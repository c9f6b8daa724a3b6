#include "venttsel/assembly.hpp"

#include "venttsel/quadrature.hpp"

#include <cmath>
#include <sstream>

namespace venttsel {

namespace {

std::string where(const Point& x) {
  std::ostringstream os;
  os.precision(12);
  os << '(' << x.x() << ", " << x.y() << ')';
  return os.str();
}

double checked_eval(const ScalarField& fn, const Point& x, const char* rule, const char* name) {
  double v;
  try {
    v = fn(x);
  } catch (const std::exception& e) {
    throw Error(rule, std::string(name) + " evaluation failed at " + where(x) + ": " + e.what());
  }
  if (!std::isfinite(v)) throw Error(rule, std::string(name) + " is not finite at " + where(x));
  return v;
}

constexpr const char* kCoercivityMessage = "coefficient b must satisfy b >= 0 and b not identically 0";

}  // namespace

double BoundaryCoefficient::at(int side, const Point& x) const {
  if (callable) return callable(x);
  if (per_side.size() == 1) return per_side.front();
  return per_side.at(static_cast<std::size_t>(side));
}

void BoundaryCoefficient::validate(const Polygon& p) const {
  if (callable) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (int k = 0; k <= 64; ++k) {
        const Point x = p.vertex(i) + (k / 64.0) * (p.vertex(i + 1) - p.vertex(i));
        const double v = checked_eval(callable, x, "coefficient.b_evaluation", "b");
        if (v < 0.0) throw Error("coercivity.b", std::string(kCoercivityMessage) + "; b < 0 at " + where(x));
      }
    }
    return;
  }
  if (per_side.size() != 1 && per_side.size() != p.size()) {
    throw Error("coefficient.b_sides", "b needs one value or one value per polygon side");
  }
  for (const double v : per_side) {
    if (!std::isfinite(v)) throw Error("coefficient.b_finite", "b must be finite");
    if (v < 0.0) throw Error("coercivity.b", std::string(kCoercivityMessage) + "; a side has b < 0");
  }
}

bool BoundaryCoefficient::nonzero(const Polygon& p) const {
  if (callable) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (int k = 1; k < 64; ++k) {
        if (callable(p.vertex(i) + (k / 64.0) * (p.vertex(i + 1) - p.vertex(i))) > 0.0) return true;
      }
    }
    return false;
  }
  for (const double v : per_side)
    if (v > 0.0) return true;
  return false;
}

void ProblemSpec::validate(const Polygon& p, bool weighted) const {
  if (!(s > 0.0 && s < 1.0)) throw Error("s.range", "fractional order s must lie in (0, 1)");
  b.validate(p);
  if (!b.nonzero(p)) throw Error("coercivity.b", kCoercivityMessage);
  if (weighted) {
    const WeightWindow w = sigma_window(p);
    if (w.empty()) throw Error("sigma.window", "the weight window max(1 - pi/alpha, -1/2) < sigma < 1/2 is empty");
    if (!w.contains(sigma)) {
      std::ostringstream os;
      os << "sigma = " << sigma << " violates 1 - pi/alpha < sigma < 1/2 with sigma >= -1/2; admissible window "
         << (w.lower_closed ? '[' : '(') << w.lower << ", " << w.upper << ')';
      throw Error("sigma.window", os.str());
    }
  }
}

Eigen::Matrix3d local_stiffness(const Point& a, const Point& b, const Point& c) {
  const double area = quad::triangle_area(a, b, c);
  if (!(area > 0.0)) throw Error("mesh.degenerate_triangle", "triangle with nonpositive area at " + where(a));
  // Gradients of the barycentric coordinates are the rotated opposite edges.
  Eigen::Matrix<double, 2, 3> g;
  const Point e0 = c - b, e1 = a - c, e2 = b - a;
  g.col(0) = Point(-e0.y(), e0.x());
  g.col(1) = Point(-e1.y(), e1.x());
  g.col(2) = Point(-e2.y(), e2.x());
  return g.transpose() * g / (4.0 * area);
}

SparseMatrix bulk_stiffness(const Mesh& m) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * m.triangle_count());
  for (const auto& t : m.triangles) {
    const Eigen::Matrix3d k = local_stiffness(m.nodes[static_cast<std::size_t>(t[0])], m.nodes[static_cast<std::size_t>(t[1])],
                                              m.nodes[static_cast<std::size_t>(t[2])]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(j)], k(i, j));
  }
  const auto n = static_cast<Eigen::Index>(m.node_count());
  SparseMatrix a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

SparseMatrix bulk_mass(const Mesh& m) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * m.triangle_count());
  for (const auto& t : m.triangles) {
    const double area = quad::triangle_area(m.nodes[static_cast<std::size_t>(t[0])], m.nodes[static_cast<std::size_t>(t[1])],
                                            m.nodes[static_cast<std::size_t>(t[2])]);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) trip.emplace_back(t[i], t[j], area * (i == j ? 2.0 : 1.0) / 12.0);
  }
  const auto n = static_cast<Eigen::Index>(m.node_count());
  SparseMatrix a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

SparseMatrix boundary_stiffness(const BoundaryMesh& bm) {
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& seg : bm.segments) {
    if (!(seg.length > 0.0)) throw Error("boundary.zero_length", "boundary segment has zero length");
    const double k = 1.0 / seg.length;
    const int i = seg.local[0], j = seg.local[1];
    trip.emplace_back(i, i, k);
    trip.emplace_back(j, j, k);
    trip.emplace_back(i, j, -k);
    trip.emplace_back(j, i, -k);
  }
  const auto n = static_cast<Eigen::Index>(bm.size());
  SparseMatrix a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

SparseMatrix boundary_mass(const BoundaryMesh& bm, const BoundaryCoefficient& b) {
  std::vector<Eigen::Triplet<double>> trip;
  const quad::Rule1D& g = quad::gauss_legendre(b.is_piecewise_constant() ? 2 : 8);
  for (const auto& seg : bm.segments) {
    const Point& p0 = bm.points[static_cast<std::size_t>(seg.local[0])];
    const Point& p1 = bm.points[static_cast<std::size_t>(seg.local[1])];
    Eigen::Matrix2d local = Eigen::Matrix2d::Zero();
    for (std::size_t q = 0; q < g.size(); ++q) {
      const double xi = g.points[q];
      const double bv = b.at(seg.side, p0 + xi * (p1 - p0));
      const Eigen::Vector2d phi(1.0 - xi, xi);
      local += (g.weights[q] * seg.length * bv) * phi * phi.transpose();
    }
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        trip.emplace_back(seg.local[static_cast<std::size_t>(i)], seg.local[static_cast<std::size_t>(j)], local(i, j));
  }
  const auto n = static_cast<Eigen::Index>(bm.size());
  SparseMatrix a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

Vector load_vector(const Mesh& m, const BoundaryMesh& bm, const ScalarField& f, const BoundarySource& g) {
  Vector load = Vector::Zero(static_cast<Eigen::Index>(m.node_count()));
  if (f) {
    const quad::RuleTriangle& rule = quad::triangle_degree2();
    for (const auto& t : m.triangles) {
      const Point& a = m.nodes[static_cast<std::size_t>(t[0])];
      const Point& b = m.nodes[static_cast<std::size_t>(t[1])];
      const Point& c = m.nodes[static_cast<std::size_t>(t[2])];
      const double area2 = 2.0 * quad::triangle_area(a, b, c);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Point& r = rule.points[q];
        const double fv = checked_eval(f, quad::map_triangle(r, a, b, c), "data.f_evaluation", "f");
        const double w = rule.weights[q] * area2 * fv;
        load[t[0]] += w * (1.0 - r.x() - r.y());
        load[t[1]] += w * r.x();
        load[t[2]] += w * r.y();
      }
    }
  }

  Vector bload = Vector::Zero(static_cast<Eigen::Index>(bm.size()));
  switch (g.kind) {
    case BoundarySource::Kind::zero:
      break;
    case BoundarySource::Kind::callable:
    case BoundarySource::Kind::node_table: {
      const quad::Rule1D& rule = quad::gauss_legendre(g.order);
      if (g.kind == BoundarySource::Kind::node_table && g.table.size() != rule.size() * bm.segments.size()) {
        throw Error("data.g_table", "boundary node table does not match the boundary mesh");
      }
      for (std::size_t k = 0; k < bm.segments.size(); ++k) {
        const auto& seg = bm.segments[k];
        const Point& p0 = bm.points[static_cast<std::size_t>(seg.local[0])];
        const Point& p1 = bm.points[static_cast<std::size_t>(seg.local[1])];
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const double xi = rule.points[q];
          const double gv = g.kind == BoundarySource::Kind::callable
                                ? checked_eval(g.fn, p0 + xi * (p1 - p0), "data.g_evaluation", "g")
                                : g.table[k * rule.size() + q];
          const double w = rule.weights[q] * seg.length * gv;
          bload[seg.local[0]] += w * (1.0 - xi);
          bload[seg.local[1]] += w * xi;
        }
      }
      break;
    }
    case BoundarySource::Kind::load_table:
      if (g.table.size() != bm.size()) throw Error("data.g_table", "boundary load table does not match the boundary mesh");
      for (std::size_t k = 0; k < bm.size(); ++k) bload[static_cast<Eigen::Index>(k)] = g.table[k];
      break;
  }
  if (!g.corner_loads.empty()) {
    for (std::size_t k = 0; k < bm.size(); ++k) {
      const int c = bm.corner[k];
      if (c >= 0 && static_cast<std::size_t>(c) < g.corner_loads.size()) {
        bload[static_cast<Eigen::Index>(k)] += g.corner_loads[static_cast<std::size_t>(c)];
      }
    }
  }
  for (std::size_t k = 0; k < bm.size(); ++k) load[bm.nodes[k]] += bload[static_cast<Eigen::Index>(k)];
  return load;
}

Vector DiscreteSystem::restrict_to_boundary(const Vector& u) const {
  Vector ub(static_cast<Eigen::Index>(bdry_nodes.size()));
  for (std::size_t k = 0; k < bdry_nodes.size(); ++k) ub[static_cast<Eigen::Index>(k)] = u[bdry_nodes[k]];
  return ub;
}

Vector DiscreteSystem::embed_boundary(const Vector& ub) const {
  Vector u = Vector::Zero(static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k < bdry_nodes.size(); ++k) u[bdry_nodes[k]] = ub[static_cast<Eigen::Index>(k)];
  return u;
}

Vector DiscreteSystem::apply(const Vector& u) const {
  Vector y = bulk * u;
  const Vector ub = restrict_to_boundary(u);
  const Vector yb = bdry_stiffness * ub + bdry_mass * ub + theta * ub;
  for (std::size_t k = 0; k < bdry_nodes.size(); ++k) y[bdry_nodes[k]] += yb[static_cast<Eigen::Index>(k)];
  return y;
}

Vector DiscreteSystem::diagonal() const {
  Vector d = bulk.diagonal();
  const Vector db = bdry_stiffness.diagonal() + bdry_mass.diagonal() + theta.diagonal();
  for (std::size_t k = 0; k < bdry_nodes.size(); ++k) d[bdry_nodes[k]] += db[static_cast<Eigen::Index>(k)];
  return d;
}

DenseMatrix DiscreteSystem::dense() const {
  DenseMatrix a = DenseMatrix(bulk);
  const DenseMatrix ab = DenseMatrix(bdry_stiffness) + DenseMatrix(bdry_mass) + theta;
  for (std::size_t i = 0; i < bdry_nodes.size(); ++i)
    for (std::size_t j = 0; j < bdry_nodes.size(); ++j)
      a(bdry_nodes[i], bdry_nodes[j]) += ab(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return a;
}

DiscreteSystem assemble_system(const Mesh& m, const BoundaryMesh& bm, const ProblemSpec& spec,
                               const ThetaPolicy& policy) {
  if (!(spec.s > 0.0 && spec.s < 1.0)) throw Error("s.range", "fractional order s must lie in (0, 1)");
  spec.b.validate(m.polygon);
  DiscreteSystem sys;
  sys.bulk = bulk_stiffness(m);
  sys.bdry_stiffness = boundary_stiffness(bm);
  sys.bdry_mass = boundary_mass(bm, spec.b);
  sys.theta = nonlocal_matrix(bm, spec.s, policy);
  sys.load = load_vector(m, bm, spec.f, spec.g);
  sys.bdry_nodes = bm.nodes;
  sys.global_to_local = bm.global_to_local;
  sys.coercive = spec.b.nonzero(m.polygon);
  return sys;
}

}  // namespace venttsel
