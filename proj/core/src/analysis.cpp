#include "venttsel/analysis.hpp"

#include "venttsel/quadrature.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace venttsel {

namespace {

double quadratic(const SparseMatrix& a, const Vector& u) { return std::max(0.0, u.dot(a * u)); }

void check_size(const FemSpace& space, const Vector& u) {
  if (static_cast<std::size_t>(u.size()) != space.size()) throw Error("field.size", "field length differs from the node count");
}

bool is_corner(const Polygon& p, const Point& x) { return dist_to_vertices(p, x) <= 1e-12 * std::max(1.0, p.diameter()); }

// Innermost corner cell: collapsed rule with apex at the corner and the
// radial variable stretched as (1 - u) = tau^3 to absorb r^{2 sigma}.
template <class F>
double corner_cell(const Point& apex, const Point& b, const Point& c, const F& integrand) {
  const quad::Rule1D& g = quad::gauss_legendre(10);
  const double area2 = 2.0 * std::abs(quad::triangle_area(apex, b, c));
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double tau = g.points[i];
    const double one_minus_u = tau * tau * tau;
    const double du = 3.0 * tau * tau;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double v = g.points[j];
      // Reference point (u, v (1-u)) collapses onto (1, 0) as u -> 1; map that vertex to the apex.
      const Point ref(1.0 - one_minus_u, v * one_minus_u);
      const Point x = quad::map_triangle(ref, b, apex, c);
      sum += g.weights[i] * g.weights[j] * du * one_minus_u * integrand(x);
    }
  }
  return sum * area2;
}

template <class F>
double plain_cell(const Point& a, const Point& b, const Point& c, const F& integrand, int order) {
  const quad::RuleTriangle& rule = quad::triangle_collapsed(order);
  const double area2 = 2.0 * std::abs(quad::triangle_area(a, b, c));
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) sum += rule.weights[q] * integrand(quad::map_triangle(rule.points[q], a, b, c));
  return sum * area2;
}

// Integral over triangle (a, b, c) of integrand(x) * r(x)^{2 sigma}.
template <class F>
double weighted_triangle(const Polygon& p, const Point& a, const Point& b, const Point& c, double sigma,
                         const F& value_sq, int depth, int layers) {
  const auto weighted = [&](const Point& x) {
    const double r = dist_to_vertices(p, x);
    return std::pow(r, 2.0 * sigma) * value_sq(x);
  };
  if (sigma == 0.0) return plain_cell(a, b, c, value_sq, 4);
  const std::array<Point, 3> v{a, b, c};
  int corners = 0;
  int which = -1;
  for (int i = 0; i < 3; ++i) {
    if (is_corner(p, v[static_cast<std::size_t>(i)])) {
      ++corners;
      which = i;
    }
  }
  if (corners == 0) return plain_cell(a, b, c, weighted, 6);
  if (depth >= layers && corners == 1) {
    const auto w = static_cast<std::size_t>(which);
    return corner_cell(v[w], v[(w + 1) % 3], v[(w + 2) % 3], weighted);
  }
  const Point ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  return weighted_triangle(p, a, ab, ca, sigma, value_sq, depth + 1, layers) +
         weighted_triangle(p, ab, b, bc, sigma, value_sq, depth + 1, layers) +
         weighted_triangle(p, ca, bc, c, sigma, value_sq, depth + 1, layers) +
         weighted_triangle(p, ab, bc, ca, sigma, value_sq, depth + 1, layers);
}

template <class F>
double weighted_segment(const Polygon& p, const Point& a, const Point& b, double sigma, const F& value_sq, int depth,
                        int layers) {
  const double len = (b - a).norm();
  const auto weighted = [&](const Point& x) { return std::pow(dist_to_vertices(p, x), 2.0 * sigma) * value_sq(x); };
  const bool ca = is_corner(p, a), cb = is_corner(p, b);
  if (sigma == 0.0 || (!ca && !cb)) {
    const quad::Rule1D& g = quad::gauss_legendre(8);
    double sum = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) {
      const Point x = a + g.points[q] * (b - a);
      sum += g.weights[q] * (sigma == 0.0 ? value_sq(x) : weighted(x));
    }
    return sum * len;
  }
  if (ca && cb) {
    const Point m = 0.5 * (a + b);
    return weighted_segment(p, a, m, sigma, value_sq, depth + 1, layers) +
           weighted_segment(p, m, b, sigma, value_sq, depth + 1, layers);
  }
  const Point apex = ca ? a : b;
  const Point far = ca ? b : a;
  if (depth >= layers) {
    const quad::Rule1D& g = quad::gauss_legendre(10);
    double sum = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) {
      const double tau = g.points[q];
      const Point x = apex + tau * tau * tau * (far - apex);
      sum += g.weights[q] * 3.0 * tau * tau * weighted(x);
    }
    return sum * len;
  }
  const Point m = 0.5 * (a + b);
  return weighted_segment(p, apex, m, sigma, value_sq, depth + 1, layers) +
         weighted_segment(p, m, far, sigma, value_sq, depth + 1, layers);
}

void check_sigma(double sigma, double bound) {
  if (!(sigma > bound)) {
    throw Error("sigma.integrability", "weight exponent sigma must exceed " + std::to_string(bound) +
                                           " for r^(2 sigma) to be integrable");
  }
}

}  // namespace

double l2_bulk(const FemSpace& space, const Vector& u) {
  check_size(space, u);
  return std::sqrt(quadratic(space.mass(), u));
}

double h1_bulk_semi(const FemSpace& space, const Vector& u) {
  check_size(space, u);
  return std::sqrt(quadratic(space.stiffness(), u));
}

double l2_bdry(const FemSpace& space, const Vector& u) { return std::sqrt(quadratic(space.boundary_mass(), space.trace(u))); }

double h1_bdry_semi(const FemSpace& space, const Vector& u) {
  return std::sqrt(quadratic(space.boundary_stiffness(), space.trace(u)));
}

double v1_norm(const FemSpace& space, const Vector& u) {
  check_size(space, u);
  const Vector ub = space.trace(u);
  return std::sqrt(quadratic(space.stiffness(), u) + quadratic(space.boundary_stiffness(), ub) +
                   quadratic(space.boundary_mass(), ub));
}

double weighted_l2(const FemSpace& space, const Vector& u, double sigma, int layers) {
  check_size(space, u);
  check_sigma(sigma, -1.0);
  const Mesh& m = space.mesh();
  double total = 0.0;
  for (const auto& t : m.triangles) {
    const Point& a = m.nodes[static_cast<std::size_t>(t[0])];
    const Point& b = m.nodes[static_cast<std::size_t>(t[1])];
    const Point& c = m.nodes[static_cast<std::size_t>(t[2])];
    const double area2 = cross(b - a, c - a);
    const double ua = u[t[0]], ub = u[t[1]], uc = u[t[2]];
    const auto value_sq = [&](const Point& x) {
      const double l1 = cross(x - a, c - a) / area2;
      const double l2 = cross(b - a, x - a) / area2;
      const double v = ua + l1 * (ub - ua) + l2 * (uc - ua);
      return v * v;
    };
    total += weighted_triangle(m.polygon, a, b, c, sigma, value_sq, 0, layers);
  }
  return std::sqrt(std::max(0.0, total));
}

double weighted_l2(const Mesh& m, const ScalarField& fn, double sigma, int layers) {
  check_sigma(sigma, -1.0);
  double total = 0.0;
  const auto value_sq = [&](const Point& x) {
    const double v = fn(x);
    return v * v;
  };
  for (const auto& t : m.triangles) {
    total += weighted_triangle(m.polygon, m.nodes[static_cast<std::size_t>(t[0])], m.nodes[static_cast<std::size_t>(t[1])],
                               m.nodes[static_cast<std::size_t>(t[2])], sigma, value_sq, 0, layers);
  }
  return std::sqrt(std::max(0.0, total));
}

double weighted_l2_elementwise(const Mesh& m, const Vector& per_triangle, double sigma, int layers) {
  check_sigma(sigma, -1.0);
  if (static_cast<std::size_t>(per_triangle.size()) != m.triangle_count()) {
    throw Error("field.size", "one value per triangle expected");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < m.triangle_count(); ++k) {
    const auto& t = m.triangles[k];
    const double v = per_triangle[static_cast<Eigen::Index>(k)];
    const auto value_sq = [v](const Point&) { return v * v; };
    total += weighted_triangle(m.polygon, m.nodes[static_cast<std::size_t>(t[0])], m.nodes[static_cast<std::size_t>(t[1])],
                               m.nodes[static_cast<std::size_t>(t[2])], sigma, value_sq, 0, layers);
  }
  return std::sqrt(std::max(0.0, total));
}

double weighted_l2_boundary(const BoundaryMesh& bm, const Polygon& p, const Vector& ub, double sigma, int layers) {
  check_sigma(sigma, -0.5);
  if (static_cast<std::size_t>(ub.size()) != bm.size()) throw Error("field.size", "boundary field length mismatch");
  double total = 0.0;
  for (const auto& seg : bm.segments) {
    const Point& a = bm.points[static_cast<std::size_t>(seg.local[0])];
    const Point& b = bm.points[static_cast<std::size_t>(seg.local[1])];
    const double ua = ub[seg.local[0]], ubv = ub[seg.local[1]];
    const double len2 = (b - a).squaredNorm();
    const auto value_sq = [&](const Point& x) {
      const double t = (x - a).dot(b - a) / len2;
      const double v = ua + t * (ubv - ua);
      return v * v;
    };
    total += weighted_segment(p, a, b, sigma, value_sq, 0, layers);
  }
  return std::sqrt(std::max(0.0, total));
}

double gagliardo_energy(const Vector& ub, const DenseMatrix& theta) {
  if (ub.size() != theta.rows()) throw Error("field.size", "boundary field length differs from the nonlocal matrix");
  return ub.dot(theta * ub);
}

double boundary_h2_diagnostic(const Vector& ub, const BoundaryMesh& bm) {
  if (static_cast<std::size_t>(ub.size()) != bm.size()) throw Error("field.size", "boundary field length mismatch");
  const std::size_t nseg = bm.segments.size();
  // Rotate so that the walk starts at the beginning of a side.
  std::size_t start = 0;
  for (std::size_t k = 0; k < nseg; ++k) {
    if (bm.segments[k].side != bm.segments[(k + nseg - 1) % nseg].side) {
      start = k;
      break;
    }
  }
  double total = 0.0;
  std::size_t k = 0;
  while (k < nseg) {
    const int side = bm.segments[(start + k) % nseg].side;
    std::vector<double> t{0.0};
    std::vector<double> v{ub[bm.segments[(start + k) % nseg].local[0]]};
    while (k < nseg && bm.segments[(start + k) % nseg].side == side) {
      const auto& seg = bm.segments[(start + k) % nseg];
      t.push_back(t.back() + seg.length);
      v.push_back(ub[seg.local[1]]);
      ++k;
    }
    const std::size_t m = t.size() - 1;
    if (t.size() < 3) {
      spdlog::warn("boundary H2 diagnostic: side {} has fewer than three nodes and is skipped", side);
      continue;
    }
    for (std::size_t j = 1; j < m; ++j) {
      const double hl = t[j] - t[j - 1];
      const double hr = t[j + 1] - t[j];
      const double d2 = 2.0 * ((v[j + 1] - v[j]) / hr - (v[j] - v[j - 1]) / hl) / (hl + hr);
      double w = 0.5 * (hl + hr);
      if (j == 1) w += 0.5 * hl;
      if (j + 1 == m) w += 0.5 * hr;
      total += w * d2 * d2;
    }
  }
  return std::sqrt(total);
}

std::array<Vector, 2> recovered_gradient(const FemSpace& space, const Vector& u) {
  check_size(space, u);
  const Mesh& m = space.mesh();
  const auto n = static_cast<Eigen::Index>(m.node_count());
  std::array<Vector, 2> g{Vector::Zero(n), Vector::Zero(n)};
  Vector weight = Vector::Zero(n);
  for (const auto& t : m.triangles) {
    const Point& a = m.nodes[static_cast<std::size_t>(t[0])];
    const Point& b = m.nodes[static_cast<std::size_t>(t[1])];
    const Point& c = m.nodes[static_cast<std::size_t>(t[2])];
    const double area2 = cross(b - a, c - a);
    const Point grad = ((u[t[1]] - u[t[0]]) * Point(c.y() - a.y(), a.x() - c.x()) +
                        (u[t[2]] - u[t[0]]) * Point(a.y() - b.y(), b.x() - a.x())) /
                       area2;
    for (const int v : t) {
      g[0][v] += 0.5 * area2 * grad.x();
      g[1][v] += 0.5 * area2 * grad.y();
      weight[v] += 0.5 * area2;
    }
  }
  g[0] = g[0].cwiseQuotient(weight);
  g[1] = g[1].cwiseQuotient(weight);
  return g;
}

double weighted_hessian_diagnostic(const FemSpace& space, const Vector& u, double sigma) {
  const auto g = recovered_gradient(space, u);
  const Mesh& m = space.mesh();
  Vector frob(static_cast<Eigen::Index>(m.triangle_count()));
  for (std::size_t k = 0; k < m.triangle_count(); ++k) {
    const auto& t = m.triangles[k];
    const Point& a = m.nodes[static_cast<std::size_t>(t[0])];
    const Point& b = m.nodes[static_cast<std::size_t>(t[1])];
    const Point& c = m.nodes[static_cast<std::size_t>(t[2])];
    const double area2 = cross(b - a, c - a);
    double sum = 0.0;
    for (const auto& comp : g) {
      const Point grad = ((comp[t[1]] - comp[t[0]]) * Point(c.y() - a.y(), a.x() - c.x()) +
                          (comp[t[2]] - comp[t[0]]) * Point(a.y() - b.y(), b.x() - a.x())) /
                         area2;
      sum += grad.squaredNorm();
    }
    frob[static_cast<Eigen::Index>(k)] = std::sqrt(sum);
  }
  return weighted_l2_elementwise(m, frob, sigma);
}

double friedrichs_ratio(const FemSpace& space, const Vector& u) {
  check_size(space, u);
  if (u.cwiseAbs().maxCoeff() == 0.0) throw Error("field.zero", "Friedrichs ratio is undefined for the zero field");
  const double den = quadratic(space.stiffness(), u) + quadratic(space.boundary_mass(), space.trace(u));
  return quadratic(space.mass(), u) / den;
}

NormReport norm_report(const FemSpace& space, const Vector& u, const DenseMatrix* theta, double sigma) {
  NormReport r;
  r.l2_bulk = l2_bulk(space, u);
  r.h1_bulk_semi = h1_bulk_semi(space, u);
  r.l2_bdry = l2_bdry(space, u);
  r.h1_bdry_semi = h1_bdry_semi(space, u);
  r.v1 = std::sqrt(r.h1_bulk_semi * r.h1_bulk_semi + r.h1_bdry_semi * r.h1_bdry_semi + r.l2_bdry * r.l2_bdry);
  const Vector ub = space.trace(u);
  if (theta) r.gagliardo_s = gagliardo_energy(ub, *theta);
  r.bdry_h2_diag = boundary_h2_diagnostic(ub, space.boundary());
  r.weighted_l2_sigma = weighted_l2(space, u, sigma);
  r.weighted_hess_diag = weighted_hessian_diagnostic(space, u, sigma);
  return r;
}

}  // namespace venttsel
