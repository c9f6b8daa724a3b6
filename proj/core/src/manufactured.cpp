#include "venttsel/manufactured.hpp"

#include "venttsel/analysis.hpp"
#include "venttsel/oracle.hpp"
#include "venttsel/quadrature.hpp"

#include <cmath>

namespace venttsel {

namespace {

using Rule = std::vector<std::pair<double, double>>;  // (point, weight) on [0, 1]

// Composite Gauss on [a, b] with pieces halving toward `a` (levels times).
void append_graded(Rule& out, double a, double b, int levels, int order) {
  const quad::Rule1D& g = quad::gauss_legendre(order);
  auto piece = [&](double lo, double hi) {
    for (std::size_t q = 0; q < g.size(); ++q) out.emplace_back(lo + (hi - lo) * g.points[q], (hi - lo) * g.weights[q]);
  };
  double w = b - a;
  for (int k = 0; k < levels; ++k) {
    piece(a + 0.5 * w, a + w);
    w *= 0.5;
  }
  piece(a, a + w);
}

// Parameter rule on a segment; graded toward the ends that are corners.
Rule segment_rule(bool corner0, bool corner1) {
  Rule r;
  constexpr int kLevels = 16;
  constexpr int kOrder = 8;
  if (corner0 && corner1) {
    append_graded(r, 0.0, 0.5, kLevels, kOrder);
    Rule right;
    append_graded(right, 0.0, 0.5, kLevels, kOrder);
    for (const auto& [t, w] : right) r.emplace_back(1.0 - t, w);
  } else if (corner0) {
    append_graded(r, 0.0, 1.0, kLevels, kOrder);
  } else if (corner1) {
    Rule left;
    append_graded(left, 0.0, 1.0, kLevels, kOrder);
    for (const auto& [t, w] : left) r.emplace_back(1.0 - t, w);
  } else {
    const quad::Rule1D& g = quad::gauss_legendre(kOrder);
    for (std::size_t q = 0; q < g.size(); ++q) r.emplace_back(g.points[q], g.weights[q]);
  }
  return r;
}

Point seg_point(const BoundaryMesh& bm, int local) { return bm.points[static_cast<std::size_t>(local)]; }

Vector pointwise_load(const ManufacturedProblem& prob, const BoundaryMesh& bm) {
  Vector load = Vector::Zero(static_cast<Eigen::Index>(bm.size()));
  for (const auto& seg : bm.segments) {
    const Point p0 = seg_point(bm, seg.local[0]);
    const Point p1 = seg_point(bm, seg.local[1]);
    const bool c0 = bm.corner[static_cast<std::size_t>(seg.local[0])] >= 0;
    const bool c1 = bm.corner[static_cast<std::size_t>(seg.local[1])] >= 0;
    for (const auto& [xi, w] : segment_rule(c0, c1)) {
      const double g = boundary_datum(prob, p0 + xi * (p1 - p0), seg.side);
      load[seg.local[0]] += w * seg.length * g * (1.0 - xi);
      load[seg.local[1]] += w * seg.length * g * xi;
    }
  }
  // integration by parts of -d_ll u on each open side leaves the jump of
  // the tangential derivative at every corner
  const Polygon& p = prob.polygon;
  const std::size_t nv = p.size();
  for (std::size_t k = 0; k < bm.size(); ++k) {
    const int v = bm.corner[k];
    if (v < 0) continue;
    const auto vi = static_cast<std::size_t>(v);
    const Point gu = prob.exact.grad(p.vertex(vi));
    load[static_cast<Eigen::Index>(k)] += gu.dot(p.side_tangent((vi + nv - 1) % nv)) - gu.dot(p.side_tangent(vi));
  }
  return load;
}

// u(x) - u(y), linearized at the midpoint when x and y nearly coincide;
// second entry is the rounding scale of the difference.
std::pair<double, double> trace_jump(const ExactSolution& ex, const PairPoint& pp, double scale) {
  if (pp.dxy.norm() < 1e-6 * scale) return {ex.grad(0.5 * (pp.x + pp.y)).dot(pp.dxy), 0.0};
  const double ux = ex.u(pp.x), uy = ex.u(pp.y);
  return {ux - uy, std::abs(ux) + std::abs(uy)};
}

int slot(const BoundarySegment& seg, int k) { return seg.local[0] == k ? 0 : (seg.local[1] == k ? 1 : -1); }

// int_{S x T} (u(x) - u(y)) (phi_k(x) - phi_k(y)) K by tensor Gauss 16 on
// boxes split until distance >= longer side; all four node functions at once.
void separated_form(const ExactSolution& ex, const Point& s0, const Point& s1, const Point& t0, const Point& t1, double s,
                    double x0, double x1, double y0, double y1, Eigen::Vector4d& acc, int depth) {
  const Point a0 = s0 + x0 * (s1 - s0), a1 = s0 + x1 * (s1 - s0);
  const Point b0 = t0 + y0 * (t1 - t0), b1 = t0 + y1 * (t1 - t0);
  const double la = (a1 - a0).norm(), lb = (b1 - b0).norm();
  if (segment_distance(a0, a1, b0, b1) < std::max(la, lb) && depth < 40) {
    if (la >= lb) {
      const double xm = 0.5 * (x0 + x1);
      separated_form(ex, s0, s1, t0, t1, s, x0, xm, y0, y1, acc, depth + 1);
      separated_form(ex, s0, s1, t0, t1, s, xm, x1, y0, y1, acc, depth + 1);
    } else {
      const double ym = 0.5 * (y0 + y1);
      separated_form(ex, s0, s1, t0, t1, s, x0, x1, y0, ym, acc, depth + 1);
      separated_form(ex, s0, s1, t0, t1, s, x0, x1, ym, y1, acc, depth + 1);
    }
    return;
  }
  const quad::Rule1D& g = quad::gauss_legendre(16);
  const double expo = -0.5 * (1.0 + 2.0 * s);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double xi = x0 + (x1 - x0) * g.points[i];
    const Point x = s0 + xi * (s1 - s0);
    const double ux = ex.u(x);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double eta = y0 + (y1 - y0) * g.points[j];
      const Point y = t0 + eta * (t1 - t0);
      const double k = g.weights[i] * g.weights[j] * la * lb * std::pow((x - y).squaredNorm(), expo) * (ux - ex.u(y));
      acc += k * Eigen::Vector4d(1.0 - xi, xi, -(1.0 - eta), -eta);
    }
  }
}

Vector form_load(const ManufacturedProblem& prob, const BoundaryMesh& bm) {
  const ExactSolution& ex = prob.exact;
  const double s = prob.spec.s;
  const double tol = prob.oracle_tol;
  const double scale = bm.perimeter();
  Vector load = Vector::Zero(static_cast<Eigen::Index>(bm.size()));
  const quad::Rule1D& g = quad::gauss_legendre(8);

  for (const auto& seg : bm.segments) {
    const Point p0 = seg_point(bm, seg.local[0]);
    const Point p1 = seg_point(bm, seg.local[1]);
    // flux (the bulk form minus (f, phi_i) after Green's identity) and b u
    for (std::size_t q = 0; q < g.size(); ++q) {
      const double xi = g.points[q];
      const Point x = p0 + xi * (p1 - p0);
      const double v = ex.grad(x).dot(seg.normal) + prob.spec.b.at(seg.side, x) * ex.u(x);
      const double w = g.weights[q] * seg.length * v;
      load[seg.local[0]] += w * (1.0 - xi);
      load[seg.local[1]] += w * xi;
    }
    // tangential form: d_l phi is constant, so the integral of d_l u is exact
    const double du = (ex.u(p1) - ex.u(p0)) / seg.length;
    load[seg.local[0]] -= du;
    load[seg.local[1]] += du;
  }

  const std::size_t ns = bm.segments.size();
  for (std::size_t a = 0; a < ns; ++a) {
    const auto& S = bm.segments[a];
    const Point s0 = seg_point(bm, S.local[0]), s1 = seg_point(bm, S.local[1]);
    for (std::size_t b = a; b < ns; ++b) {
      const auto& T = bm.segments[b];
      const Point t0 = seg_point(bm, T.local[0]), t1 = seg_point(bm, T.local[1]);
      const PairKind kind = classify_pair(bm, a, b);
      if (kind == PairKind::separated) {
        Eigen::Vector4d acc = Eigen::Vector4d::Zero();
        separated_form(ex, s0, s1, t0, t1, s, 0.0, 1.0, 0.0, 1.0, acc, 0);
        const std::array<int, 4> nodes{S.local[0], S.local[1], T.local[0], T.local[1]};
        for (int k = 0; k < 4; ++k) load[nodes[static_cast<std::size_t>(k)]] += 2.0 * acc[k];
        continue;
      }
      std::vector<int> nodes{S.local[0], S.local[1]};
      for (const int k : T.local)
        if (slot(S, k) < 0) nodes.push_back(k);
      const double factor = kind == PairKind::identical ? 1.0 : 2.0;
      for (const int k : nodes) {
        const int sx = slot(S, k), ty = slot(T, k);
        auto integrand = [&](const PairPoint& pp) {
          double jump;
          if (kind == PairKind::identical) {
            jump = sx == 0 ? -pp.dparam : pp.dparam;
          } else if (sx >= 0 && ty >= 0) {
            jump = (ty == 0 ? pp.eta : pp.eta_c) - (sx == 0 ? pp.xi : pp.xi_c);
          } else {
            const double fx = sx < 0 ? 0.0 : (sx == 0 ? pp.xi_c : pp.xi);
            const double fy = ty < 0 ? 0.0 : (ty == 0 ? pp.eta_c : pp.eta);
            jump = fx - fy;
          }
          const auto [du, noise] = trace_jump(ex, pp, scale);
          return PairSample(du * jump, noise * std::abs(jump));
        };
        load[k] += factor * segment_pair_integral(s0, s1, t0, t1, integrand, s, tol, 1e-3 * tol * S.length);
      }
    }
  }
  return load;
}

}  // namespace

std::vector<std::string> manufactured_presets() { return {"constant", "cubic", "harmonic"}; }

ManufacturedProblem make_manufactured(const std::string& preset, const Polygon& p, double s, const BoundaryCoefficient& b) {
  ManufacturedProblem prob;
  prob.preset = preset;
  prob.polygon = p;
  ExactSolution& ex = prob.exact;
  if (preset == "constant") {
    prob.description = "u = 1, f = 0, g = b";
    ex.u = [](const Point&) { return 1.0; };
    ex.grad = [](const Point&) { return Point(0.0, 0.0); };
    ex.hess = [](const Point&) { return Eigen::Matrix2d::Zero().eval(); };
    ex.f = [](const Point&) { return 0.0; };
  } else if (preset == "cubic") {
    prob.description = "u = x^3 + y^3, f = -6(x + y)";
    ex.u = [](const Point& x) { return x.x() * x.x() * x.x() + x.y() * x.y() * x.y(); };
    ex.grad = [](const Point& x) { return Point(3.0 * x.x() * x.x(), 3.0 * x.y() * x.y()); };
    ex.hess = [](const Point& x) {
      Eigen::Matrix2d h;
      h << 6.0 * x.x(), 0.0, 0.0, 6.0 * x.y();
      return h;
    };
    ex.f = [](const Point& x) { return -6.0 * (x.x() + x.y()); };
  } else if (preset == "harmonic") {
    prob.description = "u = exp(x) sin(y), f = 0";
    ex.u = [](const Point& x) { return std::exp(x.x()) * std::sin(x.y()); };
    ex.grad = [](const Point& x) {
      const double e = std::exp(x.x());
      return Point(e * std::sin(x.y()), e * std::cos(x.y()));
    };
    ex.hess = [](const Point& x) {
      const double e = std::exp(x.x());
      const double sn = e * std::sin(x.y()), cs = e * std::cos(x.y());
      Eigen::Matrix2d h;
      h << sn, cs, cs, -sn;
      return h;
    };
    ex.f = [](const Point&) { return 0.0; };
  } else {
    throw Error("manufactured.unknown_preset", "unknown manufactured preset '" + preset + "' (constant, cubic, harmonic)");
  }
  prob.spec.s = s;
  prob.spec.b = b;
  prob.spec.f = ex.f;
  prob.spec.validate(p);
  return prob;
}

double boundary_datum(const ManufacturedProblem& prob, const Point& x, int side) {
  const Polygon& p = prob.polygon;
  const auto k = static_cast<std::size_t>(side);
  const Point tau = p.side_tangent(k);
  const Point nu = p.side_normal(k);
  const ExactSolution& ex = prob.exact;
  const double lap_l = tau.dot(ex.hess(x) * tau);
  const double theta = theta_pointwise_oracle(p, ex.u, x, prob.spec.s, prob.oracle_tol);
  return -lap_l + ex.grad(x).dot(nu) + prob.spec.b.at(side, x) * ex.u(x) + theta;
}

double boundary_identity_residual(const ManufacturedProblem& prob, const Point& x, int side, double g, double tol) {
  const Polygon& p = prob.polygon;
  const auto k = static_cast<std::size_t>(side);
  const Point tau = p.side_tangent(k);
  const ExactSolution& ex = prob.exact;
  const double theta = theta_pointwise_oracle(p, ex.u, x, prob.spec.s, tol);
  return -tau.dot(ex.hess(x) * tau) + ex.grad(x).dot(p.side_normal(k)) + prob.spec.b.at(side, x) * ex.u(x) + theta - g;
}

Vector boundary_load(const ManufacturedProblem& prob, const BoundaryMesh& bm, LoadRoute route) {
  if (route == LoadRoute::automatic) route = prob.spec.s < 0.5 ? LoadRoute::pointwise : LoadRoute::form;
  return route == LoadRoute::pointwise ? pointwise_load(prob, bm) : form_load(prob, bm);
}

BoundarySource boundary_source(const ManufacturedProblem& prob, const BoundaryMesh& bm, LoadRoute route) {
  BoundarySource g;
  g.kind = BoundarySource::Kind::load_table;
  const Vector load = boundary_load(prob, bm, route);
  g.table.assign(load.data(), load.data() + load.size());
  return g;
}

ProblemSpec bind(const ManufacturedProblem& prob, const BoundaryMesh& bm, LoadRoute route) {
  ProblemSpec spec = prob.spec;
  spec.g = boundary_source(prob, bm, route);
  return spec;
}

double data_norm_f(const ManufacturedProblem& prob, const Mesh& m) { return weighted_l2(m, prob.exact.f, 0.0); }

double data_norm_g(const ManufacturedProblem& prob) {
  const Polygon& p = prob.polygon;
  double sum = 0.0;
  const Rule r = segment_rule(true, true);
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Point a = p.vertex(k), b = p.vertex(k + 1);
    const double len = p.side_length(k);
    for (const auto& [t, w] : r) {
      const double g = boundary_datum(prob, a + t * (b - a), static_cast<int>(k));
      sum += w * len * g * g;
    }
  }
  return std::sqrt(sum);
}

ProblemSpec benchmark_spec(double s, const BoundaryCoefficient& b) {
  ProblemSpec spec;
  spec.s = s;
  spec.b = b;
  spec.f = [](const Point&) { return 1.0; };
  spec.g = BoundarySource::zero();
  return spec;
}

}  // namespace venttsel
