#include "venttsel/oracle.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace venttsel {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
using Gauss = boost::math::quadrature::gauss<double, 7>;
using Fn = std::function<double(double)>;

// Integrand value with the magnitude its rounding error scales with.
struct Sample {
  double value, noise;
};
using NoisyFn = std::function<Sample(double)>;

// Adaptive bisection with the 7/15 Gauss-Kronrod pair. A piece is accepted
// once |K - G| <= max(tol * int|f|, its share of abs_tol, the rounding floor).
struct Adaptive {
  double tol;
  double abs_tol = 0.0;
  int depth = 16;

  // rule for integrals nested inside another adaptive integral
  Adaptive inner() const { return {std::max(1e-2 * tol, 1e-14), 1e-2 * abs_tol, depth}; }

  struct Piece {
    double value, error, l1, noise;
  };

  static Piece kronrod(const NoisyFn& f, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    const auto& x = GK::abscissa();
    const auto& wk = GK::weights();
    const auto& wg = Gauss::weights();
    const Sample f0 = f(mid);
    double k = f0.value * wk[0], g = f0.value * wg[0], l1 = std::abs(f0.value) * wk[0], nz = f0.noise * wk[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
      const Sample fp = f(mid + half * x[i]), fm = f(mid - half * x[i]);
      k += (fp.value + fm.value) * wk[i];
      l1 += (std::abs(fp.value) + std::abs(fm.value)) * wk[i];
      nz += (fp.noise + fm.noise) * wk[i];
      if (i % 2 == 0) g += (fp.value + fm.value) * wg[i / 2];
    }
    return {half * k, half * std::abs(k - g), half * l1, half * nz};
  }

  static double floor_of(const Piece& p) { return 64.0 * std::numeric_limits<double>::epsilon() * p.noise; }

  Piece recurse(const NoisyFn& f, double a, double b, double budget, int level) const {
    const Piece p = kronrod(f, a, b);
    if (p.error <= std::max({tol * p.l1, budget, floor_of(p)}) || level == 0) return p;
    const double m = 0.5 * (a + b);
    const Piece l = recurse(f, a, m, 0.5 * budget, level - 1);
    const Piece r = recurse(f, m, b, 0.5 * budget, level - 1);
    return {l.value + r.value, l.error + r.error, l.l1 + r.l1, l.noise + r.noise};
  }

  // value plus a noise scale that carries the achieved error to an
  // enclosing integral
  Sample integrate(const NoisyFn& f, double a, double b) const {
    if (!(b > a)) return {0.0, 0.0};
    const Piece p = recurse(f, a, b, abs_tol, depth);
    if (!std::isfinite(p.value) || p.error > 10.0 * (tol * p.l1 + abs_tol + floor_of(p)) + 1e-300) {
      std::ostringstream os;
      os << "adaptive quadrature on [" << a << ", " << b << "] stalled at error " << p.error << " (tolerance " << tol
         << ")";
      throw Error("oracle.tolerance", os.str());
    }
    return {p.value, p.noise + p.error / (64.0 * std::numeric_limits<double>::epsilon())};
  }

  double operator()(const NoisyFn& f, double a, double b) const { return integrate(f, a, b).value; }
  double operator()(const Fn& f, double a, double b) const {
    return (*this)(NoisyFn([&f](double t) { return Sample{f(t), 0.0}; }), a, b);
  }
};

Sample operator+(const Sample& a, const Sample& b) { return {a.value + b.value, a.noise + b.noise}; }

// int_a^b f with pieces halving toward a down to `min_width`; the last
// piece [a, a + w] is left to the adaptive rule.
Sample graded_toward(const NoisyFn& f, double a, double b, double min_width, const Adaptive& q) {
  Sample sum{0.0, 0.0};
  double w = b - a;
  while (w > min_width && w > 1e-300) {
    sum = sum + q.integrate(f, a + 0.5 * w, a + w);
    w *= 0.5;
  }
  return sum + q.integrate(f, a, a + w);
}

// int_0^D f for f ~ c d^{p-1}: dyadic pieces down to D 2^-levels, then the
// power-law tail delta f(delta) / p.
Sample toward_zero(const NoisyFn& f, double D, double p, const Adaptive& q, int levels) {
  Sample sum{0.0, 0.0};
  double hi = D;
  for (int k = 0; k < levels; ++k) {
    sum = sum + q.integrate(f, 0.5 * hi, hi);
    hi *= 0.5;
  }
  const Sample tail = f(hi);
  return sum + Sample{hi * tail.value / p, hi * tail.noise / p};
}

bool same(const Point& a, const Point& b) { return a.x() == b.x() && a.y() == b.y(); }

Sample weighted(const PairSample& v, double k) { return {v.value * k, v.noise * k}; }

double identical_pair(const Point& s0, const Point& s1, const PairIntegrand& n, double s, const Adaptive& q) {
  const Adaptive qi = q.inner();
  const Point e = s1 - s0;
  const double len = e.norm();
  const double scale = std::pow(len, 1.0 - 2.0 * s);  // L^2 (dL)^{-1-2s} = L^{1-2s} d^{-1-2s}
  const double expo = -1.0 - 2.0 * s;
  auto inner = [&](double xi, double xi_c) {
    const Point x = s0 + xi * e;
    const NoisyFn lower = [&](double d) {
      const PairPoint pp{xi, xi_c, xi - d, xi_c + d, d, x, x - d * e, d * e};
      return weighted(n(pp), std::pow(d, expo));
    };
    const NoisyFn upper = [&](double d) {
      const PairPoint pp{xi, xi_c, xi + d, xi_c - d, -d, x, x + d * e, -d * e};
      return weighted(n(pp), std::pow(d, expo));
    };
    Sample v{0.0, 0.0};
    if (xi > 0.0) v = v + toward_zero(lower, xi, 2.0 - 2.0 * s, qi, 22);
    if (xi_c > 0.0) v = v + toward_zero(upper, xi_c, 2.0 - 2.0 * s, qi, 22);
    return v;
  };
  const NoisyFn left = [&](double xi) { return inner(xi, 1.0 - xi); };
  const NoisyFn right = [&](double z) { return inner(1.0 - z, z); };
  return (graded_toward(left, 0.0, 0.5, 1e-9, q) + graded_toward(right, 0.0, 0.5, 1e-9, q)).value * scale;
}

// S and T share endpoint c; a, b are distances from c along S and T.
double adjacent_pair(const Point& s0, const Point& s1, const Point& t0, const Point& t1, const PairIntegrand& n,
                     double s, const Adaptive& q) {
  const Adaptive qi = q.inner();
  const bool s_first = same(s0, t0) || same(s0, t1);
  const bool t_first = s_first ? same(t0, s0) : same(t0, s1);
  const Point c = s_first ? s0 : s1;
  const Point p = s_first ? s1 : s0;
  const Point r = t_first ? t1 : t0;
  const double l1 = (p - c).norm();
  const double l2 = (r - c).norm();
  const Point e1 = (p - c) / l1;
  const Point e2 = (r - c) / l2;
  const double expo = -0.5 * (1.0 + 2.0 * s);
  const NoisyFn inner = [&](double a) {
    const double ra = a / l1;
    const double xi = s_first ? ra : 1.0 - ra;
    const double xi_c = s_first ? 1.0 - ra : ra;
    const Point x = c + a * e1;
    const NoisyFn f = [&](double b) {
      const double rb = b / l2;
      const double eta = t_first ? rb : 1.0 - rb;
      const double eta_c = t_first ? 1.0 - rb : rb;
      const Point dxy = a * e1 - b * e2;
      const PairPoint pp{xi, xi_c, eta, eta_c, xi - eta, x, c + b * e2, dxy};
      return weighted(n(pp), std::pow(dxy.squaredNorm(), expo));
    };
    return graded_toward(f, 0.0, l2, 0.01 * a, qi);
  };
  return toward_zero(inner, l1, 3.0 - 2.0 * s, q, 30).value;
}

double separated_pair(const Point& s0, const Point& s1, const Point& t0, const Point& t1, const PairIntegrand& n,
                      double s, const Adaptive& q) {
  const Adaptive qi = q.inner();
  const double l1 = (s1 - s0).norm();
  const double l2 = (t1 - t0).norm();
  const double expo = -0.5 * (1.0 + 2.0 * s);
  const NoisyFn inner = [&](double xi) {
    const Point x = s0 + xi * (s1 - s0);
    const NoisyFn f = [&](double eta) {
      const Point y = t0 + eta * (t1 - t0);
      const Point dxy = x - y;
      const PairPoint pp{xi, 1.0 - xi, eta, 1.0 - eta, xi - eta, x, y, dxy};
      return weighted(n(pp), std::pow(dxy.squaredNorm(), expo));
    };
    return qi.integrate(f, 0.0, 1.0);
  };
  return q(inner, 0.0, 1.0) * l1 * l2;
}

bool contains_node(const BoundarySegment& seg, std::size_t k) {
  return seg.local[0] == static_cast<int>(k) || seg.local[1] == static_cast<int>(k);
}

// phi_k(x) - phi_k(y) for the pair (S, T), without cancellation at the
// coincident or shared-corner set.
double basis_jump(const PairPoint& pp, const BoundarySegment& S, const BoundarySegment& T, std::size_t k, PairKind kind) {
  const int ik = static_cast<int>(k);
  const int sx = S.local[0] == ik ? 0 : (S.local[1] == ik ? 1 : -1);
  const int ty = T.local[0] == ik ? 0 : (T.local[1] == ik ? 1 : -1);
  if (kind == PairKind::identical && sx >= 0) return sx == 0 ? -pp.dparam : pp.dparam;
  if (kind == PairKind::adjacent && sx >= 0 && ty >= 0) {
    // shared node: 1 - phi is the small parameter on each side
    const double ox = sx == 0 ? pp.xi : pp.xi_c;
    const double oy = ty == 0 ? pp.eta : pp.eta_c;
    return oy - ox;
  }
  const double fx = sx < 0 ? 0.0 : (sx == 0 ? pp.xi_c : pp.xi);
  const double fy = ty < 0 ? 0.0 : (ty == 0 ? pp.eta_c : pp.eta);
  return fx - fy;
}

}  // namespace

double segment_pair_integral(const Point& s0, const Point& s1, const Point& t0, const Point& t1, const PairIntegrand& n,
                             double s, double tol, double abs_tol) {
  if (!(s > 0.0 && s < 1.0)) throw Error("s.range", "fractional order s must lie in (0, 1)");
  const Adaptive q{tol, abs_tol};
  if (same(s0, t0) && same(s1, t1)) return identical_pair(s0, s1, n, s, q);
  if (same(s0, t1) && same(s1, t0)) throw Error("oracle.geometry", "identical segments must share orientation");
  if (same(s0, t0) || same(s0, t1) || same(s1, t0) || same(s1, t1)) return adjacent_pair(s0, s1, t0, t1, n, s, q);
  if (!(segment_distance(s0, s1, t0, t1) > 0.0)) throw Error("oracle.geometry", "segments overlap without sharing an endpoint");
  return separated_pair(s0, s1, t0, t1, n, s, q);
}

double theta_entry_oracle(const BoundaryMesh& bm, std::size_t i, std::size_t j, double s, double tol) {
  const std::size_t n = bm.size();
  if (n > 64) throw Error("oracle.size_cap", "entry oracle is limited to 64 boundary nodes");
  if (i >= n || j >= n) throw Error("oracle.index", "boundary node index out of range");
  double total = 0.0;
  for (std::size_t a = 0; a < bm.segments.size(); ++a) {
    const auto& S = bm.segments[a];
    for (std::size_t b = 0; b < bm.segments.size(); ++b) {
      const auto& T = bm.segments[b];
      const bool hit_i = contains_node(S, i) || contains_node(T, i);
      const bool hit_j = contains_node(S, j) || contains_node(T, j);
      if (!hit_i || !hit_j) continue;
      const PairKind kind = classify_pair(bm, a, b);
      auto integrand = [&](const PairPoint& pp) {
        return basis_jump(pp, S, T, i, kind) * basis_jump(pp, S, T, j, kind);
      };
      const auto pt = [&](int k) { return bm.points[static_cast<std::size_t>(k)]; };
      total += segment_pair_integral(pt(S.local[0]), pt(S.local[1]), pt(T.local[0]), pt(T.local[1]), integrand, s, tol);
    }
  }
  return total;
}

DenseMatrix theta_oracle_matrix(const BoundaryMesh& bm, double s, double tol) {
  const auto n = static_cast<Eigen::Index>(bm.size());
  DenseMatrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      out(i, j) = theta_entry_oracle(bm, static_cast<std::size_t>(i), static_cast<std::size_t>(j), s, tol);
      out(j, i) = out(i, j);
    }
  return out;
}

double theta_pointwise_oracle(const Polygon& p, const ScalarField& trace, const Point& x, double s, double tol) {
  if (!(s > 0.0 && s < 1.0)) throw Error("s.range", "fractional order s must lie in (0, 1)");
  const double scale = p.diameter();
  const double expo = -1.0 - 2.0 * s;
  const double ux = trace(x);
  const Adaptive q{tol, 1e-2 * tol * (1.0 + std::abs(ux))};
  const std::size_t nv = p.size();

  int corner = -1;
  for (std::size_t v = 0; v < nv; ++v)
    if ((x - p.vertex(v)).norm() <= 1e-12 * scale) corner = static_cast<int>(v);
  int own = -1;
  if (corner < 0) {
    double best = 1e-10 * scale;
    for (std::size_t k = 0; k < nv; ++k) {
      const double d = p.dist_to_side(x, k);
      if (d <= best) {
        best = d;
        own = static_cast<int>(k);
      }
    }
    if (own < 0) throw Error("oracle.off_boundary", "pointwise oracle needs a point on the polygon boundary");
  } else if (s >= 0.5) {
    throw Error("oracle.corner", "theta_s u is unbounded at a corner for s >= 1/2; use the load-table route");
  }

  double total = 0.0;
  for (std::size_t k = 0; k < nv; ++k) {
    const Point a0 = p.vertex(k);
    const Point a1 = p.vertex(k + 1);
    const double len = p.side_length(k);
    const Point tau = p.side_tangent(k);
    const bool touches_corner = corner >= 0 && (static_cast<int>(k) == corner || static_cast<int>((k + 1) % nv) == corner);
    if (touches_corner) {
      // straight ray from the corner along the side; integrand ~ d^{-2s}
      const Point dir = static_cast<int>(k) == corner ? tau : Point(-tau);
      const NoisyFn f = [&](double d) {
        const double uy = trace(x + d * dir), k = std::pow(d, expo);
        return Sample{(ux - uy) * k, (std::abs(ux) + std::abs(uy)) * k};
      };
      total += toward_zero(f, len, 1.0 - 2.0 * s, q, 40).value;
      continue;
    }
    if (static_cast<int>(k) == own) {
      const double t0 = std::clamp((x - a0).dot(tau), 0.0, len);
      const double dm = t0, dp = len - t0;
      const double m = std::min(dm, dp), big = std::max(dm, dp);
      const double sigma = dp >= dm ? 1.0 : -1.0;
      // paired part on [0, m]: (2u(x) - u(x + d tau) - u(x - d tau)) / d^{1+2s}
      const double a = std::min(m, 1e-4 * len);
      double u2;
      if (m >= 1e-4 * len) {
        u2 = (trace(x + a * tau) - 2.0 * ux + trace(x - a * tau)) / (a * a);
      } else {
        const double hstep = 1e-3 * len;
        auto at = [&](int j) { return trace(x + (sigma * j * hstep) * tau); };
        u2 = (2.0 * ux - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (hstep * hstep);
      }
      total += -u2 * std::pow(a, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
      if (m > a) {
        const NoisyFn paired = [&](double d) {
          const double up = trace(x + d * tau), um = trace(x - d * tau), k = std::pow(d, expo);
          return Sample{(2.0 * ux - up - um) * k, (2.0 * std::abs(ux) + std::abs(up) + std::abs(um)) * k};
        };
        double sum = 0.0, hi = m;
        while (hi > a) {
          const double lo = std::max(a, 0.5 * hi);
          sum += q(paired, lo, hi);
          hi = lo;
        }
        total += sum;
      }
      // one-sided remainder on [m, big]
      if (big > m) {
        const NoisyFn rest = [&](double d) {
          const double uy = trace(x + (sigma * d) * tau), k = std::pow(d, expo);
          return Sample{(ux - uy) * k, (std::abs(ux) + std::abs(uy)) * k};
        };
        total += graded_toward(rest, m, big, std::max(0.01 * m, 1e-14 * len), q).value;
      }
      continue;
    }
    // a side not containing x
    const double tstar = std::clamp((x - a0).dot(tau), 0.0, len);
    const double dist = std::max(point_segment_distance(x, a0, a1), 1e-300);
    auto f = [&](double t) {
      const Point y = a0 + t * tau;
      const double uy = trace(y), k = std::pow((x - y).squaredNorm(), 0.5 * expo);
      return Sample{(ux - uy) * k, (std::abs(ux) + std::abs(uy)) * k};
    };
    const NoisyFn g = [&](double e) { return f(tstar - e); };
    const NoisyFn h = [&](double e) { return f(tstar + e); };
    const double wmin = 0.01 * dist;
    total += (graded_toward(g, 0.0, tstar, wmin, q) + graded_toward(h, 0.0, len - tstar, wmin, q)).value;
  }
  return 2.0 * total;
}

}  // namespace venttsel
