#include "venttsel/assembly.hpp"
#include "venttsel/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace venttsel {

namespace {

struct SegmentView {
  Point p0, p1;
  double length;
};

SegmentView view(const BoundaryMesh& bm, std::size_t k) {
  const auto& seg = bm.segments[k];
  return {bm.points[static_cast<std::size_t>(seg.local[0])], bm.points[static_cast<std::size_t>(seg.local[1])], seg.length};
}

// Separated pair over parameter boxes [x0,x1] x [y0,y1]; accumulates the
// 4x4 block in basis (S0, S1, T0, T1).
void separated_box(const SegmentView& S, const SegmentView& T, double s, const std::array<int, 3>& orders,
                   double x0, double x1, double y0, double y1, int depth, Eigen::Matrix4d& out) {
  const Point a0 = S.p0 + x0 * (S.p1 - S.p0), a1 = S.p0 + x1 * (S.p1 - S.p0);
  const Point b0 = T.p0 + y0 * (T.p1 - T.p0), b1 = T.p0 + y1 * (T.p1 - T.p0);
  const double la = S.length * (x1 - x0);
  const double lb = T.length * (y1 - y0);
  // Thresholds carry a relative slack so that ratios sitting exactly on them
  // (common on rectilinear meshes) pick the same rule after rounding.
  const double ratio = segment_distance(a0, a1, b0, b1) / std::max(la, lb);
  constexpr double slack = 1e-9;
  if (ratio < 0.25 * (1.0 - slack) && depth < 40) {
    if (la >= lb) {
      const double xm = 0.5 * (x0 + x1);
      separated_box(S, T, s, orders, x0, xm, y0, y1, depth + 1, out);
      separated_box(S, T, s, orders, xm, x1, y0, y1, depth + 1, out);
    } else {
      const double ym = 0.5 * (y0 + y1);
      separated_box(S, T, s, orders, x0, x1, y0, ym, depth + 1, out);
      separated_box(S, T, s, orders, x0, x1, ym, y1, depth + 1, out);
    }
    return;
  }
  const int order = ratio > 4.0 * (1.0 + slack) ? orders[0] : (ratio > 1.0 + slack ? orders[1] : orders[2]);
  const quad::Rule1D& g = quad::gauss_legendre(order);
  const double expo = -0.5 * (1.0 + 2.0 * s);
  const double jac = la * lb;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double xi = x0 + (x1 - x0) * g.points[i];
    const Point x = S.p0 + xi * (S.p1 - S.p0);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double eta = y0 + (y1 - y0) * g.points[j];
      const Point y = T.p0 + eta * (T.p1 - T.p0);
      const double k = g.weights[i] * g.weights[j] * jac * std::pow((x - y).squaredNorm(), expo);
      const Eigen::Vector4d w(1.0 - xi, xi, -(1.0 - eta), -eta);
      out.noalias() += (k * w) * w.transpose();
    }
  }
}

Eigen::Matrix4d separated_block(const SegmentView& S, const SegmentView& T, double s, const std::array<int, 3>& orders) {
  Eigen::Matrix4d out = Eigen::Matrix4d::Zero();
  separated_box(S, T, s, orders, 0.0, 1.0, 0.0, 1.0, 0, out);
  return out;
}

// Adjacent pair sharing node c: S = [c, p], T = [c, q]. Each half of the
// parameter square is collapsed onto the shared corner; the radial integral
// of rho^{2-2s} is exact and only the angular variable is integrated.
Eigen::Matrix3d adjacent_block(const Point& c, const Point& p, const Point& q, double s, int order) {
  const double l1 = (p - c).norm();
  const double l2 = (q - c).norm();
  const Point u = p - c;  // l1 * e1
  const Point v = q - c;  // l2 * e2
  const double expo = -0.5 * (1.0 + 2.0 * s);
  const quad::Rule1D& g = quad::gauss_legendre(order);
  Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
  for (int half = 0; half < 2; ++half) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double t = 0.5 * (half + g.points[k]);
      const double w = 0.5 * g.weights[k];
      const Eigen::Vector3d a(t - 1.0, 1.0, -t);
      const Eigen::Vector3d b(1.0 - t, t, -1.0);
      const double ka = std::pow((u - t * v).squaredNorm(), expo);
      const double kb = std::pow((t * u - v).squaredNorm(), expo);
      acc.noalias() += (w * ka) * a * a.transpose();
      acc.noalias() += (w * kb) * b * b.transpose();
    }
  }
  return acc * (l1 * l2 / (3.0 - 2.0 * s));
}

std::string pair_name(std::size_t a, std::size_t b) {
  std::ostringstream os;
  os << "segments (" << a << ", " << b << ")";
  return os.str();
}

}  // namespace

PairKind classify_pair(const BoundaryMesh& bm, std::size_t a, std::size_t b) {
  if (a == b) return PairKind::identical;
  const auto& sa = bm.segments[a].local;
  const auto& sb = bm.segments[b].local;
  for (const int x : sa)
    for (const int y : sb)
      if (x == y) return PairKind::adjacent;
  return PairKind::separated;
}

DenseMatrix theta_pair_block(const BoundaryMesh& bm, std::size_t a, std::size_t b, double s,
                             std::vector<int>& nodes, const ThetaPolicy& policy) {
  const auto& sa = bm.segments[a];
  const auto& sb = bm.segments[b];
  nodes.assign(sa.local.begin(), sa.local.end());
  switch (classify_pair(bm, a, b)) {
    case PairKind::identical: {
      const double c = 2.0 * std::pow(sa.length, 1.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s));
      DenseMatrix out(2, 2);
      out << c, -c, -c, c;
      return out;
    }
    case PairKind::adjacent: {
      const int shared = (sa.local[0] == sb.local[0] || sa.local[0] == sb.local[1]) ? sa.local[0] : sa.local[1];
      const int p = sa.local[0] == shared ? sa.local[1] : sa.local[0];
      const int q = sb.local[0] == shared ? sb.local[1] : sb.local[0];
      if (p == q) throw Error("boundary.too_small", "segments share both endpoints");
      const Eigen::Matrix3d blk =
          adjacent_block(bm.points[static_cast<std::size_t>(shared)], bm.points[static_cast<std::size_t>(p)],
                         bm.points[static_cast<std::size_t>(q)], s, policy.adjacent_order);
      nodes.push_back(q);
      // Local order (shared, p, q) -> (S0, S1, q).
      std::array<int, 3> perm{};
      perm[0] = sa.local[0] == shared ? 0 : 1;
      perm[1] = sa.local[0] == shared ? 1 : 0;
      perm[2] = 2;
      DenseMatrix out(3, 3);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out(i, j) = blk(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
      return out;
    }
    case PairKind::separated: {
      const SegmentView S = view(bm, a), T = view(bm, b);
      Eigen::Matrix4d blk = separated_block(S, T, s, policy.separated_orders);
      if (policy.tolerance > 0.0) {
        const std::array<int, 3> doubled{2 * policy.separated_orders[0], 2 * policy.separated_orders[1],
                                         2 * policy.separated_orders[2]};
        const Eigen::Matrix4d fine = separated_block(S, T, s, doubled);
        const double scale = fine.cwiseAbs().maxCoeff();
        if ((fine - blk).cwiseAbs().maxCoeff() > policy.tolerance * scale) {
          throw Error("theta.quadrature", "quadrature tolerance not reached on " + pair_name(a, b));
        }
        blk = fine;
      }
      nodes.push_back(sb.local[0]);
      nodes.push_back(sb.local[1]);
      return DenseMatrix(blk);
    }
  }
  return {};
}

DenseMatrix nonlocal_matrix(const BoundaryMesh& bm, double s, const ThetaPolicy& policy) {
  if (!(s > 0.0 && s < 1.0)) throw Error("s.range", "fractional order s must lie in (0, 1)");
  const std::size_t n = bm.size();
  const std::size_t nseg = bm.segments.size();
  if (n < 3 || nseg < 3) throw Error("boundary.too_small", "the nonlocal matrix needs at least three boundary segments");
  for (const auto& seg : bm.segments)
    if (!(seg.length > 0.0)) throw Error("boundary.zero_length", "boundary segment has zero length");

  // Row k of Theta collects sum over S containing k and all T of C(S,T)[k,:],
  // doubled when k is not a node of T (that share comes from the mirrored
  // pair). Each segment owns the rows of its two nodes in separate halves,
  // so the final reduction order is fixed.
  const auto ni = static_cast<Eigen::Index>(n);
  DenseMatrix first = DenseMatrix::Zero(ni, ni);
  DenseMatrix second = DenseMatrix::Zero(ni, ni);

  const auto work = [&](std::size_t begin, std::size_t stride) {
    std::vector<int> nodes;
    Eigen::RowVectorXd r0(ni), r1(ni);
    for (std::size_t a = begin; a < nseg; a += stride) {
      r0.setZero();
      r1.setZero();
      for (std::size_t b = 0; b < nseg; ++b) {
        const DenseMatrix blk = theta_pair_block(bm, a, b, s, nodes, policy);
        const auto& tb = bm.segments[b].local;
        for (int row = 0; row < 2; ++row) {
          const int k = nodes[static_cast<std::size_t>(row)];
          const double factor = (k == tb[0] || k == tb[1]) ? 1.0 : 2.0;
          Eigen::RowVectorXd& dst = row == 0 ? r0 : r1;
          for (std::size_t c = 0; c < nodes.size(); ++c) dst[nodes[c]] += factor * blk(row, static_cast<Eigen::Index>(c));
        }
      }
      first.row(bm.segments[a].local[0]) = r0;
      second.row(bm.segments[a].local[1]) = r1;
    }
  };

  const auto threads = static_cast<std::size_t>(std::max(1, policy.threads));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t, threads);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  DenseMatrix theta = first + second;
  const DenseMatrix sym = 0.5 * (theta + theta.transpose());
  return sym;
}

}  // namespace venttsel
