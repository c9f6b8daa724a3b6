#pragma once

#include "venttsel/assembly.hpp"
#include "venttsel/mesh.hpp"

#include <functional>

namespace venttsel {

/// Sample handed to segment-pair integrands. xi, eta are the parameters
/// of x on S and y on T; the complements 1 - xi, 1 - eta and the offset
/// x - y are computed without cancellation near the singular set.
struct PairPoint {
  double xi, xi_c, eta, eta_c;
  double dparam;  // xi - eta, exact on identical segments
  Point x, y, dxy;
};
/// Integrand value and the magnitude its rounding error scales with (for
/// differences such as u(x) - u(y), |u(x)| + |u(y)| times the other factors).
struct PairSample {
  double value = 0.0;
  double noise = 0.0;
  PairSample(double v = 0.0, double n = 0.0) : value(v), noise(n) {}  // NOLINT: implicit from double
};
using PairIntegrand = std::function<PairSample(const PairPoint&)>;

/// int_S int_T N |x - y|^{-1-2s} dl(x) dl(y) for segments S = [s0, s1],
/// T = [t0, t1] that coincide, share an endpoint, or are disjoint. The
/// integrand must vanish to second order where x = y. Adaptive
/// Gauss-Kronrod on dyadic pieces graded toward the singular set, relative
/// tolerance tol plus an absolute allowance abs_tol per piece.
double segment_pair_integral(const Point& s0, const Point& s1, const Point& t0, const Point& t1, const PairIntegrand& n,
                             double s, double tol = 1e-10, double abs_tol = 0.0);

/// Galerkin entry <theta_s phi_j, phi_i> by direct adaptive quadrature over
/// every contributing ordered segment pair. At most 64 boundary nodes.
double theta_entry_oracle(const BoundaryMesh& bm, std::size_t i, std::size_t j, double s, double tol = 1e-10);
DenseMatrix theta_oracle_matrix(const BoundaryMesh& bm, double s, double tol = 1e-10);

/// (theta_s u)(x) = 2 int (u(x) - u(y)) |x - y|^{-1-2s} dl(y) at a boundary
/// point x. On the side through x the two directions are paired, which
/// cancels the tangential linearization; the innermost piece uses a
/// second-difference estimate of the trace curvature. Corners are
/// rejected for s >= 1/2.
double theta_pointwise_oracle(const Polygon& p, const ScalarField& trace, const Point& x, double s, double tol = 1e-10);

}  // namespace venttsel
