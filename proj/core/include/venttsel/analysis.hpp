#pragma once

#include "venttsel/space.hpp"

namespace venttsel {

struct NormReport {
  double l2_bulk = 0.0;
  double h1_bulk_semi = 0.0;
  double l2_bdry = 0.0;
  double h1_bdry_semi = 0.0;
  double v1 = 0.0;
  double gagliardo_s = 0.0;
  double bdry_h2_diag = 0.0;
  double weighted_l2_sigma = 0.0;
  double weighted_hess_diag = 0.0;
};

double l2_bulk(const FemSpace& space, const Vector& u);
double h1_bulk_semi(const FemSpace& space, const Vector& u);
double l2_bdry(const FemSpace& space, const Vector& u);
double h1_bdry_semi(const FemSpace& space, const Vector& u);

/// (|grad u|^2_{L2(Omega)} + |d_l u|^2_{L2(boundary)} + |u|^2_{L2(boundary)})^{1/2}.
double v1_norm(const FemSpace& space, const Vector& u);

/// ||r^sigma u||_{L2(Omega)} for a P1 field; elements at corners use a
/// radially refined composite rule with `layers` dyadic levels.
double weighted_l2(const FemSpace& space, const Vector& u, double sigma, int layers = 3);
/// Same for a callable over the mesh elements.
double weighted_l2(const Mesh& m, const ScalarField& fn, double sigma, int layers = 3);
/// ||r^sigma u||_{L2(boundary)} for boundary nodal values.
double weighted_l2_boundary(const BoundaryMesh& bm, const Polygon& p, const Vector& ub, double sigma, int layers = 3);
/// Weighted norm of a piecewise constant function (one value per triangle).
double weighted_l2_elementwise(const Mesh& m, const Vector& per_triangle, double sigma, int layers = 3);

/// u^T Theta u.
double gagliardo_energy(const Vector& ub, const DenseMatrix& theta);

/// Per-side second divided differences, squared and weighted by spacing,
/// summed over sides; square root returned. Corners are never differenced
/// across. Sides with fewer than three nodes contribute 0.
double boundary_h2_diagnostic(const Vector& ub, const BoundaryMesh& bm);

/// Volume-weighted recovered gradient at the nodes, one per component.
std::array<Vector, 2> recovered_gradient(const FemSpace& space, const Vector& u);
/// Weighted L2 norm of the Frobenius norm of the elementwise gradient of the
/// recovered gradient.
double weighted_hessian_diagnostic(const FemSpace& space, const Vector& u, double sigma);

/// |u|^2_{L2(Omega)} / (|grad u|^2_{L2(Omega)} + |u|^2_{L2(boundary)}).
double friedrichs_ratio(const FemSpace& space, const Vector& u);

/// All norms at once; `theta` may be null (Gagliardo term left 0).
NormReport norm_report(const FemSpace& space, const Vector& u, const DenseMatrix* theta, double sigma);

}  // namespace venttsel
