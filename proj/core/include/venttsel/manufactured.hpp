#pragma once

#include "venttsel/assembly.hpp"
#include "venttsel/mesh.hpp"

#include <functional>
#include <string>
#include <vector>

namespace venttsel {

struct ExactSolution {
  ScalarField u;
  std::function<Point(const Point&)> grad;
  std::function<Eigen::Matrix2d(const Point&)> hess;
  ScalarField f;  // -Laplacian of u
};

/// Exact solution plus problem data. The boundary source g depends on the
/// boundary mesh and is bound per level through boundary_source().
struct ManufacturedProblem {
  std::string preset;
  std::string description;
  Polygon polygon;
  ExactSolution exact;
  ProblemSpec spec;  // g left zero
  double oracle_tol = 1e-10;
};

/// Presets: constant (u = 1), cubic (u = x^3 + y^3), harmonic (u = e^x sin y).
ManufacturedProblem make_manufactured(const std::string& preset, const Polygon& p, double s, const BoundaryCoefficient& b);

/// Routes to the boundary load table.
///   pointwise: g = -d_ll u + d_nu u + b u + theta_s u evaluated at quadrature
///              nodes (graded toward corners), plus corner point loads from
///              the jump of the tangential derivative.
///   form:      E(u, phi_i) - (f, phi_i) with the bulk part moved to the
///              boundary flux, the tangential part exact, and the nonlocal
///              part by adaptive double quadrature.
///   automatic: pointwise for s < 1/2, form otherwise.
enum class LoadRoute { automatic, pointwise, form };

/// Pointwise g at a non-corner boundary point x on polygon side `side`.
double boundary_datum(const ManufacturedProblem& prob, const Point& x, int side);

/// -d_ll u + d_nu u + b u + theta_s u - g at x, with theta_s u recomputed
/// at tolerance `tol`.
double boundary_identity_residual(const ManufacturedProblem& prob, const Point& x, int side, double g, double tol);

/// Per-boundary-node load table (the int g phi_i entries).
Vector boundary_load(const ManufacturedProblem& prob, const BoundaryMesh& bm, LoadRoute route = LoadRoute::automatic);
BoundarySource boundary_source(const ManufacturedProblem& prob, const BoundaryMesh& bm, LoadRoute route = LoadRoute::automatic);
/// prob.spec with g bound to `bm`.
ProblemSpec bind(const ManufacturedProblem& prob, const BoundaryMesh& bm, LoadRoute route = LoadRoute::automatic);

/// ||f||_{L2(Omega)} and ||g||_{L2(boundary)} from the exact data,
/// independent of any mesh resolution beyond `m` for f.
double data_norm_f(const ManufacturedProblem& prob, const Mesh& m);
double data_norm_g(const ManufacturedProblem& prob);

/// Benchmark data: f = 1, g = 0 on the given polygon.
ProblemSpec benchmark_spec(double s, const BoundaryCoefficient& b);

std::vector<std::string> manufactured_presets();

}  // namespace venttsel
