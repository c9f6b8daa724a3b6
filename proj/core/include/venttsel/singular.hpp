#pragma once

#include "venttsel/mesh.hpp"

#include <optional>
#include <vector>

namespace venttsel {

/// Leading corner singularity chi(r) r^lambda sin(lambda omega) at a
/// reentrant corner, lambda = pi / alpha.
struct SingularTerm {
  std::size_t corner_index = 0;
  double alpha = 0.0;
  double lambda = 0.0;
  Point corner = Point::Zero();
  Point first_edge = Point::Zero();   // unit direction along the preceding edge, omega = 0
  Point second_edge = Point::Zero();  // unit direction along the following edge, omega = alpha
  double cutoff_radius = 0.0;
  std::optional<double> coefficient;

  /// Local polar coordinates (r, omega), omega in [0, 2 pi) measured from
  /// the preceding edge into the domain.
  std::pair<double, double> polar(const Point& x) const;
  /// r^lambda sin(lambda omega), no cutoff.
  double raw(const Point& x) const;
  /// Unchecked chi(r) * raw(x).
  double evaluate(const Point& x) const;
};

/// C^2 quintic smoothstep cutoff: 1 for r <= rho/2, 0 for r >= rho.
double cutoff(double r, double rho);

/// Term at polygon vertex j; rho defaults to a third of the shorter adjacent side.
SingularTerm make_singular_term(const Polygon& p, std::size_t j, std::optional<double> rho = std::nullopt);
/// One term per corner with alpha > pi.
std::vector<SingularTerm> singular_terms(const Polygon& p);

/// chi(r) r^lambda sin(lambda omega); throws for points outside the polygon.
double singular_value(const SingularTerm& term, const Point& x, const Polygon& p);

struct FitOptions {
  double inner = 1.0 / 8.0;  // annulus bounds as fractions of the cutoff radius
  double outer = 0.5;
  std::size_t min_nodes = 12;
};

/// Least-squares fit of nodal values in the annulus against
/// {r^lambda sin(lambda omega), 1, r cos omega, r sin omega}; returns the
/// singular coefficient.
double fit_coefficient(const Mesh& m, const Vector& u, const SingularTerm& term, const FitOptions& options = {});

struct Decomposition {
  std::vector<SingularTerm> terms;  // coefficients set
  Vector regular;                   // w = u - sum c_j chi s_j at the nodes
};

Decomposition decompose(const Mesh& m, const Vector& u, const FitOptions& options = {});
/// u reconstructed from a decomposition.
Vector reconstruct(const Mesh& m, const Decomposition& d);

}  // namespace venttsel
