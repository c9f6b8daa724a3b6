#pragma once

#include "venttsel/common.hpp"
#include "venttsel/mesh.hpp"

#include <array>
#include <functional>
#include <vector>

namespace venttsel {

using ScalarField = std::function<double(const Point&)>;

/// Boundary coefficient b: per-side constants, or a callable integrated with
/// an 8-point segment rule.
struct BoundaryCoefficient {
  std::vector<double> per_side;  // one value per polygon side, or a single value for all
  ScalarField callable;

  static BoundaryCoefficient constant(double v) { return {{v}, {}}; }
  double at(int side, const Point& x) const;
  bool is_piecewise_constant() const noexcept { return !callable; }
  /// Throws unless b >= 0 everywhere (checked per side or at sample points).
  void validate(const Polygon& p) const;
  /// True when b > 0 on a set of positive length.
  bool nonzero(const Polygon& p) const;
};

/// Boundary data g in one of three forms: a callable, values at the segment
/// Gauss nodes (segment-major, `order` nodes each), or a ready load vector
/// over boundary nodes. Optional point loads sit at polygon corners.
struct BoundarySource {
  enum class Kind { zero, callable, node_table, load_table };
  Kind kind = Kind::zero;
  ScalarField fn;
  std::vector<double> table;
  int order = 8;
  std::vector<double> corner_loads;  // per polygon vertex, optional

  static BoundarySource zero() { return {}; }
  static BoundarySource from_callable(ScalarField f, int order = 8) {
    BoundarySource g;
    g.kind = Kind::callable;
    g.fn = std::move(f);
    g.order = order;
    return g;
  }
};

struct ProblemSpec {
  double s = 0.5;
  BoundaryCoefficient b = BoundaryCoefficient::constant(1.0);
  ScalarField f;
  BoundarySource g;
  double sigma = 0.0;

  /// s < 3/4, the range in which boundary H^2 regularity is expected.
  bool regularity_regime() const noexcept { return s < 0.75; }
  /// Checks 0 < s < 1, b >= 0 and b not identically zero, and (when
  /// `weighted`) sigma inside the polygon's weight window.
  void validate(const Polygon& p, bool weighted = false) const;
};

/// Quadrature policy for the nonlocal matrix.
struct ThetaPolicy {
  int threads = 1;
  /// Gauss orders on separated pairs keyed by distance / longer length:
  /// > 4, in (1, 4], and <= 1.
  std::array<int, 3> separated_orders{4, 8, 12};
  /// Order of the angular rule on adjacent pairs.
  int adjacent_order = 12;
  /// When positive, separated pairs are re-integrated at doubled order and
  /// the assembly fails if any block changes by more than this relative amount.
  double tolerance = 0.0;
};

/// P1 element stiffness of triangle (a, b, c).
Eigen::Matrix3d local_stiffness(const Point& a, const Point& b, const Point& c);

SparseMatrix bulk_stiffness(const Mesh& m);
SparseMatrix bulk_mass(const Mesh& m);
/// Arc-length stiffness along the closed boundary polyline.
SparseMatrix boundary_stiffness(const BoundaryMesh& bm);
SparseMatrix boundary_mass(const BoundaryMesh& bm, const BoundaryCoefficient& b);

/// Dense Galerkin matrix of the Gagliardo form with kernel |x - y|^{-1-2s}.
DenseMatrix nonlocal_matrix(const BoundaryMesh& bm, double s, const ThetaPolicy& policy = {});

enum class PairKind { identical, adjacent, separated };
PairKind classify_pair(const BoundaryMesh& bm, std::size_t a, std::size_t b);

/// Contribution C(S, T) = int_S int_T w w^T |x-y|^{-1-2s} of one ordered
/// segment pair, over the local nodes returned in `nodes`
/// (S's nodes first, then T's nodes not already present).
DenseMatrix theta_pair_block(const BoundaryMesh& bm, std::size_t a, std::size_t b, double s,
                             std::vector<int>& nodes, const ThetaPolicy& policy = {});

Vector load_vector(const Mesh& m, const BoundaryMesh& bm, const ScalarField& f, const BoundarySource& g);

/// Assembled operator E_h = A_bulk + embed(A_bdry + M_b + Theta) and load.
struct DiscreteSystem {
  SparseMatrix bulk;
  SparseMatrix bdry_stiffness;
  SparseMatrix bdry_mass;
  DenseMatrix theta;
  Vector load;
  std::vector<int> bdry_nodes;       // boundary-local -> global
  std::vector<int> global_to_local;  // global -> boundary-local or -1
  bool coercive = false;             // b >= 0 and b not identically zero

  std::size_t size() const noexcept { return static_cast<std::size_t>(bulk.rows()); }
  std::size_t boundary_size() const noexcept { return bdry_nodes.size(); }
  Vector apply(const Vector& u) const;
  Vector diagonal() const;
  DenseMatrix dense() const;
  Vector restrict_to_boundary(const Vector& u) const;
  Vector embed_boundary(const Vector& ub) const;
};

DiscreteSystem assemble_system(const Mesh& m, const BoundaryMesh& bm, const ProblemSpec& spec,
                               const ThetaPolicy& policy = {});

}  // namespace venttsel
