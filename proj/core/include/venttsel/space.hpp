#pragma once

#include "venttsel/assembly.hpp"
#include "venttsel/mesh.hpp"

namespace venttsel {

/// P1 space on a mesh with its boundary partition and the unweighted
/// matrices the norms are built from. Immutable after construction.
class FemSpace {
 public:
  explicit FemSpace(Mesh mesh);

  const Mesh& mesh() const noexcept { return mesh_; }
  const Polygon& polygon() const noexcept { return mesh_.polygon; }
  const BoundaryMesh& boundary() const noexcept { return boundary_; }
  std::size_t size() const noexcept { return mesh_.node_count(); }

  const SparseMatrix& stiffness() const noexcept { return stiffness_; }
  const SparseMatrix& mass() const noexcept { return mass_; }
  const SparseMatrix& boundary_stiffness() const noexcept { return bdry_stiffness_; }
  /// Boundary mass with b = 1.
  const SparseMatrix& boundary_mass() const noexcept { return bdry_mass_; }

  Vector trace(const Vector& u) const;
  Vector interpolate(const ScalarField& fn) const;

 private:
  Mesh mesh_;
  BoundaryMesh boundary_;
  SparseMatrix stiffness_, mass_, bdry_stiffness_, bdry_mass_;
};

}  // namespace venttsel
