#include "venttsel/space.hpp"

namespace venttsel {

FemSpace::FemSpace(Mesh mesh) : mesh_(std::move(mesh)), boundary_(extract_boundary(mesh_)) {
  stiffness_ = bulk_stiffness(mesh_);
  mass_ = bulk_mass(mesh_);
  bdry_stiffness_ = venttsel::boundary_stiffness(boundary_);
  bdry_mass_ = venttsel::boundary_mass(boundary_, BoundaryCoefficient::constant(1.0));
}

Vector FemSpace::trace(const Vector& u) const {
  if (static_cast<std::size_t>(u.size()) != size()) throw Error("field.size", "field length differs from the node count");
  Vector ub(static_cast<Eigen::Index>(boundary_.size()));
  for (std::size_t k = 0; k < boundary_.size(); ++k) ub[static_cast<Eigen::Index>(k)] = u[boundary_.nodes[k]];
  return ub;
}

Vector FemSpace::interpolate(const ScalarField& fn) const {
  Vector u(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) u[static_cast<Eigen::Index>(i)] = fn(mesh_.nodes[i]);
  return u;
}

}  // namespace venttsel
