#pragma once

#include "venttsel/assembly.hpp"
#include "venttsel/space.hpp"

#include <optional>
#include <vector>

namespace venttsel {

struct SolveOptions {
  double tol = 1e-10;
  long maxit = 0;  // 0 selects 10 * unknowns
};

struct SolveReport {
  long iterations = 0;
  double relative_residual = 0.0;
  double solve_seconds = 0.0;
  std::optional<double> lambda_min_estimate;
  std::vector<double> residual_history;
  std::string method = "pcg";
};

/// Thrown when CG stalls at maxit. Carries the relative residual history.
class SolveError : public Error {
 public:
  SolveError(const std::string& message, std::vector<double> history)
      : Error("solver.maxit", message), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

struct Solution {
  Vector u;
  SolveReport report;
};

/// Jacobi-preconditioned conjugate gradients on E_h u = load. Requires a
/// coercive system; negative curvature is reported as a violation of the
/// b >= 0, b not identically 0 hypothesis.
Solution solve(const DiscreteSystem& sys, const SolveOptions& options = {});
Solution solve(const DiscreteSystem& sys, const Vector& rhs, const SolveOptions& options = {});

/// Dense LDL^T solve for at most 2000 unknowns.
Vector solve_dense(const DiscreteSystem& sys, const Vector& rhs);

struct EigenPair {
  double value = 0.0;
  Vector vector;
};

/// Smallest eigenpair of E_h. At most 512 boundary nodes; dense symmetric
/// eigensolve up to 4000 unknowns, shifted inverse iteration beyond.
EigenPair min_eigenpair(const DiscreteSystem& sys);
double min_eigenvalue(const DiscreteSystem& sys);

/// ||u||_{V1,h} / (||f||_{L2(Omega)} + ||g||_{L2(boundary)}).
double stability_ratio(const FemSpace& space, const Vector& u, double f_norm, double g_norm);

}  // namespace venttsel
