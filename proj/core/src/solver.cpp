#include "venttsel/solver.hpp"

#include "venttsel/analysis.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <functional>

namespace venttsel {

namespace {

constexpr const char* kIndefinite =
    "negative curvature in conjugate gradients: the operator is not positive definite, "
    "which requires b >= 0 and b not identically 0";

struct PcgResult {
  Vector x;
  long iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> history;
};

PcgResult pcg(const std::function<Vector(const Vector&)>& apply, const Vector& diag, const Vector& rhs, double tol,
              long maxit) {
  PcgResult res;
  const Eigen::Index n = rhs.size();
  res.x = Vector::Zero(n);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return res;
  const Vector inv = diag.cwiseInverse();
  Vector r = rhs;
  // target for the recursive residual, tightened when it drifts from the true one
  double target = tol;
  for (int restart = 0; restart < 4; ++restart) {
    Vector z = inv.cwiseProduct(r);
    Vector p = z;
    double rz = r.dot(z);
    double rel = r.norm() / bnorm;
    res.history.push_back(rel);
    while (rel > target) {
      if (res.iterations >= maxit) {
        throw SolveError("conjugate gradients did not converge within " + std::to_string(maxit) +
                             " iterations (relative residual " + std::to_string(rel) + ")",
                         res.history);
      }
      const Vector ap = apply(p);
      const double pap = p.dot(ap);
      if (!(pap > 0.0)) throw Error("coercivity.b", kIndefinite);
      const double alpha = rz / pap;
      res.x.noalias() += alpha * p;
      r.noalias() -= alpha * ap;
      z = inv.cwiseProduct(r);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
      rel = r.norm() / bnorm;
      res.history.push_back(rel);
      ++res.iterations;
    }
    // Guard against drift of the recursive residual.
    r = rhs - apply(res.x);
    res.relative_residual = r.norm() / bnorm;
    spdlog::debug("pcg: true relative residual {:.3e} after {} iterations", res.relative_residual, res.iterations);
    if (res.relative_residual <= tol) return res;
    target = std::max(target * std::min(0.5, rel / res.relative_residual), 1e-3 * tol);
  }
  throw SolveError("conjugate gradients stalled above the requested tolerance", res.history);
}

}  // namespace

Solution solve(const DiscreteSystem& sys, const SolveOptions& options) { return solve(sys, sys.load, options); }

Solution solve(const DiscreteSystem& sys, const Vector& rhs, const SolveOptions& options) {
  if (!sys.coercive) {
    throw Error("coercivity.b", "coefficient b must satisfy b >= 0 and b not identically 0; the system is singular");
  }
  if (!(options.tol > 0.0)) throw Error("solver.tol", "solver tolerance must be positive");
  const long maxit = options.maxit > 0 ? options.maxit : 10 * static_cast<long>(sys.size());
  const auto t0 = std::chrono::steady_clock::now();
  PcgResult res = pcg([&](const Vector& v) { return sys.apply(v); }, sys.diagonal(), rhs, options.tol, maxit);
  const auto t1 = std::chrono::steady_clock::now();
  Solution out;
  out.u = std::move(res.x);
  out.report.iterations = res.iterations;
  out.report.relative_residual = res.relative_residual;
  out.report.solve_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.report.residual_history = std::move(res.history);
  spdlog::debug("pcg: {} iterations, relative residual {:.3e}", out.report.iterations, out.report.relative_residual);
  return out;
}

Vector solve_dense(const DiscreteSystem& sys, const Vector& rhs) {
  if (sys.size() > 2000) throw Error("solver.dense_cap", "dense solve is limited to 2000 unknowns");
  const Eigen::LDLT<DenseMatrix> ldlt(sys.dense());
  if (ldlt.info() != Eigen::Success) throw Error("solver.dense", "dense factorization failed");
  return ldlt.solve(rhs);
}

EigenPair min_eigenpair(const DiscreteSystem& sys) {
  if (sys.boundary_size() > 512) {
    throw Error("eigen.size_cap", "smallest-eigenvalue computation is limited to 512 boundary nodes");
  }
  EigenPair out;
  if (sys.size() <= 4000) {
    const Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sys.dense());
    if (es.info() != Eigen::Success) throw Error("eigen.failed", "symmetric eigensolve failed");
    out.value = es.eigenvalues()[0];
    out.vector = es.eigenvectors().col(0);
    return out;
  }
  // Shifted inverse iteration; the small shift keeps the singular b = 0 case solvable.
  const Vector diag = sys.diagonal();
  const double mu = 1e-8 * diag.maxCoeff();
  const auto shifted = [&](const Vector& v) -> Vector { return sys.apply(v) + mu * v; };
  const Vector dshift = diag.array() + mu;
  Vector v = Vector::Ones(static_cast<Eigen::Index>(sys.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 1e-3 * std::sin(1.0 + 7.0 * static_cast<double>(i));
  v.normalize();
  double lambda = v.dot(sys.apply(v));
  for (int it = 0; it < 100; ++it) {
    Vector w = pcg(shifted, dshift, v, 1e-12, 20 * static_cast<long>(sys.size())).x;
    w.normalize();
    const double next = w.dot(sys.apply(w));
    v = w;
    if (std::abs(next - lambda) <= 1e-12 * std::max(1.0, std::abs(next))) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  out.value = lambda;
  out.vector = v;
  return out;
}

double min_eigenvalue(const DiscreteSystem& sys) { return min_eigenpair(sys).value; }

double stability_ratio(const FemSpace& space, const Vector& u, double f_norm, double g_norm) {
  const double data = f_norm + g_norm;
  if (!(data > 0.0)) throw Error("stability.zero_data", "stability ratio is undefined for zero data");
  return v1_norm(space, u) / data;
}

}  // namespace venttsel
