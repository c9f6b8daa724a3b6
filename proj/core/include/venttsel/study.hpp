#pragma once

#include "venttsel/manufactured.hpp"
#include "venttsel/solver.hpp"
#include "venttsel/space.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace venttsel {

struct StudyRow {
  int level = 0;
  double h = 0.0;
  std::size_t unknowns = 0;
  double err_l2_bulk = 0.0;
  double err_h1_bulk = 0.0;
  double err_l2_bdry = 0.0;
  double err_h1_bdry = 0.0;
  double bdry_h2_diag = 0.0;
  double stability_ratio = 0.0;
  // not part of the CSV
  double err_v1 = 0.0;
  std::size_t boundary_nodes = 0;
  long iterations = 0;
  double seconds = 0.0;
};

struct ConvergenceTable {
  std::vector<StudyRow> rows;
  std::string problem;
  std::string polygon;  // vertex list as text
  double s = 0.0;
  std::string b;
  double sigma = 0.0;
  double grading = 1.0;
  bool reference = false;  // errors against a fine-grid solution
};

/// Errors of a P1 field in full H1 norms (L2 part included).
struct ErrorSet {
  double l2_bulk = 0.0, h1_bulk = 0.0, l2_bdry = 0.0, h1_bdry = 0.0, v1 = 0.0;
};

/// Per-element quadrature of (u_h - u_exact) and its gradients.
ErrorSet errors_vs_exact(const FemSpace& space, const Vector& u, const ExactSolution& ex);
/// Same against a P1 reference on a finer mesh: quadrature over the fine
/// triangles and segments, the coarse field sampled by point location.
ErrorSet errors_vs_reference(const FemSpace& coarse, const Vector& u, const FemSpace& fine, const Vector& ref);

struct StudyOptions {
  double h0 = 0.25;
  int levels = 4;
  /// 1 refines the level-0 mesh uniformly; q > 1 triangulates every level
  /// afresh at h0 / 2^k with this grading exponent.
  double grading = 1.0;
  int reference_extra = 2;  // benchmark reference: levels beyond the last
  double sigma = 0.0;       // recorded in the metadata only
  SolveOptions solver;
  ThetaPolicy theta;
  LoadRoute route = LoadRoute::automatic;
  /// Called after every level with the level index, space and solution.
  std::function<void(int, const FemSpace&, const Vector&)> on_level;
};

/// Mesh of level k: refine^k(triangulate(p, h0)) when q = 1, else
/// triangulate(p, h0 / 2^k, q).
Mesh study_mesh(const Polygon& p, double h0, double q, int level);

ConvergenceTable convergence_study(const ManufacturedProblem& prob, const StudyOptions& options);
/// Problem without exact solution; the reference lives reference_extra
/// levels beyond the last one.
ConvergenceTable benchmark_study(const Polygon& p, const ProblemSpec& spec, const StudyOptions& options,
                                 const std::string& name = "benchmark");

/// Per-step rates log2(e_{k-1} / e_k); nullopt marks an "exact" step
/// (zero error in a row).
std::vector<std::optional<double>> rate_estimate(const std::vector<double>& errors);
std::vector<std::optional<double>> rate_estimate(const ConvergenceTable& t, const std::string& column);
std::vector<double> column(const ConvergenceTable& t, const std::string& name);

inline constexpr const char* kCsvHeader =
    "level,h,unknowns,err_l2_bulk,err_h1_bulk,err_l2_bdry,err_h1_bdry,bdry_h2_diag,stability_ratio";
void write_csv(std::ostream& os, const ConvergenceTable& t);

}  // namespace venttsel
