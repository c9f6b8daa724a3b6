#include "venttsel/app/commands.hpp"

#include "venttsel/analysis.hpp"
#include "venttsel/app/checks.hpp"
#include "venttsel/manufactured.hpp"
#include "venttsel/oracle.hpp"
#include "venttsel/singular.hpp"
#include "venttsel/study.hpp"

#include <spdlog/spdlog.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace venttsel::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Files go to a hidden sibling directory and are renamed into `out` only
// when the whole command succeeded.
class Staging {
 public:
  explicit Staging(fs::path out) : out_(std::move(out)) {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec || !fs::is_directory(out_)) {
      throw Error("output.directory", "cannot create output directory '" + out_.string() + "'");
    }
    dir_ = out_ / (".staging-" + std::to_string(::getpid()));
    fs::remove_all(dir_, ec);
    if (!fs::create_directory(dir_, ec) || ec) {
      throw Error("output.directory", "output directory '" + out_.string() + "' is not writable");
    }
  }
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;
  ~Staging() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (f) body(f);
    f.flush();
    if (!f) throw Error("output.write", "failed to write '" + name + "'");
    names_.push_back(name);
  }

  void write_json(const std::string& name, const json& j) {
    write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }

  std::vector<fs::path> commit() {
    std::vector<fs::path> out;
    for (const auto& n : names_) {
      std::error_code ec;
      fs::rename(dir_ / n, out_ / n, ec);
      if (ec) throw Error("output.rename", "cannot move '" + n + "' into '" + out_.string() + "': " + ec.message());
      out.push_back(out_ / n);
    }
    return out;
  }

 private:
  fs::path out_, dir_;
  std::vector<std::string> names_;
};

ThetaPolicy policy(const RunOptions& o) {
  ThetaPolicy p;
  p.threads = std::max(1, o.threads);
  return p;
}

ManufacturedProblem manufactured(const RunConfig& c) {
  ManufacturedProblem p = make_manufactured(c.problem, c.polygon, c.s, c.b);
  p.spec.sigma = c.sigma;
  return p;
}

ProblemSpec benchmark(const RunConfig& c) {
  ProblemSpec spec = benchmark_spec(c.s, c.b);
  spec.sigma = c.sigma;
  return spec;
}

// Finest mesh of the configured sequence.
Mesh finest_mesh(const RunConfig& c) { return study_mesh(c.polygon, c.mesh.h, c.grading(), c.mesh.levels - 1); }

json rates_json(const std::vector<std::optional<double>>& rates) {
  json a = json::array();
  for (const auto& r : rates) a.push_back(r ? json(*r) : json("exact"));
  return a;
}

json norms_json(const NormReport& n) {
  return {{"l2_bulk", n.l2_bulk},
          {"h1_bulk_semi", n.h1_bulk_semi},
          {"l2_bdry", n.l2_bdry},
          {"h1_bdry_semi", n.h1_bdry_semi},
          {"v1", n.v1},
          {"gagliardo_s", n.gagliardo_s},
          {"bdry_h2_diag", n.bdry_h2_diag},
          {"weighted_l2_sigma", n.weighted_l2_sigma},
          {"weighted_hess_diag", n.weighted_hess_diag}};
}

void write_norm_row(std::ostream& os, const NormReport& n) {
  os << "l2_bulk,h1_bulk_semi,l2_bdry,h1_bdry_semi,v1,gagliardo_s,bdry_h2_diag,weighted_l2_sigma,weighted_hess_diag\n";
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e\n", n.l2_bulk, n.h1_bulk_semi,
                n.l2_bdry, n.h1_bdry_semi, n.v1, n.gagliardo_s, n.bdry_h2_diag, n.weighted_l2_sigma,
                n.weighted_hess_diag);
  os << buf;
}

json header(const std::string& command, const RunConfig& c) {
  return {{"command", command}, {"config", to_json(c)}, {"warnings", c.warnings}};
}

RunResult run_solve(const RunConfig& c, const RunOptions& o, Staging& out) {
  const FemSpace sp(finest_mesh(c));
  std::optional<ManufacturedProblem> prob;
  ProblemSpec spec;
  if (c.is_benchmark()) {
    spec = benchmark(c);
  } else {
    prob = manufactured(c);
    spec = bind(*prob, sp.boundary());
  }
  const DiscreteSystem sys = assemble_system(sp.mesh(), sp.boundary(), spec, policy(o));
  const Solution sol = solve(sys, c.solver);
  const NormReport norms = norm_report(sp, sol.u, &sys.theta, c.sigma);

  json j = header("solve", c);
  j["unknowns"] = sp.size();
  j["boundary_nodes"] = sp.boundary().size();
  j["triangles"] = sp.mesh().triangle_count();
  j["h"] = sp.mesh().h_target;
  j["solver"] = {{"method", sol.report.method},
                 {"iterations", sol.report.iterations},
                 {"relative_residual", sol.report.relative_residual},
                 {"solve_seconds", sol.report.solve_seconds},
                 {"tol", c.solver.tol}};
  if (sp.size() <= 1500) j["solver"]["lambda_min"] = min_eigenvalue(sys);
  j["norms"] = norms_json(norms);

  double fnorm = 0.0, gnorm = 0.0;
  if (prob) {
    fnorm = data_norm_f(*prob, sp.mesh());
    gnorm = data_norm_g(*prob);
    const Vector exact = sp.interpolate(prob->exact.u);
    const ErrorSet e = errors_vs_exact(sp, sol.u, prob->exact);
    j["max_error"] = (sol.u - exact).cwiseAbs().maxCoeff();
    j["errors"] = {{"l2_bulk", e.l2_bulk}, {"h1_bulk", e.h1_bulk}, {"l2_bdry", e.l2_bdry}, {"h1_bdry", e.h1_bdry},
                   {"v1", e.v1}};
  } else {
    fnorm = weighted_l2(sp.mesh(), spec.f, 0.0);
  }
  j["stability_ratio"] = stability_ratio(sp, sol.u, fnorm, gnorm);

  out.write("solution.txt", [&](std::ostream& os) { write_field(os, sp.mesh(), sol.u); });
  if (c.dump_fields) out.write("mesh.txt", [&](std::ostream& os) { write_mesh(os, sp.mesh()); });
  out.write("norms.csv", [&](std::ostream& os) { write_norm_row(os, norms); });
  out.write_json("solve.json", j);
  return {0, {}, j};
}

RunResult run_converge(const RunConfig& c, const RunOptions& o, Staging& out) {
  StudyOptions so;
  so.h0 = c.mesh.h;
  so.levels = c.mesh.levels;
  so.grading = c.grading();
  so.reference_extra = c.mesh.reference_levels;
  so.sigma = c.sigma;
  so.solver = c.solver;
  so.theta = policy(o);
  if (c.dump_fields) {
    so.on_level = [&out](int k, const FemSpace& sp, const Vector& u) {
      out.write("level_" + std::to_string(k) + ".txt", [&](std::ostream& os) { write_field(os, sp.mesh(), u); });
    };
  }
  const ConvergenceTable t =
      c.is_benchmark() ? benchmark_study(c.polygon, benchmark(c), so, "benchmark") : convergence_study(manufactured(c), so);

  json j = header("converge", c);
  j["problem"] = t.problem;
  j["polygon"] = t.polygon;
  j["s"] = t.s;
  j["b"] = t.b;
  j["sigma"] = t.sigma;
  j["grading"] = t.grading;
  j["reference"] = t.reference ? "fine-grid solution" : "exact solution";
  j["levels"] = t.rows.size();
  json rates, last;
  for (const auto& [key, col] : std::map<std::string, std::string>{{"l2_bulk", "err_l2_bulk"},
                                                                   {"h1_bulk", "err_h1_bulk"},
                                                                   {"l2_bdry", "err_l2_bdry"},
                                                                   {"h1_bdry", "err_h1_bdry"},
                                                                   {"v1", "err_v1"}}) {
    const auto r = rate_estimate(t, col);
    rates[key] = rates_json(r);
    last[key] = r.back() ? json(*r.back()) : json("exact");
  }
  j["rates"] = rates;
  j["final_rates"] = last;
  j["stability_ratio"] = column(t, "stability_ratio");
  j["bdry_h2_diag"] = column(t, "bdry_h2_diag");

  out.write("convergence.csv", [&](std::ostream& os) { write_csv(os, t); });
  out.write_json("rates.json", j);
  return {0, {}, j};
}

RunResult run_decompose(const RunConfig& c, const RunOptions& o, Staging& out) {
  const FemSpace sp(finest_mesh(c));
  const ProblemSpec spec = c.is_benchmark() ? benchmark(c) : bind(manufactured(c), sp.boundary());
  const DiscreteSystem sys = assemble_system(sp.mesh(), sp.boundary(), spec, policy(o));
  const Solution sol = solve(sys, c.solver);
  const Decomposition d = decompose(sp.mesh(), sol.u);
  const Vector back = reconstruct(sp.mesh(), d);

  json corners = json::array();
  for (const auto& t : d.terms) {
    corners.push_back({{"j", t.corner_index},
                       {"corner", {t.corner.x(), t.corner.y()}},
                       {"alpha", t.alpha},
                       {"lambda", t.lambda},
                       {"cutoff_radius", t.cutoff_radius},
                       {"c", t.coefficient.value_or(0.0)}});
  }
  json j = header("decompose", c);
  j["unknowns"] = sp.size();
  j["h"] = sp.mesh().h_target;
  j["corners"] = corners;
  j["reconstruction_error"] = (back - sol.u).cwiseAbs().maxCoeff();
  j["hessian_diag"] = {{"u", weighted_hessian_diagnostic(sp, sol.u, 0.0)},
                       {"w", weighted_hessian_diagnostic(sp, d.regular, 0.0)},
                       {"sigma", c.sigma},
                       {"u_sigma", weighted_hessian_diagnostic(sp, sol.u, c.sigma)},
                       {"w_sigma", weighted_hessian_diagnostic(sp, d.regular, c.sigma)}};

  out.write("regular.txt", [&](std::ostream& os) { write_field(os, sp.mesh(), d.regular); });
  if (c.dump_fields) out.write("solution.txt", [&](std::ostream& os) { write_field(os, sp.mesh(), sol.u); });
  out.write_json("decomposition.json", j);
  return {0, {}, j};
}

CheckResult at_most(std::string name, double value, double limit, std::string detail = {}) {
  return {std::move(name), value <= limit, value, limit, std::move(detail)};
}

double max_rel(const DenseMatrix& a, const DenseMatrix& ref, double floor) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::abs(a(i, j) - ref(i, j)) / std::max(std::abs(ref(i, j)), floor));
    }
  }
  return worst;
}

// Coarse polyline through the vertices, plus side midpoints while the
// segment count stays within the oracle's desk scale.
BoundaryMesh coarse_boundary(const Polygon& p) {
  std::vector<Point> pts;
  const bool mid = 2 * p.size() <= 8;
  for (std::size_t k = 0; k < p.size(); ++k) {
    pts.push_back(p.vertex(k));
    if (mid) pts.push_back(0.5 * (p.vertex(k) + p.vertex(k + 1)));
  }
  return BoundaryMesh::from_polyline(pts);
}

RunResult run_check(const RunConfig& c, const RunOptions& o, Staging& out) {
  const ThetaPolicy pol = policy(o);
  std::vector<CheckResult> results;
  const std::string tag = "s=" + std::to_string(c.s);

  const FemSpace coarse(triangulate(c.polygon, c.mesh.h, c.grading()));
  const FemSpace fine(refine(coarse.mesh()));
  const BoundaryMesh& bm = coarse.boundary();

  const DenseMatrix theta = nonlocal_matrix(bm, c.s, pol);
  const double tmax = theta.cwiseAbs().maxCoeff();
  results.push_back(at_most("theta.symmetry", (theta - theta.transpose()).cwiseAbs().maxCoeff() / tmax, 1e-12, tag));
  results.push_back(at_most("theta.constants", (theta * Vector::Ones(theta.cols())).cwiseAbs().maxCoeff(), 1e-10, tag));
  if (bm.size() <= 512) {
    const Eigen::SelfAdjointEigenSolver<DenseMatrix> es(theta, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    results.push_back({"theta.psd", es.eigenvalues().minCoeff() >= -1e-10 * lmax, es.eigenvalues().minCoeff() / lmax,
                       -1e-10, "lambda_min / lambda_max"});
  }
  for (const double t : {0.5, 3.0}) {
    std::vector<Point> pts;
    std::vector<int> sides;
    for (std::size_t k = 0; k < bm.size(); ++k) pts.push_back(t * bm.points[k]);
    for (const auto& seg : bm.segments) sides.push_back(seg.side);
    const DenseMatrix scaled = nonlocal_matrix(BoundaryMesh::from_polyline(pts, sides), c.s, pol);
    const DenseMatrix expect = std::pow(t, 1.0 - 2.0 * c.s) * theta;
    results.push_back(at_most("theta.scaling", max_rel(scaled, expect, 1e-10 * tmax), 1e-8, "t=" + std::to_string(t)));
  }
  if (c.check.oracle && c.polygon.size() <= 8) {
    const BoundaryMesh small = coarse_boundary(c.polygon);
    const DenseMatrix a = nonlocal_matrix(small, c.s, pol);
    const DenseMatrix ref = theta_oracle_matrix(small, c.s, 1e-10);
    results.push_back(at_most("theta.oracle", max_rel(a, ref, 1e-10), 1e-6,
                              std::to_string(small.size()) + " segments, relative with 1e-10 floor"));
  }

  ProblemSpec spec = benchmark(c);
  if (coarse.size() <= 4000 && bm.size() <= 512) {
    const DiscreteSystem sys = assemble_system(coarse.mesh(), bm, spec, pol);
    const double lmin = min_eigenvalue(sys);
    results.push_back({"coercivity.lambda_min", lmin > 0.0, lmin, 0.0, "configured b"});
    ProblemSpec free = spec;
    free.b = BoundaryCoefficient::constant(0.0);
    const EigenPair ep = min_eigenpair(assemble_system(coarse.mesh(), bm, free, pol));
    const Vector ones = Vector::Ones(ep.vector.size());
    const double cosine = std::abs(ep.vector.dot(ones)) / (ep.vector.norm() * ones.norm());
    results.push_back(at_most("coercivity.kernel", std::abs(ep.value), 1e-10, "b = 0"));
    results.push_back({"coercivity.kernel_vector", cosine >= 1.0 - 1e-8, cosine, 1.0 - 1e-8, "cosine with constants"});
  }

  const double f1 = max_friedrichs_ratio(coarse, c.check.fields, c.seed);
  const double f2 = max_friedrichs_ratio(fine, c.check.fields, c.seed);
  results.push_back(at_most("friedrichs.drift", std::abs(f2 - f1) / f1, 0.5,
                            "max ratio " + std::to_string(f1) + " -> " + std::to_string(f2)));

  const Extremes e1 = rayleigh_extremes(coarse, assemble_system(coarse.mesh(), bm, spec, pol), c.check.fields, c.seed);
  const Extremes e2 =
      rayleigh_extremes(fine, assemble_system(fine.mesh(), fine.boundary(), spec, pol), c.check.fields, c.seed);
  const double drift = std::max({e1.min / e2.min, e2.min / e1.min, e1.max / e2.max, e2.max / e1.max});
  results.push_back({"rayleigh.equivalence", e1.min > 0.0 && e2.min > 0.0 && drift < 2.0, drift, 2.0,
                     "c1 " + std::to_string(e1.min) + " -> " + std::to_string(e2.min) + ", c2 " +
                         std::to_string(e1.max) + " -> " + std::to_string(e2.max)});

  bool passed = true;
  json list = json::array();
  for (const auto& r : results) {
    passed = passed && r.pass;
    list.push_back(to_json(r));
    spdlog::info("{} {}: {:.3e} (limit {:.3e}) {}", r.pass ? "pass" : "FAIL", r.name, r.value, r.limit, r.detail);
  }
  json j = header("check", c);
  j["checks"] = list;
  j["passed"] = passed;
  j["seed"] = c.seed;
  out.write_json("check.json", j);
  return {passed ? 0 : kExitCheckFailed, {}, j};
}

}  // namespace

std::vector<std::string> command_names() { return {"solve", "converge", "decompose", "check"}; }

json error_json(const std::string& rule, const std::string& message) {
  return {{"error", {{"rule", rule}, {"message", message}}}};
}

RunResult run_command(const std::string& command, const RunConfig& config, const RunOptions& options) {
  using Runner = RunResult (*)(const RunConfig&, const RunOptions&, Staging&);
  static const std::map<std::string, Runner> runners{
      {"solve", run_solve}, {"converge", run_converge}, {"decompose", run_decompose}, {"check", run_check}};
  const auto it = runners.find(command);
  if (it == runners.end()) throw Error("cli.command", "unknown command '" + command + "'");
  Staging staging(options.out.empty() ? config.output_dir : options.out);
  RunResult r = it->second(config, options, staging);
  r.files = staging.commit();
  return r;
}

}  // namespace venttsel::app
