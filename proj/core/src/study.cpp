#include "venttsel/study.hpp"

#include "venttsel/analysis.hpp"
#include "venttsel/quadrature.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>
#include <sstream>

namespace venttsel {

namespace {

// Constant gradients of the three barycentric coordinates.
std::array<Point, 3> basis_gradients(const Point& a, const Point& b, const Point& c) {
  const double area2 = cross(b - a, c - a);
  auto g = [area2](const Point& e) { return Point(-e.y() / area2, e.x() / area2); };
  return {g(c - b), g(a - c), g(b - a)};
}

std::vector<Point> element_gradients(const Mesh& m, const Vector& u) {
  std::vector<Point> out(m.triangle_count());
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    const auto g = basis_gradients(m.nodes[static_cast<std::size_t>(tri[0])], m.nodes[static_cast<std::size_t>(tri[1])],
                                   m.nodes[static_cast<std::size_t>(tri[2])]);
    out[t] = u[tri[0]] * g[0] + u[tri[1]] * g[1] + u[tri[2]] * g[2];
  }
  return out;
}

ErrorSet finish(double l2b, double semib, double l2s, double semis) {
  ErrorSet e;
  e.l2_bulk = std::sqrt(l2b);
  e.h1_bulk = std::sqrt(l2b + semib);
  e.l2_bdry = std::sqrt(l2s);
  e.h1_bdry = std::sqrt(l2s + semis);
  e.v1 = std::sqrt(semib + semis + l2s);
  return e;
}

// Coarse boundary trace lookup by side and arclength along the side.
class TraceSampler {
 public:
  TraceSampler(const BoundaryMesh& bm, const Polygon& p) : bm_(bm), p_(p), by_side_(p.size()) {
    for (std::size_t k = 0; k < bm.segments.size(); ++k) {
      const auto& seg = bm.segments[k];
      const auto side = static_cast<std::size_t>(seg.side);
      const double t0 = (bm.points[static_cast<std::size_t>(seg.local[0])] - p.vertex(side)).dot(p.side_tangent(side));
      by_side_[side].push_back({t0, k});
    }
    for (auto& v : by_side_) std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  // (value, tangential derivative) of the coarse trace at x on `side`.
  std::pair<double, double> sample(const Vector& ub, const Point& x, int side) const {
    const auto k = static_cast<std::size_t>(side);
    const double t = (x - p_.vertex(k)).dot(p_.side_tangent(k));
    const auto& list = by_side_[k];
    auto it = std::upper_bound(list.begin(), list.end(), t, [](double v, const auto& e) { return v < e.first; });
    const std::size_t idx = it == list.begin() ? 0 : static_cast<std::size_t>(it - list.begin() - 1);
    const auto& seg = bm_.segments[list[idx].second];
    const double xi = std::clamp((t - list[idx].first) / seg.length, 0.0, 1.0);
    const double u0 = ub[seg.local[0]], u1 = ub[seg.local[1]];
    return {(1.0 - xi) * u0 + xi * u1, (u1 - u0) / seg.length};
  }

 private:
  const BoundaryMesh& bm_;
  const Polygon& p_;
  std::vector<std::vector<std::pair<double, std::size_t>>> by_side_;
};

std::string polygon_text(const Polygon& p) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << "[" << p.vertex(i).x() << ", " << p.vertex(i).y() << "]";
  os << "]";
  return os.str();
}

std::string coefficient_text(const BoundaryCoefficient& b) {
  if (b.callable) return "callable";
  std::ostringstream os;
  os.precision(17);
  if (b.per_side.size() == 1) {
    os << b.per_side[0];
  } else {
    os << "[";
    for (std::size_t i = 0; i < b.per_side.size(); ++i) os << (i ? ", " : "") << b.per_side[i];
    os << "]";
  }
  return os.str();
}

Solution solve_level(const FemSpace& sp, const ProblemSpec& spec, const StudyOptions& options) {
  const DiscreteSystem sys = assemble_system(sp.mesh(), sp.boundary(), spec, options.theta);
  return solve(sys, options.solver);
}

StudyRow base_row(int level, const FemSpace& sp, const Solution& sol, double seconds) {
  StudyRow r;
  r.level = level;
  r.h = sp.mesh().h_target;
  r.unknowns = sp.size();
  r.boundary_nodes = sp.boundary().size();
  r.iterations = sol.report.iterations;
  r.seconds = seconds;
  r.bdry_h2_diag = boundary_h2_diagnostic(sp.trace(sol.u), sp.boundary());
  return r;
}

void fill_errors(StudyRow& r, const ErrorSet& e) {
  r.err_l2_bulk = e.l2_bulk;
  r.err_h1_bulk = e.h1_bulk;
  r.err_l2_bdry = e.l2_bdry;
  r.err_h1_bdry = e.h1_bdry;
  r.err_v1 = e.v1;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ErrorSet errors_vs_exact(const FemSpace& space, const Vector& u, const ExactSolution& ex) {
  const Mesh& m = space.mesh();
  if (static_cast<std::size_t>(u.size()) != m.node_count()) throw Error("field.size", "field length differs from the node count");
  const quad::RuleTriangle& rule = quad::triangle_collapsed(4);
  const std::vector<Point> grads = element_gradients(m, u);
  double l2b = 0.0, semib = 0.0;
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    const Point& a = m.nodes[static_cast<std::size_t>(tri[0])];
    const Point& b = m.nodes[static_cast<std::size_t>(tri[1])];
    const Point& c = m.nodes[static_cast<std::size_t>(tri[2])];
    const double area2 = 2.0 * quad::triangle_area(a, b, c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point& r = rule.points[q];
      const Point x = quad::map_triangle(r, a, b, c);
      const double uh = (1.0 - r.x() - r.y()) * u[tri[0]] + r.x() * u[tri[1]] + r.y() * u[tri[2]];
      const double w = rule.weights[q] * area2;
      const double d = uh - ex.u(x);
      l2b += w * d * d;
      semib += w * (grads[t] - ex.grad(x)).squaredNorm();
    }
  }
  const BoundaryMesh& bm = space.boundary();
  const quad::Rule1D& g = quad::gauss_legendre(8);
  double l2s = 0.0, semis = 0.0;
  for (const auto& seg : bm.segments) {
    const Point& p0 = bm.points[static_cast<std::size_t>(seg.local[0])];
    const Point& p1 = bm.points[static_cast<std::size_t>(seg.local[1])];
    const double u0 = u[seg.global[0]], u1 = u[seg.global[1]];
    const Point tau = (p1 - p0) / seg.length;
    const double duh = (u1 - u0) / seg.length;
    for (std::size_t q = 0; q < g.size(); ++q) {
      const double xi = g.points[q];
      const Point x = p0 + xi * (p1 - p0);
      const double w = g.weights[q] * seg.length;
      const double d = (1.0 - xi) * u0 + xi * u1 - ex.u(x);
      const double dt = duh - ex.grad(x).dot(tau);
      l2s += w * d * d;
      semis += w * dt * dt;
    }
  }
  return finish(l2b, semib, l2s, semis);
}

ErrorSet errors_vs_reference(const FemSpace& coarse, const Vector& u, const FemSpace& fine, const Vector& ref) {
  const Mesh& mc = coarse.mesh();
  const Mesh& mf = fine.mesh();
  if (static_cast<std::size_t>(u.size()) != mc.node_count() || static_cast<std::size_t>(ref.size()) != mf.node_count()) {
    throw Error("field.size", "field length differs from the node count");
  }
  const PointLocator locator(mc);
  const std::vector<Point> gc = element_gradients(mc, u);
  const std::vector<Point> gf = element_gradients(mf, ref);
  const quad::RuleTriangle& rule = quad::triangle_collapsed(3);
  double l2b = 0.0, semib = 0.0;
  for (std::size_t t = 0; t < mf.triangle_count(); ++t) {
    const auto& tri = mf.triangles[t];
    const Point& a = mf.nodes[static_cast<std::size_t>(tri[0])];
    const Point& b = mf.nodes[static_cast<std::size_t>(tri[1])];
    const Point& c = mf.nodes[static_cast<std::size_t>(tri[2])];
    const double area2 = 2.0 * quad::triangle_area(a, b, c);
    const Point centroid = (a + b + c) / 3.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point& r = rule.points[q];
      const Point x = quad::map_triangle(r, a, b, c);
      auto hit = locator.locate(x);
      if (!hit) hit = locator.locate(centroid);
      if (!hit) throw Error("mesh.locate", "reference quadrature point outside the coarse mesh");
      const int ct = hit->first;
      const auto& ctri = mc.triangles[static_cast<std::size_t>(ct)];
      // linear extension from the located triangle, so the centroid fallback stays consistent
      const Point& ca = mc.nodes[static_cast<std::size_t>(ctri[0])];
      const double uc = u[ctri[0]] + gc[static_cast<std::size_t>(ct)].dot(x - ca);
      const double uf = (1.0 - r.x() - r.y()) * ref[tri[0]] + r.x() * ref[tri[1]] + r.y() * ref[tri[2]];
      const double w = rule.weights[q] * area2;
      l2b += w * (uc - uf) * (uc - uf);
      semib += w * (gc[static_cast<std::size_t>(ct)] - gf[t]).squaredNorm();
    }
  }
  const BoundaryMesh& bf = fine.boundary();
  const TraceSampler sampler(coarse.boundary(), mc.polygon);
  const Vector ub = coarse.trace(u);
  const quad::Rule1D& g = quad::gauss_legendre(4);
  double l2s = 0.0, semis = 0.0;
  for (const auto& seg : bf.segments) {
    const Point& p0 = bf.points[static_cast<std::size_t>(seg.local[0])];
    const Point& p1 = bf.points[static_cast<std::size_t>(seg.local[1])];
    const double f0 = ref[seg.global[0]], f1 = ref[seg.global[1]];
    const double dfh = (f1 - f0) / seg.length;
    for (std::size_t q = 0; q < g.size(); ++q) {
      const double xi = g.points[q];
      const Point x = p0 + xi * (p1 - p0);
      const auto [vc, dc] = sampler.sample(ub, x, seg.side);
      const double w = g.weights[q] * seg.length;
      const double d = vc - ((1.0 - xi) * f0 + xi * f1);
      l2s += w * d * d;
      semis += w * (dc - dfh) * (dc - dfh);
    }
  }
  return finish(l2b, semib, l2s, semis);
}

Mesh study_mesh(const Polygon& p, double h0, double q, int level) {
  if (q == 1.0) {
    Mesh m = triangulate(p, h0, 1.0);
    for (int k = 0; k < level; ++k) m = refine(m);
    return m;
  }
  return triangulate(p, h0 / std::pow(2.0, level), q);
}

namespace {

// Level meshes built incrementally: uniform refinement reuses the previous level.
class MeshSequence {
 public:
  MeshSequence(const Polygon& p, double h0, double q) : p_(p), h0_(h0), q_(q) {}
  Mesh next() {
    if (q_ == 1.0) {
      last_ = level_ == 0 ? triangulate(p_, h0_, 1.0) : refine(last_);
    } else {
      last_ = triangulate(p_, h0_ / std::pow(2.0, level_), q_);
    }
    ++level_;
    return last_;
  }

 private:
  const Polygon& p_;
  double h0_, q_;
  int level_ = 0;
  Mesh last_;
};

void check_levels(const StudyOptions& o) {
  if (o.levels < 3) throw Error("study.levels", "convergence studies need at least 3 levels");
}

}  // namespace

ConvergenceTable convergence_study(const ManufacturedProblem& prob, const StudyOptions& options) {
  check_levels(options);
  ConvergenceTable table;
  table.problem = prob.preset;
  table.polygon = polygon_text(prob.polygon);
  table.s = prob.spec.s;
  table.b = coefficient_text(prob.spec.b);
  table.sigma = options.sigma;
  table.grading = options.grading;

  MeshSequence seq(prob.polygon, options.h0, options.grading);
  const double gnorm = data_norm_g(prob);
  double fnorm = 0.0;
  for (int k = 0; k < options.levels; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const FemSpace sp(seq.next());
    if (k == 0) fnorm = data_norm_f(prob, sp.mesh());
    const ProblemSpec spec = bind(prob, sp.boundary(), options.route);
    const Solution sol = solve_level(sp, spec, options);
    StudyRow row = base_row(k, sp, sol, elapsed(t0));
    fill_errors(row, errors_vs_exact(sp, sol.u, prob.exact));
    row.stability_ratio = stability_ratio(sp, sol.u, fnorm, gnorm);
    spdlog::info("{} level {}: h = {}, {} unknowns, H1 error {:.3e}, {} iterations, {:.2f} s", prob.preset, k, row.h,
                 row.unknowns, row.err_h1_bulk, row.iterations, row.seconds);
    if (options.on_level) options.on_level(k, sp, sol.u);
    table.rows.push_back(row);
  }
  return table;
}

ConvergenceTable benchmark_study(const Polygon& p, const ProblemSpec& spec, const StudyOptions& options,
                                 const std::string& name) {
  check_levels(options);
  if (options.reference_extra < 1) throw Error("study.reference", "the reference needs at least one extra level");
  spec.validate(p);
  ConvergenceTable table;
  table.problem = name;
  table.polygon = polygon_text(p);
  table.s = spec.s;
  table.b = coefficient_text(spec.b);
  table.sigma = options.sigma;
  table.grading = options.grading;
  table.reference = true;

  MeshSequence seq(p, options.h0, options.grading);
  std::vector<std::unique_ptr<FemSpace>> spaces;
  std::vector<Solution> sols;
  const double gnorm = 0.0;
  double fnorm = 0.0;
  for (int k = 0; k < options.levels; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    spaces.push_back(std::make_unique<FemSpace>(seq.next()));
    const FemSpace& sp = *spaces.back();
    if (k == 0) fnorm = weighted_l2(sp.mesh(), spec.f, 0.0);
    sols.push_back(solve_level(sp, spec, options));
    StudyRow row = base_row(k, sp, sols.back(), elapsed(t0));
    row.stability_ratio = stability_ratio(sp, sols.back().u, fnorm, gnorm);
    spdlog::info("{} level {}: h = {}, {} unknowns, {} iterations, {:.2f} s", name, k, row.h, row.unknowns, row.iterations,
                 row.seconds);
    if (options.on_level) options.on_level(k, sp, sols.back().u);
    table.rows.push_back(row);
  }

  const auto t0 = std::chrono::steady_clock::now();
  Mesh fine_mesh;
  if (options.grading == 1.0) {
    fine_mesh = spaces.back()->mesh();
    for (int k = 0; k < options.reference_extra; ++k) fine_mesh = refine(fine_mesh);
  } else {
    fine_mesh = study_mesh(p, options.h0, options.grading, options.levels - 1 + options.reference_extra);
  }
  const FemSpace fine(std::move(fine_mesh));
  const Solution ref = solve_level(fine, spec, options);
  spdlog::info("{} reference: {} unknowns, {} boundary nodes, {} iterations, {:.2f} s", name, fine.size(),
               fine.boundary().size(), ref.report.iterations, elapsed(t0));
  for (std::size_t k = 0; k < spaces.size(); ++k) {
    fill_errors(table.rows[k], errors_vs_reference(*spaces[k], sols[k].u, fine, ref.u));
  }
  return table;
}

std::vector<std::optional<double>> rate_estimate(const std::vector<double>& errors) {
  if (errors.size() < 2) throw Error("study.rows", "rates need at least two rows");
  std::vector<std::optional<double>> out;
  for (std::size_t k = 1; k < errors.size(); ++k) {
    if (errors[k] < 0.0 || errors[k - 1] < 0.0 || !std::isfinite(errors[k]) || !std::isfinite(errors[k - 1])) {
      throw Error("study.errors", "errors must be finite and nonnegative");
    }
    if (errors[k] == 0.0 || errors[k - 1] == 0.0) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(std::log2(errors[k - 1] / errors[k]));
    }
  }
  return out;
}

std::vector<double> column(const ConvergenceTable& t, const std::string& name) {
  std::vector<double> out;
  for (const auto& r : t.rows) {
    if (name == "err_l2_bulk") out.push_back(r.err_l2_bulk);
    else if (name == "err_h1_bulk") out.push_back(r.err_h1_bulk);
    else if (name == "err_l2_bdry") out.push_back(r.err_l2_bdry);
    else if (name == "err_h1_bdry") out.push_back(r.err_h1_bdry);
    else if (name == "err_v1") out.push_back(r.err_v1);
    else if (name == "bdry_h2_diag") out.push_back(r.bdry_h2_diag);
    else if (name == "stability_ratio") out.push_back(r.stability_ratio);
    else if (name == "h") out.push_back(r.h);
    else throw Error("study.column", "unknown column '" + name + "'");
  }
  return out;
}

std::vector<std::optional<double>> rate_estimate(const ConvergenceTable& t, const std::string& name) {
  return rate_estimate(column(t, name));
}

void write_csv(std::ostream& os, const ConvergenceTable& t) {
  os << kCsvHeader << '\n';
  char buf[512];
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%zu,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e\n", r.level, r.h, r.unknowns,
                  r.err_l2_bulk, r.err_h1_bulk, r.err_l2_bdry, r.err_h1_bdry, r.bdry_h2_diag, r.stability_ratio);
    os << buf;
  }
}

}  // namespace venttsel
