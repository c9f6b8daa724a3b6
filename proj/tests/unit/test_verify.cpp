#include "venttsel/oracle.hpp"
#include "venttsel/study.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <random>
#include <sstream>

using namespace venttsel;

namespace {

// Golub-Welsch nodes and weights on [0, 1].
std::pair<Vector, Vector> golub_welsch(int n) {
  DenseMatrix j = DenseMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  const Eigen::SelfAdjointEigenSolver<DenseMatrix> es(j);
  Vector x = 0.5 * (es.eigenvalues().array() + 1.0);
  Vector w = es.eigenvectors().row(0).transpose().array().square();
  return {x, w};
}

// -2 int_{supp i} int_{supp j} phi_i(x) phi_j(y) |x - y|^{-1-2s}: the Gram
// entry for hat functions with disjoint supports.
double disjoint_entry(const BoundaryMesh& bm, std::size_t i, std::size_t j, double s, int order) {
  const auto [gx, gw] = golub_welsch(order);
  auto pieces = [&](std::size_t node) {
    std::vector<std::pair<Point, Point>> out;  // (hat peak, far end) per segment
    for (const auto& seg : bm.segments) {
      if (static_cast<std::size_t>(seg.local[0]) == node) out.emplace_back(bm.points[node], bm.points[static_cast<std::size_t>(seg.local[1])]);
      if (static_cast<std::size_t>(seg.local[1]) == node) out.emplace_back(bm.points[node], bm.points[static_cast<std::size_t>(seg.local[0])]);
    }
    return out;
  };
  double sum = 0.0;
  for (const auto& [pi, qi] : pieces(i)) {
    for (const auto& [pj, qj] : pieces(j)) {
      const double li = (qi - pi).norm(), lj = (qj - pj).norm();
      for (int a = 0; a < order; ++a) {
        for (int b = 0; b < order; ++b) {
          const Point x = pi + gx[a] * (qi - pi), y = pj + gx[b] * (qj - pj);
          sum += gw[a] * gw[b] * li * lj * (1.0 - gx[a]) * (1.0 - gx[b]) * std::pow((x - y).norm(), -1.0 - 2.0 * s);
        }
      }
    }
  }
  return -2.0 * sum;
}

// Midpoint-rule Riemann sum of 2 int (u(x) - u(y)) |x - y|^{-1-2s} over the
// boundary of the unit square, n panels per side.
double riemann(const ScalarField& u, const Point& x, double s, int n) {
  const std::vector<Point> corners{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  double sum = 0.0;
  for (int side = 0; side < 4; ++side) {
    const Point a = corners[static_cast<std::size_t>(side)], b = corners[static_cast<std::size_t>((side + 1) % 4)];
    for (int k = 0; k < n; ++k) {
      const Point y = a + (k + 0.5) / n * (b - a);
      const double r = (x - y).norm();
      if (r == 0.0) continue;
      sum += (u(x) - u(y)) * std::pow(r, -1.0 - 2.0 * s) / n;
    }
  }
  return 2.0 * sum;
}

}  // namespace

TEST(PointwiseOracle, ConstantTraceIsZero) {
  const Polygon p = shapes::l_shape();
  for (double s : {0.25, 0.5, 0.7}) EXPECT_EQ(theta_pointwise_oracle(p, [](const Point&) { return 3.0; }, {1.5, 0.0}, s), 0.0);
}

TEST(PointwiseOracle, AntisymmetricTraceVanishes) {
  const Polygon p = build_polygon({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}});
  for (double s : {0.25, 0.5, 0.7}) {
    EXPECT_NEAR(theta_pointwise_oracle(p, [](const Point& y) { return y.x(); }, {0.0, 0.5}, s), 0.0, 1e-10);
  }
}

TEST(PointwiseOracle, SelfConsistentAndMatchesRiemannSum) {
  const Polygon p = shapes::unit_square();
  const ScalarField u = [](const Point& y) { return y.x(); };
  const Point x(1.0, 0.5);
  const double s = 0.25, tol = 1e-10;
  const double a = theta_pointwise_oracle(p, u, x, s, tol);
  const double b = theta_pointwise_oracle(p, u, x, s, tol / 10);
  EXPECT_LE(std::abs(a - b), 10 * tol * std::max(1.0, std::abs(a)));
  // halving the tolerance moves the value by at most the tolerance
  EXPECT_LE(std::abs(theta_pointwise_oracle(p, u, x, s, tol / 2) - a), tol * std::max(1.0, std::abs(a)));

  // the integrand is smooth on every side (it vanishes on the side through x),
  // so the midpoint sums converge at second order: Richardson on 200/400 panels
  const double r1 = riemann(u, x, s, 200), r2 = riemann(u, x, s, 400);
  const double extrapolated = (4.0 * r2 - r1) / 3.0;
  EXPECT_LE(testutil::rel_diff(a, extrapolated), 1e-4);
}

TEST(PointwiseOracle, CornerRejectedForLargeOrder) {
  const Polygon p = shapes::unit_square();
  EXPECT_THROW(theta_pointwise_oracle(p, [](const Point& y) { return y.x(); }, {1.0, 1.0}, 0.5), Error);
  EXPECT_NO_THROW(theta_pointwise_oracle(p, [](const Point& y) { return y.x(); }, {1.0, 1.0}, 0.25));
}

TEST(Manufactured, ConstantPresetData) {
  const ManufacturedProblem prob = make_manufactured("constant", shapes::l_shape(), 0.5, BoundaryCoefficient::constant(1.0));
  EXPECT_EQ(prob.exact.f({0.5, 0.5}), 0.0);
  EXPECT_NEAR(boundary_datum(prob, {0.5, 0.0}, 0), 1.0, 1e-14);
}

TEST(Manufactured, HarmonicHasZeroSource) {
  const ManufacturedProblem prob = make_manufactured("harmonic", shapes::unit_square(), 0.25, BoundaryCoefficient::constant(1.0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) EXPECT_EQ(prob.exact.f({u(rng), u(rng)}), 0.0);
  // Laplacian of the exact solution by its own Hessian
  const Eigen::Matrix2d h = prob.exact.hess({0.3, 0.8});
  EXPECT_NEAR(h.trace(), 0.0, 1e-14);
}

TEST(Manufactured, UnknownPresetRejected) {
  EXPECT_THROW(make_manufactured("quartic", shapes::unit_square(), 0.5, BoundaryCoefficient::constant(1.0)), Error);
}

TEST(Manufactured, CubicBoundaryIdentity) {
  const ManufacturedProblem prob = make_manufactured("cubic", shapes::unit_square(), 0.25, BoundaryCoefficient::constant(1.0));
  const Polygon& p = prob.polygon;
  const double h = 0.25;
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> side(0, 3);
  std::uniform_real_distribution<double> t(h, 1.0 - h);
  for (int k = 0; k < 50; ++k) {
    const int sd = side(rng);
    const Point x = p.vertex(static_cast<std::size_t>(sd)) +
                    t(rng) * (p.vertex(static_cast<std::size_t>(sd) + 1) - p.vertex(static_cast<std::size_t>(sd)));
    const double g = boundary_datum(prob, x, sd);
    EXPECT_LE(std::abs(boundary_identity_residual(prob, x, sd, g, prob.oracle_tol)), 2.0 * prob.oracle_tol * std::max(1.0, std::abs(g)));
  }
}

TEST(Manufactured, LoadRoutesAgree) {
  const ManufacturedProblem prob = make_manufactured("cubic", shapes::unit_square(), 0.25, BoundaryCoefficient::constant(1.0));
  const BoundaryMesh bm = extract_boundary(triangulate(prob.polygon, 0.5));
  const Vector pointwise = boundary_load(prob, bm, LoadRoute::pointwise);
  const Vector form = boundary_load(prob, bm, LoadRoute::form);
  EXPECT_LE((pointwise - form).cwiseAbs().maxCoeff(), 1e-6 * form.cwiseAbs().maxCoeff());
}

TEST(EntryOracle, DisjointSupportsAgainstTensorGauss) {
  const std::vector<Point> pts{{0, 0}, {0.5, 0}, {1, 0}, {1, 0.5}, {1, 1}, {0.5, 1}, {0, 1}, {0, 0.5}};
  const BoundaryMesh bm = BoundaryMesh::from_polyline(pts);
  for (auto [i, j] : {std::pair{0ul, 4ul}, std::pair{1ul, 5ul}, std::pair{2ul, 6ul}}) {
    const double oracle = theta_entry_oracle(bm, i, j, 0.5, 1e-12);
    EXPECT_LE(testutil::rel_diff(oracle, disjoint_entry(bm, i, j, 0.5, 16)), 1e-9) << i << "," << j;
  }
}

TEST(EntryOracle, RowSumsAndSymmetry) {
  const std::vector<Point> pts{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
  const BoundaryMesh bm = BoundaryMesh::from_polyline(pts);
  const double tol = 1e-10;
  const DenseMatrix o = theta_oracle_matrix(bm, 0.7, tol);
  const double scale = o.cwiseAbs().maxCoeff();
  EXPECT_LE(o.rowwise().sum().cwiseAbs().maxCoeff(), 10 * tol * scale);
  EXPECT_LE(std::abs(theta_entry_oracle(bm, 1, 3, 0.7, tol) - theta_entry_oracle(bm, 3, 1, 0.7, tol)),
            10 * tol * scale);
}

TEST(EntryOracle, AssemblyAgreement) {
  const std::vector<std::vector<Point>> boundaries{
      {{0, 0}, {1, 0}, {1, 1}, {0, 1}},
      {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}},
      {{0, 0}, {0.5, 0}, {1, 0}, {1, 0.5}, {1, 1}, {0.5, 1}, {0, 1}, {0, 0.5}}};
  for (const auto& pts : boundaries) {
    const BoundaryMesh bm = BoundaryMesh::from_polyline(pts);
    for (double s : {0.25, 0.5, 0.7}) {
      const DenseMatrix a = nonlocal_matrix(bm, s);
      const DenseMatrix o = theta_oracle_matrix(bm, s, 1e-10);
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
          EXPECT_LE(std::abs(a(i, j) - o(i, j)), 1e-6 * std::max(std::abs(o(i, j)), 1e-10 / 1e-6))
              << "s = " << s << " entry " << i << "," << j << " of " << bm.size();
    }
  }
}

TEST(EntryOracle, SizeCap) {
  const BoundaryMesh bm = extract_boundary(triangulate(shapes::unit_square(), 1.0 / 20));
  ASSERT_GT(bm.size(), 64u);
  EXPECT_THROW(theta_entry_oracle(bm, 0, 1, 0.5), Error);
}

TEST(Rates, Examples) {
  auto r = rate_estimate(std::vector<double>{0.1, 0.05, 0.025});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(*r[0], 1.0, 1e-14);
  EXPECT_NEAR(*r[1], 1.0, 1e-14);
  r = rate_estimate(std::vector<double>{0.1, 0.025});
  EXPECT_NEAR(*r[0], 2.0, 1e-14);
  r = rate_estimate(std::vector<double>{0.3, 0.3, 0.3});
  EXPECT_EQ(*r[0], 0.0);
  EXPECT_EQ(*r[1], 0.0);
  r = rate_estimate(std::vector<double>{0.1, 0.0});
  EXPECT_FALSE(r[0].has_value());
  EXPECT_THROW(rate_estimate(std::vector<double>{0.1}), Error);
}

TEST(Study, MeshSequence) {
  const Polygon p = shapes::l_shape();
  const Mesh m0 = study_mesh(p, 0.25, 1.0, 0), m1 = study_mesh(p, 0.25, 1.0, 1);
  EXPECT_EQ(m1.triangle_count(), 4 * m0.triangle_count());
  const Mesh g = study_mesh(p, 0.25, 2.0, 1);
  EXPECT_DOUBLE_EQ(g.h_target, 0.125);
  EXPECT_EQ(validate_mesh(g), "");
}

TEST(Study, ErrorsOfExactInterpolants) {
  const Mesh m = triangulate(shapes::l_shape(), 0.25);
  const FemSpace space(m);
  ExactSolution ex;
  ex.u = [](const Point& x) { return 1.0 + 2.0 * x.x() - x.y(); };
  ex.grad = [](const Point&) { return Point(2.0, -1.0); };
  const ErrorSet e = errors_vs_exact(space, space.interpolate(ex.u), ex);
  EXPECT_LE(e.l2_bulk, 1e-13);
  EXPECT_LE(e.h1_bulk, 1e-12);
  EXPECT_LE(e.l2_bdry, 1e-13);
  EXPECT_LE(e.h1_bdry, 1e-12);

  const FemSpace fine(refine(m));
  const ErrorSet r = errors_vs_reference(space, space.interpolate(ex.u), fine, fine.interpolate(ex.u));
  EXPECT_LE(r.h1_bulk, 1e-12);
  EXPECT_LE(r.h1_bdry, 1e-12);

  // a quadratic is not reproduced: the interpolation error is positive
  ex.u = [](const Point& x) { return x.x() * x.x(); };
  ex.grad = [](const Point& x) { return Point(2.0 * x.x(), 0.0); };
  EXPECT_GT(errors_vs_exact(space, space.interpolate(ex.u), ex).h1_bulk, 1e-3);
}

TEST(Study, ConstantPresetIsExactAtEveryLevel) {
  const ManufacturedProblem prob = make_manufactured("constant", shapes::l_shape(), 0.5, BoundaryCoefficient::constant(1.0));
  StudyOptions opt;
  opt.levels = 3;
  const ConvergenceTable t = convergence_study(prob, opt);
  ASSERT_EQ(t.rows.size(), 3u);
  for (const auto& row : t.rows) {
    EXPECT_LE(row.err_l2_bulk, 1e-10);
    EXPECT_LE(row.err_h1_bulk, 1e-10);
    EXPECT_LE(row.err_l2_bdry, 1e-10);
    EXPECT_LE(row.err_h1_bdry, 1e-10);
  }
}

TEST(Study, CubicV1ErrorDecreases) {
  const ManufacturedProblem prob = make_manufactured("cubic", shapes::unit_square(), 0.25, BoundaryCoefficient::constant(1.0));
  StudyOptions opt;
  opt.levels = 3;
  const ConvergenceTable t = convergence_study(prob, opt);
  for (std::size_t k = 1; k < t.rows.size(); ++k) {
    EXPECT_LE(t.rows[k].err_v1, 1.05 * t.rows[k - 1].err_v1);
    EXPECT_DOUBLE_EQ(t.rows[k].h, 0.5 * t.rows[k - 1].h);
  }
  const auto rates = rate_estimate(t, "err_h1_bulk");
  EXPECT_GE(*rates.back(), 0.85);
  EXPECT_LE(*rates.back(), 1.15);

  std::ostringstream a, b;
  write_csv(a, t);
  write_csv(b, convergence_study(prob, opt));
  const std::string csv = a.str();
  EXPECT_EQ(csv, b.str());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}
