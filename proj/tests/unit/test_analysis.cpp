#include "venttsel/analysis.hpp"
#include "venttsel/manufactured.hpp"
#include "venttsel/oracle.hpp"
#include "venttsel/solver.hpp"
#include "venttsel/app/checks.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace venttsel;

namespace {

Vector nodal(const Mesh& m, const ScalarField& fn) {
  Vector v(static_cast<Eigen::Index>(m.node_count()));
  for (std::size_t n = 0; n < m.node_count(); ++n) v[static_cast<Eigen::Index>(n)] = fn(m.nodes[n]);
  return v;
}

Vector random_field(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST(V1Norm, Constants) {
  const FemSpace space(triangulate(shapes::unit_square(), 0.25));
  EXPECT_NEAR(v1_norm(space, Vector::Ones(static_cast<Eigen::Index>(space.size()))), 2.0, 1e-12);
  EXPECT_EQ(v1_norm(space, Vector::Zero(static_cast<Eigen::Index>(space.size()))), 0.0);
}

TEST(V1Norm, InterpolantOfXAgainstQuadrature) {
  const FemSpace space(triangulate(shapes::unit_square(), 0.25));
  const Vector u = nodal(space.mesh(), [](const Point& x) { return x.x(); });
  // |grad x|^2 over the square, |d_l x|^2 and x^2 over each side
  const double bulk = testutil::gauss([](double) { return testutil::gauss([](double) { return 1.0; }, 0, 1); }, 0, 1);
  const double tangential = 2.0 * testutil::gauss([](double) { return 1.0; }, 0, 1);
  const double trace = testutil::gauss([](double t) { return t * t; }, 0, 1) * 2.0 + 1.0 +
                       testutil::gauss([](double) { return 0.0; }, 0, 1);
  EXPECT_NEAR(v1_norm(space, u), std::sqrt(bulk + tangential + trace), 1e-9);
  EXPECT_NEAR(v1_norm(space, u), std::sqrt(14.0 / 3.0), 1e-9);
}

TEST(NormReport, V1Decomposition) {
  const FemSpace space(triangulate(shapes::l_shape(), 0.25));
  std::mt19937_64 rng(3);
  const Vector u = random_field(space.size(), rng);
  const NormReport r = norm_report(space, u, nullptr, 0.0);
  EXPECT_NEAR(r.v1 * r.v1, r.h1_bulk_semi * r.h1_bulk_semi + r.h1_bdry_semi * r.h1_bdry_semi + r.l2_bdry * r.l2_bdry,
              1e-12 * r.v1 * r.v1);
  EXPECT_EQ(r.gagliardo_s, 0.0);
}

TEST(WeightedL2, SigmaZeroIsPlainL2) {
  const FemSpace space(triangulate(shapes::l_shape(), 0.25));
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const Vector u = random_field(space.size(), rng);
    EXPECT_NEAR(weighted_l2(space, u, 0.0), l2_bulk(space, u), 1e-10 * l2_bulk(space, u));
  }
  const FemSpace sq(triangulate(shapes::unit_square(), 0.25));
  EXPECT_NEAR(weighted_l2(sq, Vector::Ones(static_cast<Eigen::Index>(sq.size())), 0.0), 1.0, 1e-12);
}

TEST(WeightedL2, CornerWeightAgainstPolarQuadrature) {
  // int over the unit square of r^0.8, r the distance to the nearest corner:
  // four corner quarters, each 2 int_0^{pi/4} (1/(2 cos t))^{2.8} / 2.8 dt
  const double corner = 2.0 * testutil::adaptive([](double t) { return std::pow(0.5 / std::cos(t), 2.8) / 2.8; }, 0.0,
                                                 kPi / 4);
  const double expect = std::sqrt(4.0 * corner);
  const Mesh m = triangulate(shapes::unit_square(), 0.125);
  const FemSpace space(m);
  const double field = weighted_l2(space, Vector::Ones(static_cast<Eigen::Index>(space.size())), 0.4);
  const double callable = weighted_l2(m, [](const Point&) { return 1.0; }, 0.4);
  EXPECT_LE(testutil::rel_diff(field, expect), 1e-4);
  EXPECT_LE(testutil::rel_diff(callable, expect), 1e-4);
}

TEST(WeightedL2, LayerSelfCheck) {
  const Mesh m = triangulate(shapes::l_shape(), 0.25);
  const FemSpace space(m);
  const Vector u = nodal(m, [](const Point& x) { return 1.0 + x.x() * x.y(); });
  for (double sigma : {-0.4, 0.42}) {
    const double a = weighted_l2(space, u, sigma, 3);
    const double b = weighted_l2(space, u, sigma, 5);
    EXPECT_LE(testutil::rel_diff(a, b), 1e-4) << "sigma = " << sigma;
  }
  const BoundaryMesh& bm = space.boundary();
  const Vector ub = space.trace(u);
  EXPECT_LE(testutil::rel_diff(weighted_l2_boundary(bm, m.polygon, ub, 0.3, 3),
                               weighted_l2_boundary(bm, m.polygon, ub, 0.3, 5)),
            1e-4);
  EXPECT_NEAR(weighted_l2_boundary(bm, m.polygon, ub, 0.0), l2_bdry(space, u), 1e-10 * l2_bdry(space, u));
}

TEST(Gagliardo, ConstantsAndPositivity) {
  const BoundaryMesh bm = extract_boundary(triangulate(shapes::l_shape(), 0.25));
  const DenseMatrix theta = nonlocal_matrix(bm, 0.5);
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(bm.size()));
  EXPECT_LE(std::abs(gagliardo_energy(ones, theta)), 1e-10);
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) EXPECT_GE(gagliardo_energy(random_field(bm.size(), rng), theta), -1e-10);
}

TEST(Gagliardo, HatFunctionAgainstOracle) {
  const std::vector<Point> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const BoundaryMesh bm = BoundaryMesh::from_polyline(pts);
  const DenseMatrix theta = nonlocal_matrix(bm, 0.5);
  Vector hat = Vector::Zero(4);
  hat[0] = 1.0;
  const double oracle = theta_entry_oracle(bm, 0, 0, 0.5, 1e-10);
  EXPECT_LE(testutil::rel_diff(gagliardo_energy(hat, theta), oracle), 1e-6);
}

TEST(Gagliardo, BoundedByTraceNorm) {
  // E = u^T Theta u / (|u|_{H1(bdry)}^2 + |u|_{L2(bdry)}^2), sampled over smooth fields
  std::vector<double> worst;
  Mesh m = triangulate(shapes::l_shape(), 0.25);
  for (int level = 0; level < 2; ++level) {
    const FemSpace space(m);
    const DenseMatrix theta = nonlocal_matrix(space.boundary(), 0.5);
    std::mt19937_64 rng(17);
    double w = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Vector u = app::smooth_random_field(m, rng);
      const double hb = h1_bdry_semi(space, u), lb = l2_bdry(space, u);
      w = std::max(w, gagliardo_energy(space.trace(u), theta) / (hb * hb + lb * lb));
    }
    worst.push_back(w);
    m = refine(m);
  }
  EXPECT_LT(std::max(worst[0], worst[1]) / std::min(worst[0], worst[1]), 2.0);
}

TEST(BoundaryH2, QuadraticOnOneSide) {
  const double L = 1.5;
  const int n = 6;
  std::vector<Point> pts;
  std::vector<int> sides;
  for (int k = 0; k < n; ++k) {
    pts.emplace_back(L * k / n, 0.0);
    sides.push_back(0);
  }
  pts.emplace_back(L, 0.0);
  pts.emplace_back(L, 1.0);
  pts.emplace_back(0.0, 1.0);
  sides.insert(sides.end(), {1, 2, 3});
  const BoundaryMesh bm = BoundaryMesh::from_polyline(pts, sides);
  // t^2 on side 0, affine elsewhere: L^2 on the right, linear on top, 0 on the left
  Vector ub(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Point& x = pts[k];
    ub[static_cast<Eigen::Index>(k)] = x.y() == 0.0 ? x.x() * x.x() : (x.y() == 1.0 ? L * x.x() : L * L);
  }
  ub[static_cast<Eigen::Index>(n + 1)] = L * L;
  const double d = boundary_h2_diagnostic(ub, bm);
  EXPECT_NEAR(d * d, 4.0 * L, 1e-10);
}

TEST(BoundaryH2, AffinePerSideIsZero) {
  const Mesh m = triangulate(shapes::l_shape(), 0.125);
  const FemSpace space(m);
  const Vector u = nodal(m, [](const Point& x) { return 3.0 * x.x() - x.y() + 0.5; });
  EXPECT_LE(boundary_h2_diagnostic(space.trace(u), space.boundary()), 1e-10);
}

TEST(BoundaryH2, ManufacturedCubicTraceIsBounded) {
  const ManufacturedProblem prob = make_manufactured("cubic", shapes::unit_square(), 0.7, BoundaryCoefficient::constant(1.0));
  std::vector<double> diag;
  Mesh m = triangulate(prob.polygon, 0.25);
  for (int level = 0; level < 4; ++level) {
    const BoundaryMesh bm = extract_boundary(m);
    const DiscreteSystem sys = assemble_system(m, bm, bind(prob, bm));
    const FemSpace space(m);
    diag.push_back(boundary_h2_diagnostic(space.trace(solve(sys).u), bm));
    if (level < 3) m = refine(m);
  }
  const auto [lo, hi] = std::minmax_element(diag.begin(), diag.end());
  EXPECT_LT(*hi / *lo, 2.0);
}

TEST(WeightedHessian, AffineIsZero) {
  const FemSpace space(triangulate(shapes::l_shape(), 0.25));
  const Vector u = nodal(space.mesh(), [](const Point& x) { return 2.0 * x.x() + 5.0 * x.y() - 1.0; });
  EXPECT_LE(weighted_hessian_diagnostic(space, u, 0.0), 1e-10);
  EXPECT_LE(weighted_hessian_diagnostic(space, u, 0.42), 1e-10);
}

TEST(WeightedHessian, SquareOfXApproachesExact) {
  Mesh m = triangulate(shapes::unit_square(), 0.25);
  for (int k = 0; k < 3; ++k) m = refine(m);
  const FemSpace space(m);
  const Vector u = nodal(m, [](const Point& x) { return x.x() * x.x(); });
  const double d = weighted_hessian_diagnostic(space, u, 0.0);
  EXPECT_NEAR(d * d, 4.0, 0.2 * 4.0);
}

TEST(Friedrichs, ConstantField) {
  const FemSpace space(triangulate(shapes::unit_square(), 0.25));
  const Eigen::Index n = static_cast<Eigen::Index>(space.size());
  EXPECT_NEAR(friedrichs_ratio(space, Vector::Ones(n)), 0.25, 1e-12);
  EXPECT_NEAR(friedrichs_ratio(space, Vector::Constant(n, -3.7)), 0.25, 1e-12);
  EXPECT_THROW(friedrichs_ratio(space, Vector::Zero(n)), Error);
}

TEST(Friedrichs, RandomFieldsStayInEnvelope) {
  std::vector<double> maxima;
  Mesh m = triangulate(shapes::unit_square(), 0.25);
  for (int level = 0; level < 2; ++level) {
    const FemSpace space(m);
    const double constant = friedrichs_ratio(space, Vector::Ones(static_cast<Eigen::Index>(space.size())));
    std::mt19937_64 rng(23);
    for (int k = 0; k < 200; ++k) EXPECT_LE(friedrichs_ratio(space, random_field(space.size(), rng)), 10.0 * constant);
    const double mx = app::max_friedrichs_ratio(space, 1000, 5);
    EXPECT_LE(mx, 10.0 * constant);
    maxima.push_back(mx);
    m = refine(m);
  }
  EXPECT_LT(std::abs(maxima[1] - maxima[0]) / maxima[0], 0.5);
}
