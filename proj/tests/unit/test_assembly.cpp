#include "venttsel/assembly.hpp"
#include "venttsel/mesh.hpp"

#include "test_util.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace venttsel;

namespace {

Mesh reference_triangle() {
  Mesh m;
  m.polygon = build_polygon({{0, 0}, {1, 0}, {0, 1}});
  m.nodes = {{0, 0}, {1, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  m.boundary = {1, 1, 1};
  m.corner = {0, 1, 2};
  m.side = {-1, -1, -1};
  m.h_target = 1.0;
  return m;
}

double max_row_sum(const DenseMatrix& a) { return a.rowwise().sum().cwiseAbs().maxCoeff(); }

double rel_asymmetry(const DenseMatrix& a) {
  return (a - a.transpose()).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff();
}

BoundaryMesh scaled(const BoundaryMesh& bm, double t) {
  std::vector<Point> pts;
  for (const auto& p : bm.points) pts.push_back(t * p);
  return BoundaryMesh::from_polyline(pts);
}

// 20-point Gauss tensor product with `pieces` panels per direction, basis (S0, S1, T0, T1).
Eigen::Matrix4d separated_reference(const Point& s0, const Point& s1, const Point& t0, const Point& t1, double s,
                                    int pieces) {
  Eigen::Matrix4d out;
  const double ls = (s1 - s0).norm(), lt = (t1 - t0).norm();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      auto basis = [](int k, double xi, double eta) {
        switch (k) {
          case 0: return 1.0 - xi;
          case 1: return xi;
          case 2: return -(1.0 - eta);
          default: return -eta;
        }
      };
      out(i, j) = testutil::gauss(
          [&](double xi) {
            return testutil::gauss(
                [&](double eta) {
                  const double r = (s0 + xi * (s1 - s0) - t0 - eta * (t1 - t0)).norm();
                  return basis(i, xi, eta) * basis(j, xi, eta) * std::pow(r, -1.0 - 2.0 * s);
                },
                0.0, 1.0, pieces);
          },
          0.0, 1.0, pieces);
      out(i, j) *= ls * lt;
    }
  }
  return out;
}

}  // namespace

TEST(BulkStiffness, ReferenceTriangle) {
  const DenseMatrix a(bulk_stiffness(reference_triangle()));
  Eigen::Matrix3d expect;
  expect << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
  EXPECT_LE((a - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BulkStiffness, RowSumsAndTranslation) {
  Mesh m = triangulate(shapes::l_shape(), 0.25);
  const DenseMatrix a(bulk_stiffness(m));
  EXPECT_LE(max_row_sum(a), 1e-12);
  EXPECT_LE(rel_asymmetry(a), 1e-12);
  for (auto& p : m.nodes) p += Point(3.5, -1.25);
  const DenseMatrix moved(bulk_stiffness(m));
  EXPECT_LE((moved - a).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BulkStiffness, DegenerateTriangleRejected) {
  Mesh m = reference_triangle();
  m.nodes[2] = {2, 0};
  EXPECT_THROW(bulk_stiffness(m), Error);
}

TEST(BulkMass, TotalArea) {
  const Mesh m = triangulate(shapes::l_shape(), 0.25);
  const DenseMatrix mass(bulk_mass(m));
  EXPECT_NEAR(mass.sum(), 3.0, 1e-12);
}

TEST(BoundaryStiffness, UnitSquareCirculant) {
  const std::vector<Point> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const DenseMatrix a(boundary_stiffness(BoundaryMesh::from_polyline(pts)));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const int d = (j - i + 4) % 4;
      EXPECT_DOUBLE_EQ(a(i, j), d == 0 ? 2.0 : (d == 2 ? 0.0 : -1.0));
    }
  }
}

TEST(BoundaryStiffness, SegmentScalingAndRowSums) {
  // rectangle with sides 3 and 0.5: each segment contributes (1/L)[[1,-1],[-1,1]]
  const std::vector<Point> pts{{0, 0}, {3, 0}, {3, 0.5}, {0, 0.5}};
  const DenseMatrix a(boundary_stiffness(BoundaryMesh::from_polyline(pts)));
  EXPECT_NEAR(a(0, 1), -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(a(1, 2), -2.0, 1e-15);
  EXPECT_NEAR(a(0, 0), 1.0 / 3.0 + 2.0, 1e-15);
  const DenseMatrix b(boundary_stiffness(extract_boundary(triangulate(shapes::l_shape(), 0.125))));
  EXPECT_LE(max_row_sum(b), 1e-12);
}

TEST(BoundaryStiffness, ZeroLengthRejected) {
  const std::vector<Point> pts{{0, 0}, {1, 0}, {1, 0}, {0, 1}};
  EXPECT_THROW(boundary_stiffness(BoundaryMesh::from_polyline(pts)), Error);
}

TEST(BoundaryMass, Examples) {
  const std::vector<Point> pts{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  const DenseMatrix m(boundary_mass(BoundaryMesh::from_polyline(pts), BoundaryCoefficient::constant(1.0)));
  EXPECT_NEAR(m(0, 0), 2.0 * (2.0 / 6.0) * 2.0, 1e-15);
  EXPECT_NEAR(m(0, 1), 2.0 / 6.0, 1e-15);
  EXPECT_EQ(m(0, 2), 0.0);

  const DenseMatrix zero(boundary_mass(BoundaryMesh::from_polyline(pts), BoundaryCoefficient::constant(0.0)));
  EXPECT_EQ(zero.cwiseAbs().maxCoeff(), 0.0);

  // unit perimeter: square of side 1/4, refined
  const Polygon small = build_polygon({{0, 0}, {0.25, 0}, {0.25, 0.25}, {0, 0.25}});
  const BoundaryMesh bm = extract_boundary(triangulate(small, 0.05));
  const DenseMatrix unit(boundary_mass(bm, BoundaryCoefficient::constant(1.0)));
  EXPECT_NEAR(unit.sum(), 1.0, 1e-12);
}

TEST(BoundaryMass, PerSideAndCallable) {
  const BoundaryMesh bm = extract_boundary(triangulate(shapes::unit_square(), 0.25));
  BoundaryCoefficient per;
  per.per_side = {1.0, 2.0, 3.0, 4.0};
  EXPECT_NEAR(DenseMatrix(boundary_mass(bm, per)).sum(), 10.0, 1e-12);
  BoundaryCoefficient fn;
  fn.callable = [](const Point& x) { return x.x() * x.x(); };
  // int over the boundary of x^2: bottom 1/3, right 1, top 1/3, left 0
  EXPECT_NEAR(DenseMatrix(boundary_mass(bm, fn)).sum(), 5.0 / 3.0, 1e-12);
}

TEST(LoadVector, Examples) {
  const Mesh tri = reference_triangle();
  const BoundaryMesh tbm = extract_boundary(tri);
  const Vector f1 = load_vector(tri, tbm, [](const Point&) { return 1.0; }, BoundarySource::zero());
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(f1[i], 1.0 / 6.0, 1e-15);

  const Polygon small = build_polygon({{0, 0}, {0.25, 0}, {0.25, 0.25}, {0, 0.25}});
  const Mesh m = triangulate(small, 0.05);
  const BoundaryMesh bm = extract_boundary(m);
  const Vector g1 = load_vector(m, bm, {}, BoundarySource::from_callable([](const Point&) { return 1.0; }));
  EXPECT_NEAR(g1.sum(), 1.0, 1e-12);
  for (std::size_t n = 0; n < m.node_count(); ++n)
    if (!m.boundary[n]) EXPECT_EQ(g1[static_cast<Eigen::Index>(n)], 0.0);

  const Vector z = load_vector(m, bm, [](const Point&) { return 0.0; }, BoundarySource::zero());
  EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
}

TEST(LoadVector, EvaluationFailureNamesLocation) {
  const Mesh tri = reference_triangle();
  const BoundaryMesh bm = extract_boundary(tri);
  try {
    load_vector(tri, bm, [](const Point&) { return std::nan(""); }, BoundarySource::zero());
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.rule(), "data.f_evaluation");
  }
}

TEST(Theta, IdenticalPairClosedForm) {
  // int_0^1 int_0^1 |xi - eta|^{1-2s} = 2 int_0^1 (1 - t) t^{1-2s} dt
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double s : {0.1, 0.25, 0.5, 0.7, 0.9}) {
    const std::vector<Point> pts{{0, 0}, {1.5, 0}, {1.5, 1.5}, {0, 1.5}};
    const BoundaryMesh bm = BoundaryMesh::from_polyline(pts);
    std::vector<int> nodes;
    const DenseMatrix blk = theta_pair_block(bm, 0, 0, s, nodes);
    const double inner = 2.0 * ts.integrate([s](double t) { return (1.0 - t) * std::pow(t, 1.0 - 2.0 * s); }, 0.0, 1.0);
    const double expect = std::pow(1.5, 1.0 - 2.0 * s) * inner;
    EXPECT_LE(testutil::rel_diff(blk(0, 0), expect), 1e-12) << "s = " << s;
    EXPECT_NEAR(blk(0, 1), -blk(0, 0), 1e-15);
  }
}

TEST(Theta, SeparatedPairAgainstCompositeGauss) {
  const std::vector<Point> pts{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
  const BoundaryMesh bm = BoundaryMesh::from_polyline(pts);
  for (double s : {0.25, 0.5, 0.7}) {
    for (auto [a, b] : {std::pair{0ul, 4ul}, std::pair{0ul, 3ul}, std::pair{1ul, 5ul}, std::pair{0ul, 2ul}}) {
      ASSERT_EQ(classify_pair(bm, a, b), PairKind::separated);
      std::vector<int> nodes;
      const DenseMatrix blk = theta_pair_block(bm, a, b, s, nodes);
      const auto& sa = bm.segments[a];
      const auto& sb = bm.segments[b];
      const Eigen::Matrix4d ref =
          separated_reference(bm.points[static_cast<std::size_t>(sa.local[0])], bm.points[static_cast<std::size_t>(sa.local[1])],
                              bm.points[static_cast<std::size_t>(sb.local[0])], bm.points[static_cast<std::size_t>(sb.local[1])], s, 8);
      EXPECT_LE((blk - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff(), 1e-9)
          << "s = " << s << " pair " << a << "," << b;
    }
  }
}

TEST(Theta, PairClassification) {
  const BoundaryMesh bm = extract_boundary(triangulate(shapes::unit_square(), 0.5));
  const std::size_t n = bm.segments.size();
  EXPECT_EQ(classify_pair(bm, 0, 0), PairKind::identical);
  EXPECT_EQ(classify_pair(bm, 0, 1), PairKind::adjacent);
  EXPECT_EQ(classify_pair(bm, 0, n - 1), PairKind::adjacent);
  EXPECT_EQ(classify_pair(bm, 0, 2), PairKind::separated);
}

TEST(Theta, SymmetryConstantsPsd) {
  for (const Polygon& p : {shapes::unit_square(), shapes::l_shape()}) {
    const BoundaryMesh bm = extract_boundary(triangulate(p, 0.25));
    ASSERT_LE(bm.size(), 64u);
    for (double s : {0.25, 0.5, 0.7}) {
      const DenseMatrix theta = nonlocal_matrix(bm, s);
      EXPECT_LE(rel_asymmetry(theta), 1e-12);
      EXPECT_LE(max_row_sum(theta), 1e-10);
      const Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(theta);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * eig.eigenvalues().maxCoeff());
    }
  }
}

TEST(Theta, ScalingLaw) {
  const BoundaryMesh bm = extract_boundary(triangulate(shapes::l_shape(), 0.25));
  for (double s : {0.25, 0.5, 0.7}) {
    const DenseMatrix base = nonlocal_matrix(bm, s);
    for (double t : {0.5, 3.0}) {
      const DenseMatrix sc = nonlocal_matrix(scaled(bm, t), s);
      const double factor = std::pow(t, 1.0 - 2.0 * s);
      const double scale = base.cwiseAbs().maxCoeff();
      EXPECT_LE((sc - factor * base).cwiseAbs().maxCoeff(), 1e-8 * factor * scale) << "s = " << s << " t = " << t;
    }
  }
}

TEST(Theta, DoubledSeparatedOrderIsConsistent) {
  const BoundaryMesh bm = extract_boundary(triangulate(shapes::l_shape(), 0.25));
  ThetaPolicy fine;
  fine.separated_orders = {8, 16, 24};
  for (double s : {0.25, 0.7}) {
    const DenseMatrix a = nonlocal_matrix(bm, s);
    const DenseMatrix b = nonlocal_matrix(bm, s, fine);
    // relative to the row scale: off-diagonal entries next to a corner are
    // small differences of much larger pair contributions
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double row = b.row(i).cwiseAbs().maxCoeff();
      for (Eigen::Index j = 0; j < a.cols(); ++j) EXPECT_LE(std::abs(a(i, j) - b(i, j)), 1e-8 * row);
    }
    ThetaPolicy checked;
    checked.tolerance = 1e-6;
    EXPECT_NO_THROW(nonlocal_matrix(bm, s, checked));
    checked.tolerance = 1e-15;
    try {
      nonlocal_matrix(bm, s, checked);
      FAIL() << "expected a quadrature error";
    } catch (const Error& e) {
      EXPECT_EQ(e.rule(), "theta.quadrature");
      EXPECT_NE(std::string(e.what()).find("segments ("), std::string::npos);
    }
  }
}

TEST(Theta, ThreadCountStability) {
  const BoundaryMesh bm = extract_boundary(triangulate(shapes::l_shape(), 0.125));
  ThetaPolicy one, four;
  four.threads = 4;
  const DenseMatrix a = nonlocal_matrix(bm, 0.4, one);
  const DenseMatrix b = nonlocal_matrix(bm, 0.4, four);
  const DenseMatrix c = nonlocal_matrix(bm, 0.4, four);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12 * a.cwiseAbs().maxCoeff());
  EXPECT_TRUE((b.array() == c.array()).all());
}

TEST(Theta, InvalidOrder) {
  const BoundaryMesh bm = extract_boundary(triangulate(shapes::unit_square(), 0.5));
  EXPECT_THROW(nonlocal_matrix(bm, 0.0), Error);
  EXPECT_THROW(nonlocal_matrix(bm, 1.0), Error);
}

TEST(AssembleSystem, PatchPropertiesAndKernel) {
  const Mesh m = triangulate(shapes::unit_square(), 0.25);
  const BoundaryMesh bm = extract_boundary(m);
  ProblemSpec spec;
  spec.s = 0.5;
  spec.b = BoundaryCoefficient::constant(1.0);
  const DiscreteSystem sys = assemble_system(m, bm, spec);
  EXPECT_TRUE(sys.coercive);
  const DenseMatrix e = sys.dense();
  EXPECT_LE(rel_asymmetry(e), 1e-12);

  // E_h 1 reproduces the boundary-mass row sums, embedded
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(sys.size()));
  const Vector mrow = DenseMatrix(sys.bdry_mass).rowwise().sum();
  EXPECT_LE((sys.apply(ones) - sys.embed_boundary(mrow)).cwiseAbs().maxCoeff(), 1e-10);

  const Eigen::SelfAdjointEigenSolver<DenseMatrix> pos(e);
  EXPECT_GT(pos.eigenvalues().minCoeff(), 0.0);

  spec.b = BoundaryCoefficient::constant(0.0);
  const DiscreteSystem deg = assemble_system(m, bm, spec);
  EXPECT_FALSE(deg.coercive);
  EXPECT_LE(deg.apply(ones).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(deg.dense());
  EXPECT_LE(std::abs(eig.eigenvalues()[0]), 1e-10);
  EXPECT_GT(eig.eigenvalues()[1], 1e-6);
}

TEST(AssembleSystem, RejectsNegativeB) {
  const Mesh m = triangulate(shapes::unit_square(), 0.5);
  ProblemSpec spec;
  spec.b = BoundaryCoefficient::constant(-1.0);
  EXPECT_THROW(assemble_system(m, extract_boundary(m), spec), Error);
}
