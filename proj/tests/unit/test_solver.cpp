#include "venttsel/solver.hpp"
#include "venttsel/manufactured.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace venttsel;

namespace {

struct Fixture {
  Mesh mesh;
  BoundaryMesh bm;
  DiscreteSystem sys;
};

Fixture make(const Polygon& p, double h, double s, double b, ScalarField f = {}, BoundarySource g = {}) {
  Fixture out;
  out.mesh = triangulate(p, h);
  out.bm = extract_boundary(out.mesh);
  ProblemSpec spec;
  spec.s = s;
  spec.b = BoundaryCoefficient::constant(b);
  spec.f = std::move(f);
  spec.g = std::move(g);
  out.sys = assemble_system(out.mesh, out.bm, spec);
  return out;
}

BoundarySource unit_g() {
  return BoundarySource::from_callable([](const Point&) { return 1.0; });
}

}  // namespace

TEST(Solve, ConstantCompatibleData) {
  const Fixture st = make(shapes::unit_square(), 0.25, 0.5, 1.0, {}, unit_g());
  const Solution sol = solve(st.sys);
  EXPECT_LE((sol.u.array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_LE(sol.report.relative_residual, 1e-10);
  EXPECT_GT(sol.report.iterations, 0);

  const FemSpace space(st.mesh);
  EXPECT_NEAR(stability_ratio(space, sol.u, 0.0, 2.0), 1.0, 1e-9);
}

TEST(Solve, ZeroLoadGivesZero) {
  const Fixture st = make(shapes::l_shape(), 0.25, 0.25, 1.0);
  const Solution sol = solve(st.sys);
  EXPECT_EQ(sol.u.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Solve, ResidualAndDenseAgreement) {
  const Fixture st = make(shapes::l_shape(), 0.25, 0.7, 1.0, [](const Point& x) { return std::sin(3 * x.x()) + x.y(); },
                        BoundarySource::from_callable([](const Point& x) { return x.x() * x.y(); }));
  const Solution sol = solve(st.sys);
  const double residual = (st.sys.apply(sol.u) - st.sys.load).norm();
  EXPECT_LE(residual, 1e-10 * st.sys.load.norm());
  const Vector direct = solve_dense(st.sys, st.sys.load);
  EXPECT_LE((direct - sol.u).norm(), 1e-8 * direct.norm());
}

TEST(Solve, Linearity) {
  const Fixture st = make(shapes::unit_square(), 0.25, 0.25, 1.0);
  Vector r1 = Vector::Zero(static_cast<Eigen::Index>(st.sys.size()));
  Vector r2 = r1;
  for (Eigen::Index i = 0; i < r1.size(); ++i) {
    r1[i] = std::cos(0.7 * static_cast<double>(i));
    r2[i] = 1.0 / (1.0 + static_cast<double>(i));
  }
  const Vector u1 = solve(st.sys, r1).u, u2 = solve(st.sys, r2).u, u12 = solve(st.sys, r1 + r2).u;
  EXPECT_LE((u12 - u1 - u2).norm(), 1e-9 * u12.norm());
}

TEST(Solve, Deterministic) {
  const Fixture st = make(shapes::l_shape(), 0.25, 0.5, 1.0, [](const Point&) { return 1.0; });
  const Vector a = solve(st.sys).u, b = solve(st.sys).u;
  EXPECT_TRUE((a.array() == b.array()).all());
}

TEST(Solve, DegenerateCoefficientRejected) {
  const Fixture st = make(shapes::unit_square(), 0.5, 0.5, 0.0, [](const Point&) { return 1.0; });
  try {
    solve(st.sys);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.rule(), "coercivity.b");
  }
}

TEST(Solve, MaxitCarriesHistory) {
  const Fixture st = make(shapes::unit_square(), 0.125, 0.5, 1.0, [](const Point&) { return 1.0; });
  SolveOptions opt;
  opt.maxit = 3;
  try {
    solve(st.sys, opt);
    FAIL() << "expected an error";
  } catch (const SolveError& e) {
    EXPECT_EQ(e.rule(), "solver.maxit");
    EXPECT_GE(e.history().size(), 3u);
  }
  opt.tol = -1.0;
  EXPECT_THROW(solve(st.sys, opt), Error);
}

TEST(MinEigen, DegenerateKernelIsConstant) {
  for (const Polygon& p : {shapes::unit_square(), shapes::l_shape()}) {
    const Fixture st = make(p, 0.25, 0.5, 0.0);
    const EigenPair ep = min_eigenpair(st.sys);
    EXPECT_LE(std::abs(ep.value), 1e-10);
    const Vector ones = Vector::Ones(ep.vector.size());
    const double cosine = std::abs(ep.vector.dot(ones)) / (ep.vector.norm() * ones.norm());
    EXPECT_GE(cosine, 1.0 - 1e-8);
  }
}

TEST(MinEigen, PositiveAndMonotoneInB) {
  const double l1 = min_eigenvalue(make(shapes::unit_square(), 0.5, 0.5, 1.0).sys);
  const double l2 = min_eigenvalue(make(shapes::unit_square(), 0.5, 0.5, 2.0).sys);
  EXPECT_GT(l1, 0.0);
  EXPECT_GE(l2, l1);
  // agrees with an independent dense eigensolve
  const Fixture st = make(shapes::l_shape(), 0.25, 0.25, 1.0);
  const Eigen::SelfAdjointEigenSolver<DenseMatrix> es(st.sys.dense(), Eigen::EigenvaluesOnly);
  EXPECT_NEAR(min_eigenvalue(st.sys), es.eigenvalues()[0], 1e-10 * es.eigenvalues()[0]);
}

TEST(MinEigen, CoercivityPersistsUnderRefinement) {
  // smallest generalized eigenvalue E u = lambda M u with M the bulk mass:
  // the discrete equivalence constant, which must not degenerate with h
  std::vector<double> lambda;
  Mesh m = triangulate(shapes::unit_square(), 0.25);
  for (int level = 0; level < 3; ++level) {
    const BoundaryMesh bm = extract_boundary(m);
    ProblemSpec spec;
    spec.s = 0.5;
    const DiscreteSystem sys = assemble_system(m, bm, spec);
    const DenseMatrix mass(bulk_mass(m));
    const Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(sys.dense(), mass, Eigen::EigenvaluesOnly);
    lambda.push_back(es.eigenvalues()[0]);
    m = refine(m);
  }
  for (double l : lambda) EXPECT_GT(l, 0.5 * lambda.front());
}

TEST(MinEigen, SizeCap) {
  Mesh m = triangulate(shapes::unit_square(), 0.2);
  for (int k = 0; k < 5; ++k) m = refine(m);
  const DiscreteSystem sys = assemble_system(m, extract_boundary(m), ProblemSpec{});
  ASSERT_GT(sys.boundary_size(), 512u);
  EXPECT_THROW(min_eigenpair(sys), Error);
}

TEST(StabilityRatio, ScalingAndZeroData) {
  const Fixture st = make(shapes::unit_square(), 0.25, 0.5, 1.0, [](const Point& x) { return x.x(); }, unit_g());
  const FemSpace space(st.mesh);
  const Vector u = solve(st.sys).u;
  const double r = stability_ratio(space, u, 0.3, 2.0);
  EXPECT_GT(r, 0.0);
  EXPECT_NEAR(stability_ratio(space, 2.0 * u, 0.6, 4.0), r, 1e-14 * r);
  EXPECT_THROW(stability_ratio(space, u, 0.0, 0.0), Error);
}

TEST(StabilityRatio, ManufacturedCubicIsStable) {
  const ManufacturedProblem prob = make_manufactured("cubic", shapes::unit_square(), 0.25, BoundaryCoefficient::constant(1.0));
  std::vector<double> ratios;
  Mesh m = triangulate(prob.polygon, 0.25);
  for (int level = 0; level < 3; ++level) {
    const BoundaryMesh bm = extract_boundary(m);
    const DiscreteSystem sys = assemble_system(m, bm, bind(prob, bm));
    const FemSpace space(m);
    ratios.push_back(stability_ratio(space, solve(sys).u, data_norm_f(prob, m), data_norm_g(prob)));
    m = refine(m);
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  EXPECT_LT(*hi / *lo, 2.0);
}
