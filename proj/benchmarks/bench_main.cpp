#include "venttsel/assembly.hpp"
#include "venttsel/manufactured.hpp"
#include "venttsel/mesh.hpp"
#include "venttsel/solver.hpp"

#include <benchmark/benchmark.h>

using namespace venttsel;

namespace {

Mesh lshape_level(int k) {
  Mesh m = triangulate(shapes::l_shape(), 0.25);
  for (int i = 0; i < k; ++i) m = refine(m);
  return m;
}

void BM_Triangulate(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(triangulate(shapes::l_shape(), h));
}
BENCHMARK(BM_Triangulate)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_TriangulateGraded(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(triangulate(shapes::l_shape(), h, 1.0 / (1.0 - 0.42)));
}
BENCHMARK(BM_TriangulateGraded)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ThetaAssembly(benchmark::State& state) {
  const BoundaryMesh bm = extract_boundary(lshape_level(static_cast<int>(state.range(0))));
  ThetaPolicy pol;
  pol.threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(nonlocal_matrix(bm, 0.5, pol));
  state.counters["segments"] = static_cast<double>(bm.size());
}
BENCHMARK(BM_ThetaAssembly)->Args({1, 1})->Args({2, 1})->Args({3, 1})->Args({3, 4})->Unit(benchmark::kMillisecond);

void BM_Solve(benchmark::State& state) {
  const Mesh m = lshape_level(static_cast<int>(state.range(0)));
  const BoundaryMesh bm = extract_boundary(m);
  const DiscreteSystem sys = assemble_system(m, bm, benchmark_spec(0.5, BoundaryCoefficient::constant(1.0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve(sys));
  state.counters["unknowns"] = static_cast<double>(sys.size());
}
BENCHMARK(BM_Solve)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
