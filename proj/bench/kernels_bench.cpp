// Serial reference vs OpenMP kernels. Arg = cells per axis.
#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "homog/microscale.hpp"
#include "homog/numerics/conduction.hpp"
#include "homog/numerics/divergence.hpp"
#include "homog/numerics/kernels.hpp"
#include "homog/numerics/viscous.hpp"

using namespace homog;
using numerics::Exec;
using numerics::StaggeredGrid;

namespace {

StaggeredGrid grid(int n) { return StaggeredGrid::uniform({n, n, n}, {0, 0, 0}, 1.0 / n); }

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::parallel : Exec::serial; }

void label(benchmark::State& s) { s.SetLabel(s.range(1) ? "parallel" : "serial"); }

void BM_dot(benchmark::State& s) {
  const std::size_t n = std::size_t(s.range(0)) * s.range(0) * s.range(0) * 3;
  const auto a = random_vec(n, 1), b = random_vec(n, 2);
  for (auto _ : s) benchmark::DoNotOptimize(numerics::dot(a, b, exec_of(s)));
  s.SetBytesProcessed(int64_t(s.iterations()) * int64_t(2 * n * sizeof(double)));
  label(s);
}

void BM_axpy(benchmark::State& s) {
  const std::size_t n = std::size_t(s.range(0)) * s.range(0) * s.range(0) * 3;
  const auto x = random_vec(n, 1);
  auto y = random_vec(n, 2);
  for (auto _ : s) {
    numerics::axpy(1e-9, x, y, exec_of(s));
    benchmark::ClobberMemory();
  }
  s.SetBytesProcessed(int64_t(s.iterations()) * int64_t(3 * n * sizeof(double)));
  label(s);
}

void BM_viscous(benchmark::State& s) {
  const auto g = grid(int(s.range(0)));
  const auto mu = random_vec(g.cell_count(), 3);
  std::vector<double> m(mu.size());
  for (std::size_t c = 0; c < m.size(); ++c) m[c] = 1.5 + 0.5 * mu[c];
  const numerics::ViscousOperator A(g, m, numerics::ViscousForm::symmetric_gradient);
  const auto u = random_vec(g.face_count(), 4);
  std::vector<double> out(u.size());
  for (auto _ : s) {
    A.apply(u, out, exec_of(s));
    benchmark::ClobberMemory();
  }
  s.SetItemsProcessed(int64_t(s.iterations()) * int64_t(g.face_count()));
  label(s);
}

void BM_divergence(benchmark::State& s) {
  const auto g = grid(int(s.range(0)));
  const numerics::DivergenceOperator B(g);
  const auto u = random_vec(g.face_count(), 5);
  std::vector<double> out(g.cell_count());
  for (auto _ : s) {
    B.apply(u, out, exec_of(s));
    benchmark::ClobberMemory();
  }
  s.SetItemsProcessed(int64_t(s.iterations()) * int64_t(g.cell_count()));
  label(s);
}

void BM_conduction(benchmark::State& s) {
  const auto g = grid(int(s.range(0)));
  const std::vector<double> kappa(g.cell_count(), 1.0);
  const numerics::ConductionOperator H(g, kappa);
  const auto t = random_vec(g.cell_count(), 6);
  std::vector<double> out(t.size());
  for (auto _ : s) {
    H.apply(t, out, exec_of(s));
    benchmark::ClobberMemory();
  }
  s.SetItemsProcessed(int64_t(s.iterations()) * int64_t(g.cell_count()));
  label(s);
}

void BM_transport(benchmark::State& s) {
  const auto g = grid(int(s.range(0)));
  const auto m = micro::open_medium(g);
  numerics::CellField rho(g, 1.0);
  numerics::FaceField u(g);
  // rigid rotation about the z axis through the box centre
  numerics::for_each_face(g, [&](int a, int i, int j, int k, std::size_t f) {
    const auto x = g.face_center(a, {i, j, k});
    u[f] = a == 0 ? -(x[1] - 0.5) : a == 1 ? (x[0] - 0.5) : 0.0;
  });
  const double dt = 0.2 / s.range(0);
  for (auto _ : s) benchmark::DoNotOptimize(micro::advect_density(m, rho, u, dt, exec_of(s)));
  s.SetItemsProcessed(int64_t(s.iterations()) * int64_t(g.cell_count()));
  label(s);
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int n : {32, 64, 96})
    for (int par : {0, 1}) b->Args({n, par});
}

}  // namespace

BENCHMARK(BM_dot)->Apply(sizes);
BENCHMARK(BM_axpy)->Apply(sizes);
BENCHMARK(BM_viscous)->Apply(sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_divergence)->Apply(sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_conduction)->Apply(sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_transport)->Apply(sizes)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
