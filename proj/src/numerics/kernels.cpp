#include "homog/numerics/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace homog::numerics {

namespace {
inline long n_of(std::span<const double> a) { return static_cast<long>(a.size()); }
}  // namespace

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

double dot(std::span<const double> a, std::span<const double> b, Exec exec) {
  const long n = n_of(a);
  double s = 0.0;
#pragma omp parallel for reduction(+ : s) schedule(static) if (exec == Exec::parallel)
  for (long i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a, Exec exec) { return std::sqrt(dot(a, a, exec)); }

double max_abs(std::span<const double> a, Exec exec) {
  const long n = n_of(a);
  double m = 0.0;
#pragma omp parallel for reduction(max : m) schedule(static) if (exec == Exec::parallel)
  for (long i = 0; i < n; ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y, Exec exec) {
  const long n = n_of(x);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y, Exec exec) {
  const long n = n_of(x);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void scale(double alpha, std::span<double> y, Exec exec) {
  const long n = static_cast<long>(y.size());
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long i = 0; i < n; ++i) y[i] *= alpha;
}

void hadamard(std::span<const double> d, std::span<const double> x, std::span<double> y, Exec exec) {
  const long n = n_of(x);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long i = 0; i < n; ++i) y[i] = d[i] * x[i];
}

}  // namespace homog::numerics
