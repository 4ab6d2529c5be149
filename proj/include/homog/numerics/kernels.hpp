#pragma once

#include <span>

namespace homog::numerics {

// Execution policy for the data-parallel kernels. The serial variant is the
// reference implementation; both share loop bodies so results agree up to
// reduction order.
enum class Exec { serial, parallel };

void set_threads(int n);
int max_threads();

double dot(std::span<const double> a, std::span<const double> b, Exec exec = Exec::parallel);
double norm2(std::span<const double> a, Exec exec = Exec::parallel);
double max_abs(std::span<const double> a, Exec exec = Exec::parallel);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y, Exec exec = Exec::parallel);
// y = x + beta * y
void xpby(std::span<const double> x, double beta, std::span<double> y, Exec exec = Exec::parallel);
void scale(double alpha, std::span<double> y, Exec exec = Exec::parallel);
// y = d .* x
void hadamard(std::span<const double> d, std::span<const double> x, std::span<double> y,
              Exec exec = Exec::parallel);

}  // namespace homog::numerics
