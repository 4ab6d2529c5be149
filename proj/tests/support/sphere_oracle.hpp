#pragma once
// Stokes drag of a sphere of radius a translating with unit speed inside a
// fixed concentric sphere of radius 1 (closed form, lambda = a):
//   F = 6 pi a K(lambda),
//   K = (1 - lambda^5) / (1 - 9/4 lambda + 5/2 lambda^3 - 9/4 lambda^5 + lambda^6).
// With mu = 1 the drag equals the Dirichlet energy of the velocity field,
// i.e. the diagonal entry of the cell-problem Gram matrix.

#include <cmath>
#include <numbers>

namespace oracle {

inline double wall_factor(double lambda) {
  const double l = lambda, l3 = l * l * l, l5 = l3 * l * l, l6 = l5 * l;
  return (1 - l5) / (1 - 2.25 * l + 2.5 * l3 - 2.25 * l5 + l6);
}

inline double sphere_drag(double a) { return 6 * std::numbers::pi * a * wall_factor(a); }

}  // namespace oracle
