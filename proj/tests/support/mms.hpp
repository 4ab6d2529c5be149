#pragma once
// Manufactured solutions on [0,1]^3 (and a radial two-material problem on
// [-1,1]^3), with right-hand sides derived by hand from the closed forms.

#include <cmath>
#include <numbers>

#include "homog/numerics/conduction.hpp"
#include "homog/numerics/fields.hpp"
#include "homog/numerics/stokes.hpp"

namespace mms {

constexpr double pi = std::numbers::pi;

// S(t) = sin^2(pi t) and its derivatives.
inline double S(int d, double t) {
  switch (d) {
    case 0: return std::pow(std::sin(pi * t), 2);
    case 1: return pi * std::sin(2 * pi * t);
    case 2: return 2 * pi * pi * std::cos(2 * pi * t);
    default: return -4 * pi * pi * pi * std::sin(2 * pi * t);
  }
}
inline double D(int a, int b, int c, const homog::numerics::Point3& x) { return S(a, x[0]) * S(b, x[1]) * S(c, x[2]); }

// u = curl(psi * (1,1,1)), psi = S(x)S(y)S(z): divergence free, zero on the walls.
inline double grad_psi(int a, const homog::numerics::Point3& x) {
  return D(a == 0, a == 1, a == 2, x);
}
inline double lap_grad_psi(int a, const homog::numerics::Point3& x) {
  int e[3] = {a == 0, a == 1, a == 2};
  double s = 0.0;
  for (int d = 0; d < 3; ++d) {
    int o[3] = {e[0], e[1], e[2]};
    o[d] += 2;
    s += D(o[0], o[1], o[2], x);
  }
  return s;
}
inline double velocity(int a, const homog::numerics::Point3& x) {
  const int b = (a + 1) % 3, c = (a + 2) % 3;
  return grad_psi(b, x) - grad_psi(c, x);
}
inline double lap_velocity(int a, const homog::numerics::Point3& x) {
  const int b = (a + 1) % 3, c = (a + 2) % 3;
  return lap_grad_psi(b, x) - lap_grad_psi(c, x);
}
inline double pressure(const homog::numerics::Point3& x) {
  return std::cos(pi * x[0]) * std::cos(pi * x[1]) * std::cos(pi * x[2]);
}
inline double grad_pressure(int a, const homog::numerics::Point3& x) {
  double g = 1.0;
  for (int d = 0; d < 3; ++d) g *= d == a ? -pi * std::sin(pi * x[d]) : std::cos(pi * x[d]);
  return g;
}

struct StokesErrors {
  double u_l2 = 0, p_l2 = 0;
  homog::numerics::SaddleStats stats;
};

// mu = 1; forcing f = -lap u + grad p sampled at face centres.
inline StokesErrors stokes_error(int n, homog::numerics::ViscousForm form,
                                 homog::numerics::SaddleStrategy strategy = homog::numerics::SaddleStrategy::minres) {
  using namespace homog::numerics;
  const StaggeredGrid g = StaggeredGrid::uniform({n, n, n}, {0, 0, 0}, 1.0 / n);
  StokesInput in;
  in.mu_cell.assign(g.cell_count(), 1.0);
  in.form = form;
  in.force.assign(g.face_count(), 0.0);
  for_each_face(g, [&](int a, int i, int j, int k, std::size_t f) {
    const Point3 x = g.face_center(a, {i, j, k});
    in.force[f] = (-lap_velocity(a, x) + grad_pressure(a, x)) * g.face_volume(a, {i, j, k});
  });
  SaddleOptions opt;
  opt.strategy = strategy;
  const StokesSolution s = stokes_solve(g, in, opt);
  StokesErrors e;
  e.stats = s.stats;
  for_each_face(g, [&](int a, int i, int j, int k, std::size_t f) {
    const Point3 x = g.face_center(a, {i, j, k});
    const double d = s.u[f] - velocity(a, x);
    e.u_l2 += d * d * g.face_volume(a, {i, j, k});
  });
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    const double d = s.p[c] - pressure(g.cell_center(i, j, k));
    e.p_l2 += d * d * g.cell_volume(i, j, k);
  });
  e.u_l2 = std::sqrt(e.u_l2);
  e.p_l2 = std::sqrt(e.p_l2);
  return e;
}

// -lap theta = 3 pi^2 sin sin sin, zero walls.
inline double heat_error(int n) {
  using namespace homog::numerics;
  const StaggeredGrid g = StaggeredGrid::uniform({n, n, n}, {0, 0, 0}, 1.0 / n);
  std::vector<double> kappa(g.cell_count(), 1.0), rhs(g.cell_count());
  auto exact = [](const Point3& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]) * std::sin(pi * x[2]); };
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    rhs[c] = 3 * pi * pi * exact(g.cell_center(i, j, k)) * g.cell_volume(i, j, k);
  });
  const ConductionSolver solver(g, kappa);
  const auto sol = solver.solve(rhs);
  double e = 0.0;
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    const double d = sol.theta[c] - exact(g.cell_center(i, j, k));
    e += d * d * g.cell_volume(i, j, k);
  });
  return std::sqrt(e);
}

// Unit source inside r < a with conductivity ks, kf outside; exact solution
//   r < a: A - r^2/(6 ks),  A = a^2/(6 ks) + a^2/(3 kf);   r > a: a^3/(3 kf r).
struct Radial {
  double a = 0.5, ks = 4.0, kf = 1.0;
  double exact(double r) const {
    if (r < a) return a * a / (6 * ks) + a * a / (3 * kf) - r * r / (6 * ks);
    return a * a * a / (3 * kf * r);
  }
};

// Relative L2 error on [-1,1]^3 with Dirichlet data from the exact solution.
inline double radial_error(int n, const Radial& rp = {}) {
  using namespace homog::numerics;
  const StaggeredGrid g = StaggeredGrid::uniform({n, n, n}, {-1, -1, -1}, 2.0 / n);
  std::vector<double> kappa(g.cell_count()), rhs(g.cell_count());
  auto rad = [](const Point3& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); };
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    const bool in = rad(g.cell_center(i, j, k)) < rp.a;
    kappa[c] = in ? rp.ks : rp.kf;
    rhs[c] = in ? g.cell_volume(i, j, k) : 0.0;
  });
  const ConductionSolver solver(g, kappa);
  const auto bc = solver.op().boundary_rhs([&](const Point3& x) { return rp.exact(rad(x)); });
  for (std::size_t c = 0; c < rhs.size(); ++c) rhs[c] += bc[c];
  const auto sol = solver.solve(rhs);
  double e = 0.0, ref = 0.0;
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    const double ex = rp.exact(rad(g.cell_center(i, j, k)));
    e += (sol.theta[c] - ex) * (sol.theta[c] - ex);
    ref += ex * ex;
  });
  return std::sqrt(e / ref);
}

}  // namespace mms
