#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "homog/errors.hpp"
#include "homog/homogenized.hpp"
#include "homog/microscale.hpp"
#include "homog/numerics/kernels.hpp"
#include "homog/numerics/stokes.hpp"

using namespace homog;
using numerics::CellField;
using numerics::Point3;
using numerics::StaggeredGrid;
using numerics::Sym3;

namespace {

constexpr double pi = std::numbers::pi;

StaggeredGrid unit_grid(int n) { return StaggeredGrid::uniform({n, n, n}, {0, 0, 0}, 1.0 / n); }

physics::PhysParams params() {
  physics::PhysParams p;
  p.viscosity.mu2 = 0.5;
  return p;
}

std::vector<double> force(const StaggeredGrid& g) {
  return micro::face_force(g, [](const Point3& x) {
    return Point3{std::sin(2 * pi * x[2]), std::sin(2 * pi * x[0]), std::sin(2 * pi * x[1])};
  });
}

CellField theta(const StaggeredGrid& g) {
  CellField t(g);
  numerics::for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    const auto x = g.cell_center(i, j, k);
    t[c] = 0.5 * std::sin(pi * x[0]) * std::sin(pi * x[1]) * std::sin(pi * x[2]);
  });
  return t;
}

double l2(const StaggeredGrid& g, std::span<const double> u) {
  const auto fv = numerics::face_volumes(g);
  double s = 0;
  for (std::size_t f = 0; f < u.size(); ++f) s += fv[f] * u[f] * u[f];
  return std::sqrt(s);
}

std::vector<Sym3> iso(const StaggeredGrid& g, double d) { return macro::uniform_tensor(g, Eigen::Matrix3d::Identity() * d); }

}  // namespace

TEST(Macro, ZeroTensorIsPlainStokes) {
  const auto g = unit_grid(12);
  const auto p = params();
  const auto th = theta(g);
  const auto f = force(g);
  const auto a = macro::solve_homogenized_steady(g, p, iso(g, 0.0), th, f);
  numerics::StokesInput in;
  in.mu_cell = physics::viscosity_field(th.span(), p);
  in.force = f;
  const auto b = numerics::stokes_solve(g, in);
  EXPECT_EQ(a.u.data(), b.u.data());
  EXPECT_EQ(a.p.data(), b.p.data());
}

TEST(Macro, ZeroForceAtRest) {
  const auto g = unit_grid(10);
  const std::vector<double> f(g.face_count(), 0.0);
  const auto s = macro::solve_homogenized_steady(g, params(), iso(g, 50.0), theta(g), f);
  EXPECT_EQ(numerics::norm2(s.u.span()), 0.0);
}

TEST(Macro, RejectsIndefiniteTensor) {
  const auto g = unit_grid(6);
  const std::vector<double> f(g.face_count(), 0.0);
  EXPECT_THROW(macro::solve_homogenized_steady(g, params(), iso(g, -1.0), theta(g), f), PreconditionError);
}

TEST(Macro, DarcyScaling) {
  const auto g = unit_grid(12);
  const auto f = force(g);
  // friction must dominate mu |k|^2 ~ 20 for the Darcy regime
  std::vector<double> d{1e3, 1e4, 1e5}, n;
  for (double v : d) n.push_back(l2(g, macro::solve_homogenized_steady(g, params(), iso(g, v), theta(g), f).u.span()));
  // least-squares slope of log |U| against log d
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < 3; ++k) {
    const double x = std::log(d[k]), y = std::log(n[k]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
  EXPECT_NEAR(slope, -1.0, 0.2);
  // last decade is already close to Darcy
  EXPECT_NEAR(std::log10(n[1] / n[2]), 1.0, 0.1);
}

TEST(Macro, LargerTensorSlowsFlow) {
  const auto g = unit_grid(12);
  const auto f = force(g);
  std::vector<Sym3> D1 = iso(g, 5.0), D2 = D1;
  for (auto& s : D2) {
    s[0] += 3.0;  // PSD increment
    s[3] += 1.0;
    s[1] += 1.0;
  }
  const auto a = macro::solve_homogenized_steady(g, params(), D1, theta(g), f);
  const auto b = macro::solve_homogenized_steady(g, params(), D2, theta(g), f);
  EXPECT_LE(l2(g, b.u.span()), l2(g, a.u.span()));
}

TEST(MacroEvolve, MatchesMicroWithoutHoles) {
  const auto g = unit_grid(10);
  const auto p = params();
  micro::EvolveOptions o;
  o.dt = 0.05;
  o.t_end = 0.15;
  const auto m = micro::open_medium(g);
  auto s0 = micro::initial_state(m, p, [](const Point3& x) { return 1 + 0.2 * x[0]; },
                                 [](const Point3& x) { return Point3{std::sin(pi * x[1]) * std::sin(pi * x[2]), 0, 0}; });
  const auto a = micro::evolve(m, p, s0, o);
  const auto b = macro::evolve_homogenized(g, p, iso(g, 0.0), s0, o);
  double d = 0;
  for (std::size_t f = 0; f < a.final_state.u.size(); ++f)
    d = std::max(d, std::abs(a.final_state.u[f] - b.final_state.u[f]));
  EXPECT_LT(d, 1e-9);
}

TEST(MacroEvolve, RestPersistsAndFrictionDissipates) {
  const auto g = unit_grid(10);
  const auto p = params();
  micro::EvolveOptions o;
  o.dt = 0.05;
  o.t_end = 0.15;
  const auto m = macro::homogenized_medium(g, iso(g, 20.0));
  auto rest = micro::initial_state(m, p, [](const Point3&) { return 1.0; }, [](const Point3&) { return Point3{0, 0, 0}; });
  const auto r = micro::evolve(m, p, rest, o);
  EXPECT_EQ(numerics::max_abs(r.final_state.u.span()), 0.0);

  auto s0 = micro::initial_state(m, p, [](const Point3&) { return 1.0; },
                                 [](const Point3& x) { return Point3{0, 0, std::sin(pi * x[0]) * std::sin(pi * x[1])}; });
  const auto e = micro::evolve(m, p, s0, o);
  for (std::size_t k = 1; k < e.trace.rows.size(); ++k) {
    const auto& row = e.trace.rows[k];
    EXPECT_GT(row.friction_rate, 0.0);
    EXPECT_LE(row.step_residual, 1e-6 * e.trace.rows[0].kinetic + 1e-8);
  }
  EXPECT_GT(e.trace.rows.back().diss_friction, 0.0);
}
