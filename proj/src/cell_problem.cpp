#include "homog/cell_problem.hpp"

#include <cmath>
#include <sstream>

#include "homog/errors.hpp"
#include "homog/numerics/divergence.hpp"

namespace homog::cell {

using numerics::for_each_cell;
using numerics::for_each_face;
using numerics::Index3;
using numerics::Point3;
using numerics::StaggeredGrid;

namespace {
double norm(const Point3& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }
}  // namespace

StaggeredGrid cell_grid(const geometry::HoleShape& shape, double s, const CellGridSpec& spec) {
  const int core = spec.core_cells > 0 ? spec.core_cells : spec.cells / 2;
  double w = spec.core_factor * s * shape.max_radius_bound();
  w = std::min(w, 0.6);
  const auto ax = numerics::AxisCoords::graded(-1.0, 1.0, spec.cells, w, core);
  return StaggeredGrid(ax, ax, ax);
}

CellSolution solve_cell_problem(const geometry::HoleShape& shape, double s, const CellGridSpec& spec,
                                const numerics::SaddleOptions& opt) {
  if (!(s > 0.0 && s <= 0.5)) throw PreconditionError("obstacle scale must lie in (0, 1/2]");
  if (spec.cells < 8 || spec.cells % 2) throw PreconditionError("cell grid needs an even number (>= 8) of cells");
  CellSolution sol;
  sol.shape = shape;
  sol.s = s;
  sol.spec = spec;
  sol.grid = cell_grid(shape, s, spec);
  const StaggeredGrid& g = sol.grid;
  const std::size_t nc = g.cell_count(), nf = g.face_count();
  sol.obstacle.assign(nc, 0);
  sol.exterior.assign(nc, 0);
  std::vector<unsigned char> solid(nc, 0);
  std::size_t n_obstacle = 0;
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    const Point3 x = g.cell_center(i, j, k);
    sol.obstacle[c] = shape.contains({x[0] / s, x[1] / s, x[2] / s});
    sol.exterior[c] = norm(x) >= 1.0;
    solid[c] = sol.obstacle[c] | sol.exterior[c];
    n_obstacle += sol.obstacle[c];
  });
  if (n_obstacle == 0) throw PreconditionError("obstacle is not resolved by the cell grid");
  sol.penalty = numerics::penalty_from_solid(g, solid, 1.0);
  const std::vector<double> mu(nc, 1.0);
  sol.viscous = numerics::ViscousOperator(g, mu, numerics::ViscousForm::laplacian);
  const numerics::Lattice lc(g.dims());
  for (int i = 0; i < 3; ++i) {
    sol.target[i].assign(nf, 0.0);
    for_each_face(g, [&](int a, int ii, int jj, int kk, std::size_t f) {
      if (a != i || sol.penalty[f] == 0.0) return;
      Index3 p{ii, jj, kk};
      bool touches = p[a] < g.dims()[a] && sol.obstacle[lc(p)];
      p[a] -= 1;
      touches = touches || (p[a] >= 0 && sol.obstacle[lc(p)]);
      if (touches) sol.target[i][f] = 1.0;
    });
  }
  for (int i = 0; i < 3; ++i) {
    numerics::StokesProblem pb;
    pb.grid = g;
    pb.viscous = sol.viscous;
    pb.penalty = sol.penalty;
    pb.target = sol.target[i];
    numerics::SaddleSolver solver(std::move(pb));
    numerics::StokesSolution st = solver.solve(opt);
    sol.v[i] = std::move(st.u);
    sol.q[i] = std::move(st.p);
    sol.stats[i] = st.stats;
  }
  return sol;
}

DragMatrix drag_matrix(const CellSolution& sol) {
  DragMatrix dm;
  const StaggeredGrid& g = sol.grid;
  const std::size_t nf = g.face_count(), nc = g.cell_count();
  std::array<std::vector<double>, 3> av;
  for (int i = 0; i < 3; ++i) {
    av[i].resize(nf);
    sol.viscous.apply(sol.v[i].span(), av[i]);
  }
  std::vector<unsigned char> free(nf);
  const auto wall = numerics::wall_faces(g);
  for (std::size_t f = 0; f < nf; ++f) free[f] = !wall[f] && sol.penalty[f] == 0.0;
  const numerics::DivergenceOperator div(g, free);
  std::array<std::vector<double>, 3> bpen;
  for (int j = 0; j < 3; ++j) {
    bpen[j].resize(nc);
    div.apply_all(sol.target[j], bpen[j]);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      dm.C(i, j) = sol.viscous.bilinear(sol.v[i].span(), sol.v[j].span());
      dm.C_operator(i, j) = numerics::dot(sol.v[j].span(), av[i]);
      double f = 0.0;
      for (std::size_t q = 0; q < nf; ++q)
        if (sol.penalty[q] > 0.0) f += sol.target[j][q] * av[i][q];
      for (std::size_t c = 0; c < nc; ++c)
        if (div.active_cells()[c]) f += sol.q[i][c] * bpen[j][c];
      dm.C_force(i, j) = f;
    }
  const double scale = dm.C.diagonal().cwiseAbs().maxCoeff();
  dm.energy_gap = (dm.C - dm.C_operator).cwiseAbs().maxCoeff() / scale;
  dm.force_gap = (dm.C - dm.C_force).cwiseAbs().maxCoeff() / scale;
  for (int i = 0; i < 3; ++i) dm.divergence_residual = std::max(dm.divergence_residual, sol.stats[i].divergence_residual);
  return dm;
}

DecayReport decay_diagnostics(const CellSolution& sol, double r, double d) {
  if (!(sol.s * sol.shape.max_radius_bound() <= r + 1e-15 && r < d && d <= 1.0))
    throw PreconditionError("decay diagnostics need K inside B(0,r), r < d <= 1");
  DecayReport rep;
  rep.r = r;
  rep.d = d;
  const StaggeredGrid& g = sol.grid;
  const Index3 n = g.dims();
  const numerics::Lattice lc(n);
  const std::size_t nc = g.cell_count();
  for (int i = 0; i < 3; ++i) {
    // cell-centred velocity
    std::array<std::vector<double>, 3> vc;
    for (int a = 0; a < 3; ++a) vc[a].resize(nc);
    for_each_cell(g, [&](int ii, int jj, int kk, std::size_t c) {
      for (int a = 0; a < 3; ++a) {
        Index3 hi{ii, jj, kk};
        hi[a] += 1;
        vc[a][c] = 0.5 * (sol.v[i](a, ii, jj, kk) + sol.v[i](a, hi[0], hi[1], hi[2]));
      }
    });
    double cv = 0, cg = 0, cq = 0;
    for_each_cell(g, [&](int ii, int jj, int kk, std::size_t c) {
      if (sol.obstacle[c] || sol.exterior[c]) return;
      const Point3 x = g.cell_center(ii, jj, kk);
      const double rx = norm(x);
      if (rx <= r || rx >= 1.0) return;
      const double vm = std::sqrt(vc[0][c] * vc[0][c] + vc[1][c] * vc[1][c] + vc[2][c] * vc[2][c]);
      double g2 = 0.0;
      const Index3 p{ii, jj, kk};
      for (int b = 0; b < 3; ++b) {
        Index3 lo = p, hi = p;
        lo[b] = std::max(0, p[b] - 1);
        hi[b] = std::min(n[b] - 1, p[b] + 1);
        const double dx = g.axis(b).center(hi[b]) - g.axis(b).center(lo[b]);
        for (int a = 0; a < 3; ++a) {
          const double dv = (vc[a][lc(hi)] - vc[a][lc(lo)]) / dx;
          g2 += dv * dv;
        }
      }
      cv = std::max(cv, vm * rx / r);
      cg = std::max(cg, std::sqrt(g2) * rx * rx / r);
      cq = std::max(cq, std::abs(sol.q[i][c]) * rx * rx / r);
    });
    rep.c_velocity[i] = cv;
    rep.c_gradient[i] = cg;
    rep.c_pressure[i] = cq;
    double lv = 0.0;
    for_each_face(g, [&](int a, int ii, int jj, int kk, std::size_t f) {
      const Point3 x = g.face_center(a, {ii, jj, kk});
      if (norm(x) < d) lv += g.face_volume(a, {ii, jj, kk}) * sol.v[i][f] * sol.v[i][f];
    });
    double lq = 0.0;
    for_each_cell(g, [&](int ii, int jj, int kk, std::size_t c) {
      if (sol.obstacle[c] || sol.exterior[c]) return;
      if (norm(g.cell_center(ii, jj, kk)) < d) lq += g.cell_volume(ii, jj, kk) * sol.q[i][c] * sol.q[i][c];
    });
    rep.l2_velocity[i] = lv;
    rep.l2_gradient[i] = sol.viscous.energy_in(
        sol.v[i].span(), [d](const Point3& x) { return norm(x) < d; }, false);
    rep.l2_pressure[i] = lq;
    rep.ratio_velocity[i] = lv / (r * r * d);
    rep.ratio_gradient[i] = rep.l2_gradient[i] / r;
    rep.ratio_pressure[i] = lq / r;
  }
  return rep;
}

}  // namespace homog::cell
