#include "homog/numerics/conduction.hpp"

#include <stdexcept>

#include "homog/numerics/fields.hpp"
#include "homog/numerics/viscous.hpp"

namespace homog::numerics {

ConductionOperator::ConductionOperator(const StaggeredGrid& g, std::span<const double> kappa_cell) : grid_(g) {
  if (kappa_cell.size() != g.cell_count()) throw std::invalid_argument("conductivity size mismatch");
  const Index3 n = g.dims();
  const Lattice lc(n);
  double kv = 0.0;
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    if (!(kappa_cell[c] > 0)) throw std::invalid_argument("conductivity must be positive");
    kv += kappa_cell[c] * g.cell_volume(i, j, k);
  });
  mean_kappa_ = kv / g.volume();
  for (int a = 0; a < 3; ++a) {
    const Lattice lf(g.face_dims(a));
    cond_[a].assign(lf.size(), 0.0);
    const AxisCoords& ax = g.axis(a);
    for (int k = 0; k < lf.n[2]; ++k)
      for (int j = 0; j < lf.n[1]; ++j)
        for (int i = 0; i < lf.n[0]; ++i) {
          const Index3 p{i, j, k};
          const double area = g.face_area(a, p);
          double res = 0.0;  // thermal resistance of the two half cells
          if (p[a] > 0) {
            Index3 lo = p;
            lo[a] -= 1;
            res += 0.5 * ax.width(p[a] - 1) / kappa_cell[lc(lo)];
          }
          if (p[a] < n[a]) res += 0.5 * ax.width(p[a]) / kappa_cell[lc(p)];
          cond_[a][lf(p)] = area / res;
        }
  }
}

void ConductionOperator::apply(std::span<const double> th, std::span<double> out, Exec exec) const {
  const Index3 n = grid_.dims();
  const Lattice lc(n);
  const std::array<Lattice, 3> lf{Lattice(grid_.face_dims(0)), Lattice(grid_.face_dims(1)), Lattice(grid_.face_dims(2))};
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Index3 p{i, j, k};
        const long c = lc(p);
        const double v = th[c];
        double s = 0.0;
        for (int a = 0; a < 3; ++a) {
          const long flo = lf[a](p);
          const long fhi = flo + lf[a].stride[a];
          const double lo = p[a] > 0 ? th[c - lc.stride[a]] : 0.0;
          const double hi = p[a] < n[a] - 1 ? th[c + lc.stride[a]] : 0.0;
          s += cond_[a][flo] * (v - lo) + cond_[a][fhi] * (v - hi);
        }
        out[c] = s;
      }
}

std::vector<double> ConductionOperator::boundary_rhs(const std::function<double(const Point3&)>& g) const {
  std::vector<double> b(grid_.cell_count(), 0.0);
  const Index3 n = grid_.dims();
  const Lattice lc(n);
  for (int a = 0; a < 3; ++a) {
    const Lattice lf(grid_.face_dims(a));
    for (int k = 0; k < lf.n[2]; ++k)
      for (int j = 0; j < lf.n[1]; ++j)
        for (int i = 0; i < lf.n[0]; ++i) {
          Index3 p{i, j, k};
          if (p[a] != 0 && p[a] != n[a]) continue;
          const double val = g(grid_.face_center(a, p));
          if (p[a] == n[a]) p[a] -= 1;
          b[lc(p)] += cond_[a][lf(Index3{i, j, k})] * val;
        }
  }
  return b;
}

double ConductionOperator::energy(std::span<const double> th) const {
  const Index3 n = grid_.dims();
  const Lattice lc(n);
  double e = 0.0;
  for (int a = 0; a < 3; ++a) {
    const Lattice lf(grid_.face_dims(a));
    for (int k = 0; k < lf.n[2]; ++k)
      for (int j = 0; j < lf.n[1]; ++j)
        for (int i = 0; i < lf.n[0]; ++i) {
          const Index3 p{i, j, k};
          double lo = 0.0, hi = 0.0;
          if (p[a] > 0) lo = th[lc(p) - lc.stride[a]];
          if (p[a] < n[a]) hi = th[lc(p)];
          e += cond_[a][lf(p)] * (hi - lo) * (hi - lo);
        }
  }
  return e;
}

std::vector<double> ConductionOperator::diagonal() const {
  std::vector<double> d(grid_.cell_count(), 0.0);
  const Index3 n = grid_.dims();
  const std::array<Lattice, 3> lf{Lattice(grid_.face_dims(0)), Lattice(grid_.face_dims(1)), Lattice(grid_.face_dims(2))};
  for_each_cell(grid_, [&](int i, int j, int k, std::size_t c) {
    for (int a = 0; a < 3; ++a) {
      const long flo = lf[a](i, j, k);
      d[c] += cond_[a][flo] + cond_[a][flo + lf[a].stride[a]];
    }
  });
  (void)n;
  return d;
}

ConductionSolver::ConductionSolver(const StaggeredGrid& g, std::span<const double> kappa_cell)
    : op_(g, kappa_cell),
      fdm_({Line1D::cells_dirichlet(g.axis(0)), Line1D::cells_dirichlet(g.axis(1)), Line1D::cells_dirichlet(g.axis(2))}) {
  const double k = op_.mean_kappa();
  fdm_.set_coefficients(0.0, {k, k, k});
}

ConductionSolve ConductionSolver::solve(std::span<const double> rhs, std::span<const double> guess, double rtol,
                                        int maxit) const {
  ConductionSolve out;
  out.theta.assign(rhs.size(), 0.0);
  if (!guess.empty()) std::copy(guess.begin(), guess.end(), out.theta.begin());
  KrylovOptions ko;
  ko.rtol = rtol;
  ko.max_iter = maxit;
  out.info = pcg([this](std::span<const double> x, std::span<double> y) { op_.apply(x, y); },
                 [this](std::span<const double> r, std::span<double> z) {
                   std::copy(r.begin(), r.end(), z.begin());
                   fdm_.solve(z);
                 },
                 rhs, out.theta, ko);
  return out;
}

}  // namespace homog::numerics
