#include "homog/numerics/friction.hpp"

#include <stdexcept>

#include "homog/numerics/fields.hpp"
#include "homog/numerics/viscous.hpp"

namespace homog::numerics {

namespace {
inline std::array<double, 3> mul(const Sym3& w, const std::array<double, 3>& v) {
  return {w[0] * v[0] + w[3] * v[1] + w[4] * v[2], w[3] * v[0] + w[1] * v[1] + w[5] * v[2],
          w[4] * v[0] + w[5] * v[1] + w[2] * v[2]};
}
}  // namespace

FrictionOperator::FrictionOperator(const StaggeredGrid& g, std::vector<Sym3> weights)
    : grid_(g), weights_(std::move(weights)) {
  if (!weights_.empty() && weights_.size() != g.cell_count()) throw std::invalid_argument("friction weights size mismatch");
}

void FrictionOperator::apply_add(std::span<const double> u, std::span<double> out, Exec exec) const {
  if (empty()) return;
  const Index3 n = grid_.dims();
  const Lattice lc(n);
  const std::array<Lattice, 3> lf{Lattice(grid_.face_dims(0)), Lattice(grid_.face_dims(1)), Lattice(grid_.face_dims(2))};
  const std::array<std::size_t, 3> off{0, grid_.face_count(0), grid_.face_count(0) + grid_.face_count(1)};
  cell_force_.resize(grid_.cell_count());
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        std::array<double, 3> ub;
        for (int a = 0; a < 3; ++a) {
          const long lo = off[a] + lf[a](i, j, k);
          ub[a] = 0.5 * (u[lo] + u[lo + lf[a].stride[a]]);
        }
        const long c = lc(i, j, k);
        cell_force_[c] = mul(weights_[c], ub);
      }
  for (int a = 0; a < 3; ++a) {
    const Lattice& l = lf[a];
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (int k = 0; k < l.n[2]; ++k)
      for (int j = 0; j < l.n[1]; ++j)
        for (int i = 0; i < l.n[0]; ++i) {
          const Index3 p{i, j, k};
          if (p[a] == 0 || p[a] == n[a]) continue;
          const long c = lc(p), cm = c - lc.stride[a];
          const long f = off[a] + l(p), s = l.stride[a];
          out[f] += 0.5 * (cell_force_[c][a] + cell_force_[cm][a]) +
                    0.25 * (weights_[c][a] * (u[f] - u[f + s]) + weights_[cm][a] * (u[f] - u[f - s]));
        }
  }
}

double FrictionOperator::energy(std::span<const double> u) const {
  if (empty()) return 0.0;
  const Index3 n = grid_.dims();
  const std::array<Lattice, 3> lf{Lattice(grid_.face_dims(0)), Lattice(grid_.face_dims(1)), Lattice(grid_.face_dims(2))};
  const std::array<std::size_t, 3> off{0, grid_.face_count(0), grid_.face_count(0) + grid_.face_count(1)};
  double e = 0.0;
  for_each_cell(grid_, [&](int i, int j, int k, std::size_t c) {
    std::array<double, 3> ub;
    for (int a = 0; a < 3; ++a) {
      const long lo = off[a] + lf[a](i, j, k);
      ub[a] = 0.5 * (u[lo] + u[lo + lf[a].stride[a]]);
    }
    const auto f = mul(weights_[c], ub);
    e += f[0] * ub[0] + f[1] * ub[1] + f[2] * ub[2];
    for (int a = 0; a < 3; ++a) {
      const long lo = off[a] + lf[a](i, j, k);
      const double jump = u[lo + lf[a].stride[a]] - u[lo];
      e += 0.25 * weights_[c][a] * jump * jump;
    }
  });
  (void)n;
  return e;
}

std::vector<double> FrictionOperator::diagonal() const {
  std::vector<double> d(grid_.face_count(), 0.0);
  if (empty()) return d;
  const Index3 n = grid_.dims();
  const Lattice lc(n);
  for_each_face(grid_, [&](int a, int i, int j, int k, std::size_t f) {
    const Index3 p{i, j, k};
    if (p[a] == 0 || p[a] == n[a]) return;
    const long c = lc(p);
    d[f] = 0.5 * (weights_[c][a] + weights_[c - lc.stride[a]][a]);
  });
  return d;
}

std::array<double, 3> FrictionOperator::mean_density() const {
  std::array<double, 3> m{0, 0, 0};
  if (empty()) return m;
  for (const auto& w : weights_)
    for (int a = 0; a < 3; ++a) m[a] += w[a];
  for (double& x : m) x /= grid_.volume();
  return m;
}

}  // namespace homog::numerics
