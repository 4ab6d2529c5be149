#include "homog/numerics/divergence.hpp"

#include <cmath>
#include <stdexcept>

#include "homog/numerics/fields.hpp"
#include "homog/numerics/viscous.hpp"

namespace homog::numerics {

DivergenceOperator::DivergenceOperator(const StaggeredGrid& g, std::vector<unsigned char> free_faces)
    : grid_(g), free_(std::move(free_faces)) {
  const auto wall = wall_faces(g);
  if (free_.empty()) {
    free_.resize(g.face_count());
    for (std::size_t f = 0; f < free_.size(); ++f) free_[f] = wall[f] ? 0 : 1;
  }
  if (free_.size() != g.face_count()) throw std::invalid_argument("free-face mask size mismatch");
  for (std::size_t f = 0; f < free_.size(); ++f)
    if (wall[f]) free_[f] = 0;
  area_face_.resize(g.face_count());
  active_.assign(g.cell_count(), 0);
  const Lattice lc(g.dims());
  for_each_face(g, [&](int a, int i, int j, int k, std::size_t f) {
    const Index3 p{i, j, k};
    area_face_[f] = g.face_area(a, p);
    if (!free_[f]) return;
    Index3 lo = p;
    lo[a] -= 1;
    active_[lc(lo)] = 1;
    active_[lc(p)] = 1;
  });
  n_active_ = 0;
  for (auto c : active_) n_active_ += c;
}

template <bool Masked, bool Abs>
void DivergenceOperator::apply_impl(std::span<const double> u, std::span<double> out, Exec exec) const {
  const Index3 n = grid_.dims();
  const Lattice lc(n);
  std::array<Lattice, 3> lf{Lattice(grid_.face_dims(0)), Lattice(grid_.face_dims(1)), Lattice(grid_.face_dims(2))};
  const std::array<std::size_t, 3> off{0, grid_.face_count(0), grid_.face_count(0) + grid_.face_count(1)};
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        double s = 0.0;
        for (int a = 0; a < 3; ++a) {
          const long lo = off[a] + lf[a](i, j, k);
          const long hi = lo + lf[a].stride[a];
          double ul = u[lo], uh = u[hi];
          if constexpr (Masked) {
            ul = free_[lo] ? ul : 0.0;
            uh = free_[hi] ? uh : 0.0;
          }
          if constexpr (Abs)
            s += area_face_[lo] * (std::abs(uh) + std::abs(ul));
          else
            s -= area_face_[lo] * (uh - ul);
        }
        out[lc(i, j, k)] = s;
      }
}

void DivergenceOperator::apply(std::span<const double> u, std::span<double> out, Exec exec) const {
  apply_impl<true, false>(u, out, exec);
}

void DivergenceOperator::apply_all(std::span<const double> u, std::span<double> out, Exec exec) const {
  apply_impl<false, false>(u, out, exec);
}

void DivergenceOperator::apply_abs(std::span<const double> u, std::span<double> out) const {
  apply_impl<false, true>(u, out, Exec::parallel);
}

void DivergenceOperator::apply_transpose(std::span<const double> p, std::span<double> out, Exec exec) const {
  const Index3 n = grid_.dims();
  const Lattice lc(n);
  for (int a = 0; a < 3; ++a) {
    const Lattice lf(grid_.face_dims(a));
    const std::size_t off = a == 0 ? 0 : (a == 1 ? grid_.face_count(0) : grid_.face_count(0) + grid_.face_count(1));
    const int nk = lf.n[2];
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (int k = 0; k < nk; ++k)
      for (int j = 0; j < lf.n[1]; ++j)
        for (int i = 0; i < lf.n[0]; ++i) {
          const long f = off + lf(i, j, k);
          if (!free_[f]) {
            out[f] = 0.0;
            continue;
          }
          const long ch = lc(i, j, k);
          out[f] = area_face_[f] * (p[ch] - p[ch - lc.stride[a]]);
        }
  }
}

}  // namespace homog::numerics
