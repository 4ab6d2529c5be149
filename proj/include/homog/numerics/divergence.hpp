#pragma once

#include <span>
#include <vector>

#include "homog/numerics/grid.hpp"
#include "homog/numerics/kernels.hpp"

namespace homog::numerics {

// Discrete divergence restricted to a set of free faces:
//   (B u)_c = -sum_a area * (u_hi - u_lo)  over free faces of cell c,
// and its exact transpose (B^T p)_f = area * (p_hi - p_lo) on free faces.
// Wall faces are never free. A cell is active if it has a free face.
class DivergenceOperator {
 public:
  DivergenceOperator() = default;
  // Empty mask = all interior faces free.
  DivergenceOperator(const StaggeredGrid& g, std::vector<unsigned char> free_faces = {});

  const StaggeredGrid& grid() const { return grid_; }
  const std::vector<unsigned char>& free_faces() const { return free_; }
  const std::vector<unsigned char>& active_cells() const { return active_; }
  std::size_t active_count() const { return n_active_; }

  void apply(std::span<const double> u, std::span<double> out, Exec exec = Exec::parallel) const;
  // Same stencil applied to all faces (no free mask): B_pen-type contributions.
  void apply_all(std::span<const double> u, std::span<double> out, Exec exec = Exec::parallel) const;
  void apply_transpose(std::span<const double> p, std::span<double> out, Exec exec = Exec::parallel) const;
  // |B| |u|: scale for relative divergence residuals.
  void apply_abs(std::span<const double> u, std::span<double> out) const;

 private:
  StaggeredGrid grid_;
  std::vector<unsigned char> free_, active_;
  std::vector<double> area_face_;  // per face, in flat order
  std::size_t n_active_ = 0;

  template <bool Masked, bool Abs>
  void apply_impl(std::span<const double> u, std::span<double> out, Exec exec) const;
};

}  // namespace homog::numerics
