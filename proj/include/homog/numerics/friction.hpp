#pragma once

#include <array>
#include <span>
#include <vector>

#include "homog/numerics/grid.hpp"
#include "homog/numerics/kernels.hpp"

namespace homog::numerics {

// Symmetric 3x3 stored as xx, yy, zz, xy, xz, yz.
using Sym3 = std::array<double, 6>;

// Zeroth-order resistance with energy
//   sum_c (I u)_c . W_c (I u)_c + sum_c sum_a W_c,aa (u_a,hi - u_a,lo)^2 / 4,
// where I averages the two faces of each cell to the centre and
// W_c = V_c * mu_c * D_c. The second sum lumps the diagonal part onto the
// faces (sum_a W_aa (u_lo^2 + u_hi^2) / 2), so odd-even face modes are not in
// the kernel. Symmetric, and PSD whenever every D_c is.
class FrictionOperator {
 public:
  FrictionOperator() = default;
  FrictionOperator(const StaggeredGrid& g, std::vector<Sym3> weights);

  bool empty() const { return weights_.empty(); }
  // out += F u
  void apply_add(std::span<const double> u, std::span<double> out, Exec exec = Exec::parallel) const;
  double energy(std::span<const double> u) const;
  std::vector<double> diagonal() const;
  // sum_c W_c,aa / |box| per component: a mean resistance density
  std::array<double, 3> mean_density() const;

 private:
  StaggeredGrid grid_;
  std::vector<Sym3> weights_;
  mutable std::vector<std::array<double, 3>> cell_force_;
};

}  // namespace homog::numerics
