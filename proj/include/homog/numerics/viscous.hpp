#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "homog/numerics/fields.hpp"
#include "homog/numerics/grid.hpp"
#include "homog/numerics/kernels.hpp"

namespace homog::numerics {

enum class ViscousForm {
  laplacian,           // -div(mu grad u), energy  int mu |grad u|^2
  symmetric_gradient,  // -div(mu (grad u + grad u^T)), energy  int mu/2 |grad u + grad u^T|^2
};

// Matrix-free MAC viscous operator. Defined through its quadratic energy
//   Q(u) = sum_cells w_c (d_a u_a)^2 + sum_edges w_e s_e(u)^2,
// with w = mu * control volume (edge mu = arithmetic mean of the adjacent
// cells), so A = Hess(Q)/2 is symmetric and u^T A u = Q(u) exactly.
// Wall faces are Dirichlet-zero; tangential walls sit half a cell away.
class ViscousOperator {
 public:
  ViscousOperator() = default;
  ViscousOperator(const StaggeredGrid& g, std::span<const double> mu_cell, ViscousForm form);

  const StaggeredGrid& grid() const { return grid_; }
  ViscousForm form() const { return form_; }

  // out = A u (gather form, one face per iteration). Wall entries of out are 0.
  void apply(std::span<const double> u, std::span<double> out, Exec exec = Exec::parallel) const;
  // Diagonal of A (wall entries 1 so it can be inverted blindly).
  std::vector<double> diagonal() const;
  // sum_cells + sum_edges of weighted strain products, computed from explicit
  // discrete gradients (independent of apply()).
  double bilinear(std::span<const double> u, std::span<const double> v) const;
  double energy(std::span<const double> u) const { return bilinear(u, u); }
  // Same quadrature restricted to terms whose sample point satisfies `inside`.
  // With weight_by_mu = false the viscosity factor is dropped (plain int |grad u|^2).
  double energy_in(std::span<const double> u, const std::function<bool(const Point3&)>& inside,
                   bool weight_by_mu = true) const;
  // Volume-weighted mean viscosity.
  double mean_mu() const { return mean_mu_; }
  const std::vector<double>& mu_cell() const { return mu_cell_; }

 private:
  StaggeredGrid grid_;
  ViscousForm form_ = ViscousForm::laplacian;
  std::vector<double> mu_cell_;
  std::vector<double> cell_w_;               // factor * mu * V per cell
  std::array<std::vector<double>, 3> edge_w_;  // plane c: edges parallel to axis c
  std::array<std::vector<double>, 3> inv_w_, inv_d_;
  double mean_mu_ = 1.0;

  template <class Visit>
  double strain_sum(std::span<const double> u, std::span<const double> v, Visit&& keep, bool use_mu) const;
};

// Full-space index helpers shared by the stencil code.
struct Lattice {
  Index3 n;
  std::array<long, 3> stride;
  explicit Lattice(Index3 dims) : n(dims), stride{1, dims[0], static_cast<long>(dims[0]) * dims[1]} {}
  long operator()(int i, int j, int k) const { return i + stride[1] * j + stride[2] * k; }
  long operator()(const Index3& p) const { return p[0] + stride[1] * p[1] + stride[2] * p[2]; }
  long size() const { return static_cast<long>(n[0]) * n[1] * n[2]; }
};

inline Index3 edge_dims(const Index3& cells, int c) {
  Index3 d = cells;
  for (int a = 0; a < 3; ++a)
    if (a != c) ++d[a];
  return d;
}

}  // namespace homog::numerics
