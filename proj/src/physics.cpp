#include "homog/physics.hpp"

#include <cmath>

#include "homog/errors.hpp"

namespace homog::physics {

using numerics::for_each_cell;
using numerics::for_each_face;
using numerics::StaggeredGrid;

double Viscosity::lower(double theta_bar) const {
  return mu2 >= 0.0 ? mu0 : mu0 + mu2 * theta_bar * theta_bar;
}

double Viscosity::upper(double theta_bar) const {
  return mu2 >= 0.0 ? mu0 + mu2 * theta_bar * theta_bar : mu0;
}

void PhysParams::validate() const {
  if (!(kappa_f > 0.0)) throw ConfigError("kappa_f must be positive");
  if (!(kappa_s > 0.0)) throw ConfigError("kappa_s must be positive");
  if (!(theta_bar > 0.0)) throw ConfigError("theta_bar must be positive");
  if (!(mu_low() > 0.0)) throw ConfigError("viscosity must stay positive on [-theta_bar, theta_bar]");
  if (!(rho_low > 0.0 && rho_low <= rho_s && rho_s <= rho_high))
    throw ConfigError("density bounds need 0 < rho_low <= rho_s <= rho_high");
  for (double g : grad_F)
    if (!std::isfinite(g)) throw ConfigError("grad F must be finite");
}

std::vector<double> conductivity(const StaggeredGrid& g, std::span<const unsigned char> solid, const PhysParams& p) {
  std::vector<double> k(g.cell_count(), p.kappa_f);
  for (std::size_t c = 0; c < solid.size(); ++c)
    if (solid[c]) k[c] = p.kappa_s;
  return k;
}

std::vector<double> viscosity_field(std::span<const double> theta, const PhysParams& p) {
  std::vector<double> mu(theta.size());
  for (std::size_t c = 0; c < theta.size(); ++c) mu[c] = p.viscosity(theta[c]);
  return mu;
}

std::vector<double> buoyancy_force(const StaggeredGrid& g, std::span<const double> theta, const Point3& grad_F) {
  std::vector<double> f(g.face_count(), 0.0);
  const auto n = g.dims();
  for_each_face(g, [&](int a, int i, int j, int k, std::size_t idx) {
    const numerics::Index3 p{i, j, k};
    if (p[a] == 0 || p[a] == n[a] || grad_F[a] == 0.0) return;
    numerics::Index3 lo = p;
    lo[a] -= 1;
    const double tf = 0.5 * (theta[g.cell_index(lo[0], lo[1], lo[2])] + theta[g.cell_index(i, j, k)]);
    f[idx] = -g.face_volume(a, p) * grad_F[a] * tf;
  });
  return f;
}

std::vector<double> heat_source(const StaggeredGrid& g, std::span<const double> u, const Point3& grad_F) {
  std::vector<double> s(g.cell_count(), 0.0);
  const auto n = g.dims();
  for_each_face(g, [&](int a, int i, int j, int k, std::size_t idx) {
    const numerics::Index3 p{i, j, k};
    if (p[a] == 0 || p[a] == n[a] || grad_F[a] == 0.0) return;
    numerics::Index3 lo = p;
    lo[a] -= 1;
    const double w = 0.5 * g.face_volume(a, p) * grad_F[a] * u[idx];
    s[g.cell_index(lo[0], lo[1], lo[2])] += w;
    s[g.cell_index(i, j, k)] += w;
  });
  return s;
}

std::vector<numerics::Sym3> friction_weights(const StaggeredGrid& g, std::span<const double> mu_cell,
                                             std::span<const numerics::Sym3> D_cell) {
  std::vector<numerics::Sym3> w(g.cell_count());
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    const double s = g.cell_volume(i, j, k) * mu_cell[c];
    for (int q = 0; q < 6; ++q) w[c][q] = s * D_cell[c][q];
  });
  return w;
}

}  // namespace homog::physics
