#pragma once

#include <span>
#include <string>
#include <vector>

#include "homog/numerics/fields.hpp"
#include "homog/numerics/friction.hpp"

namespace homog::physics {

using numerics::Point3;

// mu(theta) = mu0 + mu2 theta^2
struct Viscosity {
  double mu0 = 1.0;
  double mu2 = 0.0;
  double operator()(double theta) const { return mu0 + mu2 * theta * theta; }
  bool is_constant() const { return mu2 == 0.0; }
  // Bounds on [-theta_bar, theta_bar].
  double lower(double theta_bar) const;
  double upper(double theta_bar) const;
};

struct PhysParams {
  double kappa_f = 1.0;
  double kappa_s = 1.0;
  Viscosity viscosity;
  Point3 grad_F{0.0, 0.0, 1.0};  // F(x) = grad_F . x
  double rho_low = 0.5;
  double rho_high = 2.0;
  double rho_s = 1.0;
  double theta_bar = 10.0;       // range on which the viscosity bounds are certified

  double mu_low() const { return viscosity.lower(theta_bar); }
  double mu_high() const { return viscosity.upper(theta_bar); }
  // Throws ConfigError naming the violated condition.
  void validate() const;
};

// kappa_s on solid cells, kappa_f elsewhere (solid may be empty).
std::vector<double> conductivity(const numerics::StaggeredGrid& g, std::span<const unsigned char> solid,
                                 const PhysParams& p);
std::vector<double> viscosity_field(std::span<const double> theta, const PhysParams& p);

// Buoyancy pair. With (G theta)_f = V_f dF/dx_a (theta_L + theta_R)/2 on interior faces,
// the momentum force is -G theta and the heat source is G^T u, so the two
// work terms cancel exactly in the discrete energy balance.
std::vector<double> buoyancy_force(const numerics::StaggeredGrid& g, std::span<const double> theta,
                                   const Point3& grad_F);
std::vector<double> heat_source(const numerics::StaggeredGrid& g, std::span<const double> u, const Point3& grad_F);

// Friction weights V_c mu(theta_c) D_c for the Brinkman term.
std::vector<numerics::Sym3> friction_weights(const numerics::StaggeredGrid& g, std::span<const double> mu_cell,
                                             std::span<const numerics::Sym3> D_cell);

}  // namespace homog::physics
