#pragma once

#include <Eigen/Dense>
#include <vector>

#include "homog/effective_tensor.hpp"
#include "homog/microscale.hpp"

namespace homog::macro {

using micro::FluidState;
using numerics::Sym3;
using numerics::StaggeredGrid;

Sym3 to_sym3(const Eigen::Matrix3d& D);
// Tensor per cell: the field value of the box holding each cell centre.
std::vector<Sym3> sample_tensor(const StaggeredGrid& g, const effective::EffectiveTensorField& D);
std::vector<Sym3> uniform_tensor(const StaggeredGrid& g, const Eigen::Matrix3d& D);

// Unperforated medium with friction mu(theta) D u; an all-zero D is dropped
// so that the D = 0 problem is the plain Stokes problem.
micro::Medium homogenized_medium(const StaggeredGrid& g, std::vector<Sym3> D);

// -div(mu(theta)(grad U + grad U^T)) + mu(theta) D U + grad P = f, div U = 0, U = 0 on the walls.
// Throws PreconditionError if some D_c is not symmetric PSD or mu drops below its lower bound.
numerics::StokesSolution solve_homogenized_steady(const StaggeredGrid& g, const physics::PhysParams& p,
                                                  const std::vector<Sym3>& D, const numerics::CellField& theta,
                                                  std::span<const double> force,
                                                  const numerics::SaddleOptions& opt = {});

// Same stepping scheme as the perforated problem, with kappa_f everywhere
// and the friction folded into the implicit solve.
micro::EvolveResult evolve_homogenized(const StaggeredGrid& g, const physics::PhysParams& p,
                                       const std::vector<Sym3>& D, FluidState s0, const micro::EvolveOptions& opt,
                                       const micro::StepObserver& observer = {});

}  // namespace homog::macro
