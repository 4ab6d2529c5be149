#include "homog/homogenized.hpp"

#include "homog/errors.hpp"

namespace homog::macro {

Sym3 to_sym3(const Eigen::Matrix3d& D) { return {D(0, 0), D(1, 1), D(2, 2), D(0, 1), D(0, 2), D(1, 2)}; }

std::vector<Sym3> sample_tensor(const StaggeredGrid& g, const effective::EffectiveTensorField& D) {
  std::vector<Sym3> out(g.cell_count());
  numerics::for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    const auto x = g.cell_center(i, j, k);
    out[c] = to_sym3(D.at({x[0], x[1], x[2]}));
  });
  return out;
}

std::vector<Sym3> uniform_tensor(const StaggeredGrid& g, const Eigen::Matrix3d& D) {
  return std::vector<Sym3>(g.cell_count(), to_sym3(D));
}

namespace {
void check_psd(const std::vector<Sym3>& D) {
  for (const auto& d : D) {
    Eigen::Matrix3d m;
    m << d[0], d[3], d[4], d[3], d[1], d[5], d[4], d[5], d[2];
    const double tr = std::abs(m.trace());
    if (Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(m).eigenvalues()(0) < -1e-12 * std::max(tr, 1e-300))
      throw PreconditionError("Brinkman tensor is not positive semidefinite");
  }
}
}  // namespace

micro::Medium homogenized_medium(const StaggeredGrid& g, std::vector<Sym3> D) {
  check_psd(D);
  const bool zero = std::all_of(D.begin(), D.end(), [](const Sym3& d) {
    return std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; });
  });
  if (zero) D.clear();
  return micro::open_medium(g, std::move(D));
}

numerics::StokesSolution solve_homogenized_steady(const StaggeredGrid& g, const physics::PhysParams& p,
                                                  const std::vector<Sym3>& D, const numerics::CellField& theta,
                                                  std::span<const double> force, const numerics::SaddleOptions& opt) {
  p.validate();
  for (std::size_t c = 0; c < theta.size(); ++c)
    if (p.viscosity(theta[c]) < p.mu_low() * (1 - 1e-12))
      throw PreconditionError("viscosity below its certified lower bound (theta outside the certified range)");
  return micro::solve_steady_stokes(homogenized_medium(g, D), p, theta, force, opt);
}

micro::EvolveResult evolve_homogenized(const StaggeredGrid& g, const physics::PhysParams& p,
                                       const std::vector<Sym3>& D, FluidState s0, const micro::EvolveOptions& opt,
                                       const micro::StepObserver& observer) {
  return micro::evolve(homogenized_medium(g, D), p, std::move(s0), opt, observer);
}

}  // namespace homog::macro
