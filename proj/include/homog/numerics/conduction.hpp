#pragma once

#include <functional>
#include <span>
#include <vector>

#include "homog/numerics/fdm.hpp"
#include "homog/numerics/grid.hpp"
#include "homog/numerics/kernels.hpp"
#include "homog/numerics/krylov.hpp"

namespace homog::numerics {

// Cell-centred  -div(kappa grad theta)  with Dirichlet walls half a cell away.
// Interior face conductance is the series (harmonic) combination of the two
// half cells, so flux is continuous across coefficient jumps.
class ConductionOperator {
 public:
  ConductionOperator() = default;
  ConductionOperator(const StaggeredGrid& g, std::span<const double> kappa_cell);

  const StaggeredGrid& grid() const { return grid_; }
  void apply(std::span<const double> theta, std::span<double> out, Exec exec = Exec::parallel) const;
  // Right-hand side contribution of nonzero wall values g(x) (x on the wall face centre).
  std::vector<double> boundary_rhs(const std::function<double(const Point3&)>& g) const;
  // sum over faces of T_f (jump)^2, zero wall data: theta^T H theta.
  double energy(std::span<const double> theta) const;
  double mean_kappa() const { return mean_kappa_; }
  std::vector<double> diagonal() const;

 private:
  StaggeredGrid grid_;
  std::array<std::vector<double>, 3> cond_;  // per face (face lattice of each axis)
  double mean_kappa_ = 1.0;
};

struct ConductionSolve {
  std::vector<double> theta;
  KrylovResult info;
};

// PCG with a constant-coefficient fast-diagonalization preconditioner.
class ConductionSolver {
 public:
  ConductionSolver(const StaggeredGrid& g, std::span<const double> kappa_cell);
  const ConductionOperator& op() const { return op_; }
  // Solves H theta = rhs (rhs already integrated over cells). `guess` may be empty.
  ConductionSolve solve(std::span<const double> rhs, std::span<const double> guess = {}, double rtol = 1e-11,
                        int maxit = 2000) const;

 private:
  ConductionOperator op_;
  FastDiagonalization fdm_;
};

}  // namespace homog::numerics
