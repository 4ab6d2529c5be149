#pragma once

#include <Eigen/SparseCore>
#include <span>
#include <vector>

#include "homog/numerics/grid.hpp"
#include "homog/numerics/kernels.hpp"
#include "homog/numerics/krylov.hpp"

namespace homog::numerics {

using CsrMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, long>;

// Row-compressed operator with a declared symmetry flag.
class SparseOperator {
 public:
  SparseOperator() = default;
  SparseOperator(CsrMatrix m, bool symmetric);

  const CsrMatrix& matrix() const { return m_; }
  bool symmetric() const { return symmetric_; }
  long rows() const { return m_.rows(); }
  void apply(std::span<const double> x, std::span<double> y, Exec exec = Exec::parallel) const;
  std::vector<double> diagonal() const;
  // Checks A(i,j) == A(j,i) on `samples` pseudo-random stored entries.
  bool check_symmetry(int samples = 1000, double tol = 1e-12) const;
  LinearMap as_map() const;

 private:
  CsrMatrix m_;
  bool symmetric_ = false;
};

struct SpdSolve {
  std::vector<double> x;
  KrylovResult info;
};

// Jacobi-preconditioned CG. Throws SolverError / IndefiniteOperator.
SpdSolve solve_spd(const SparseOperator& a, std::span<const double> b, double tol, int maxit);

// 7-point Dirichlet Laplacian (cell-centred, walls half a cell away) on a grid.
SparseOperator assemble_laplacian(const StaggeredGrid& g);

}  // namespace homog::numerics
