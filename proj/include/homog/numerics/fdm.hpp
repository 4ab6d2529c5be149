#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

#include "homog/numerics/grid.hpp"

namespace homog::numerics {

// One-dimensional stiffness/mass pair on a line of unknowns.
struct Line1D {
  Eigen::MatrixXd stiffness;     // symmetric tridiagonal
  Eigen::VectorXd mass;          // positive diagonal
  static Line1D faces_dirichlet(const AxisCoords& ax);  // interior nodes, zero at both walls
  static Line1D cells_dirichlet(const AxisCoords& ax);  // cell centres, walls half a cell away
  static Line1D cells_neumann(const AxisCoords& ax);    // cell centres, no-flux walls
};

// Fast diagonalization solver for
//   sigma * (M0 x M1 x M2) + sum_d c_d * (.. K_d ..)
// on a tensor lattice. Zero (null-space) eigenvalues are pseudo-inverted.
class FastDiagonalization {
 public:
  FastDiagonalization() = default;
  explicit FastDiagonalization(std::array<Line1D, 3> lines);

  void set_coefficients(double sigma, std::array<double, 3> c);
  std::array<int, 3> dims() const { return dims_; }
  std::size_t size() const { return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]; }
  // x <- operator^+ x (in place, lattice order i + n0*(j + n1*k)).
  void solve(std::span<double> x) const;

 private:
  std::array<int, 3> dims_{0, 0, 0};
  std::array<Eigen::MatrixXd, 3> s_;  // M-orthonormal eigenvectors: S^T M S = I
  std::array<Eigen::VectorXd, 3> lambda_;
  std::vector<double> inv_eig_;
  mutable std::vector<double> work_;

  void transform(std::span<double> x, bool forward) const;
};

}  // namespace homog::numerics
