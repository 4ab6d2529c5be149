#include "homog/numerics/fdm.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace homog::numerics {

Line1D Line1D::faces_dirichlet(const AxisCoords& ax) {
  const int m = ax.cells() - 1;
  Line1D l{Eigen::MatrixXd::Zero(m, m), Eigen::VectorXd(m)};
  for (int r = 0; r < m; ++r) {
    const int node = r + 1;
    l.mass(r) = ax.dual(node);
    const double wl = 1.0 / ax.width(node - 1), wr = 1.0 / ax.width(node);
    l.stiffness(r, r) = wl + wr;
    if (r > 0) l.stiffness(r, r - 1) = -wl;
    if (r + 1 < m) l.stiffness(r, r + 1) = -wr;
  }
  return l;
}

Line1D Line1D::cells_dirichlet(const AxisCoords& ax) {
  const int m = ax.cells();
  Line1D l{Eigen::MatrixXd::Zero(m, m), Eigen::VectorXd(m)};
  for (int r = 0; r < m; ++r) {
    l.mass(r) = ax.width(r);
    const double dl = 1.0 / ax.dual(r), dr = 1.0 / ax.dual(r + 1);
    l.stiffness(r, r) = dl + dr;
    if (r > 0) l.stiffness(r, r - 1) = -dl;
    if (r + 1 < m) l.stiffness(r, r + 1) = -dr;
  }
  return l;
}

Line1D Line1D::cells_neumann(const AxisCoords& ax) {
  const int m = ax.cells();
  Line1D l{Eigen::MatrixXd::Zero(m, m), Eigen::VectorXd(m)};
  for (int r = 0; r < m; ++r) {
    l.mass(r) = ax.width(r);
    if (r > 0) {
      const double dl = 1.0 / ax.dual(r);
      l.stiffness(r, r) += dl;
      l.stiffness(r, r - 1) = -dl;
    }
    if (r + 1 < m) {
      const double dr = 1.0 / ax.dual(r + 1);
      l.stiffness(r, r) += dr;
      l.stiffness(r, r + 1) = -dr;
    }
  }
  return l;
}

FastDiagonalization::FastDiagonalization(std::array<Line1D, 3> lines) {
  for (int d = 0; d < 3; ++d) {
    const Line1D& l = lines[d];
    dims_[d] = static_cast<int>(l.mass.size());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(l.stiffness, Eigen::MatrixXd(l.mass.asDiagonal()));
    if (es.info() != Eigen::Success) throw std::runtime_error("fast diagonalization: eigensolver failed");
    s_[d] = es.eigenvectors();
    lambda_[d] = es.eigenvalues();
  }
  work_.resize(size());
  set_coefficients(0.0, {1.0, 1.0, 1.0});
}

void FastDiagonalization::set_coefficients(double sigma, std::array<double, 3> c) {
  inv_eig_.resize(size());
  double lmax = 0.0;
  for (int d = 0; d < 3; ++d) lmax += std::abs(c[d]) * lambda_[d].cwiseAbs().maxCoeff();
  lmax += std::abs(sigma);
  const double floor = 1e-11 * lmax;
  std::size_t q = 0;
  for (int k = 0; k < dims_[2]; ++k)
    for (int j = 0; j < dims_[1]; ++j)
      for (int i = 0; i < dims_[0]; ++i) {
        const double e = sigma + c[0] * lambda_[0](i) + c[1] * lambda_[1](j) + c[2] * lambda_[2](k);
        inv_eig_[q++] = std::abs(e) > floor ? 1.0 / e : 0.0;
      }
}

// Apply S^T (forward) or S (backward) along each axis.
void FastDiagonalization::transform(std::span<double> x, bool forward) const {
  const int n0 = dims_[0], n1 = dims_[1], n2 = dims_[2];
  using Map = Eigen::Map<Eigen::MatrixXd>;
  // axis 0: X (n0 x n1 n2) -> S0^T X
  {
    Map X(x.data(), n0, static_cast<long>(n1) * n2);
    Map W(work_.data(), n0, static_cast<long>(n1) * n2);
    if (forward)
      W.noalias() = s_[0].transpose() * X;
    else
      W.noalias() = s_[0] * X;
    X = W;
  }
  // axis 1: per k-slab, X_k (n0 x n1) -> X_k S1 (forward) / X_k S1^T
  for (int k = 0; k < n2; ++k) {
    Map X(x.data() + static_cast<long>(k) * n0 * n1, n0, n1);
    Map W(work_.data() + static_cast<long>(k) * n0 * n1, n0, n1);
    if (forward)
      W.noalias() = X * s_[1];
    else
      W.noalias() = X * s_[1].transpose();
    X = W;
  }
  // axis 2: X (n0 n1 x n2)
  {
    Map X(x.data(), static_cast<long>(n0) * n1, n2);
    Map W(work_.data(), static_cast<long>(n0) * n1, n2);
    if (forward)
      W.noalias() = X * s_[2];
    else
      W.noalias() = X * s_[2].transpose();
    X = W;
  }
}

void FastDiagonalization::solve(std::span<double> x) const {
  if (x.size() != size()) throw std::invalid_argument("fast diagonalization: size mismatch");
  transform(x, true);
  for (std::size_t q = 0; q < x.size(); ++q) x[q] *= inv_eig_[q];
  transform(x, false);
}

}  // namespace homog::numerics
