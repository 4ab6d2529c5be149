#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "homog/drag_cache.hpp"
#include "homog/geometry/domain.hpp"

namespace homog::effective {

using Index3 = std::array<int, 3>;

// Piecewise-constant 3x3 field on an n0 x n1 x n2 partition of a box.
class EffectiveTensorField {
 public:
  EffectiveTensorField() = default;
  EffectiveTensorField(geometry::Box box, Index3 dims);

  const geometry::Box& box() const { return box_; }
  const Index3& dims() const { return dims_; }
  std::size_t size() const { return D_.size(); }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + dims_[0] * (static_cast<std::size_t>(j) + dims_[1] * static_cast<std::size_t>(k));
  }
  // Box containing x (points on a shared face go to the upper box, clamped at the far side).
  Index3 locate(const geometry::Point3& x) const;
  double box_volume() const;
  geometry::Box sub_box(int i, int j, int k) const;

  Eigen::Matrix3d& operator[](std::size_t m) { return D_[m]; }
  const Eigen::Matrix3d& operator[](std::size_t m) const { return D_[m]; }
  const Eigen::Matrix3d& at(const geometry::Point3& x) const;
  const std::vector<Eigen::Matrix3d>& values() const { return D_; }

  // Volume-weighted average onto a partition whose dims divide these.
  EffectiveTensorField coarsen(Index3 coarse) const;
  // min eigenvalue over boxes (>= -1e-12 trace expected)
  double min_eigenvalue() const;
  bool is_zero() const;

  // "effective-tensor v1", box, dims, then one line of 9 entries per box.
  std::string to_text() const;
  static EffectiveTensorField from_text(const std::string& text);
  void save(const std::filesystem::path& p) const;
  static EffectiveTensorField load(const std::filesystem::path& p);

 private:
  geometry::Box box_;
  Index3 dims_{1, 1, 1};
  std::vector<Eigen::Matrix3d> D_;
};

// Partition of the box into eps-cells (rounded to the nearest integer count per axis).
Index3 lattice_partition(const geometry::Box& box, double eps);

// D_m = |B_m|^{-1} sum over holes centred in B_m of C(eps^3 * shape).
// Missing drag entries are computed when allow_compute, else CacheMiss.
EffectiveTensorField assemble_effective_tensor(const geometry::PerforatedDomain& domain, Index3 partition,
                                               cell::DragCache& cache, const cell::CellGridSpec& spec = {},
                                               bool allow_compute = true);

struct PeriodicTensorReport {
  Eigen::Matrix3d D_inf = Eigen::Matrix3d::Zero();
  std::vector<double> eps;             // as given
  std::vector<double> scales;          // obstacle scale r0 * eps^3 per level
  std::vector<Eigen::Matrix3d> D;      // eps^-3 C(r0 eps^3 shape) per level
  bool unreliable = false;
  std::string note;
};

// Polynomial (Neville) extrapolation of eps^-3 C(r0 eps^3 shape) to eps^3 -> 0.
// Pre: at least two levels, eps strictly decreasing, r0 eps^3 <= 1/2.
PeriodicTensorReport periodic_effective_tensor(const geometry::HoleShape& shape, double r0,
                                               const std::vector<double>& eps, cell::DragCache& cache,
                                               const cell::CellGridSpec& spec = {});

// Neville's algorithm: value at 0 of the interpolant through (x_k, y_k).
double extrapolate_to_zero(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace homog::effective
