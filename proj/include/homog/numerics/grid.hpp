#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace homog::numerics {

using Index3 = std::array<int, 3>;
using Point3 = std::array<double, 3>;

// One axis of a tensor-product grid: n cells bounded by n + 1 nodes.
class AxisCoords {
 public:
  AxisCoords() = default;
  explicit AxisCoords(std::vector<double> nodes);

  static AxisCoords uniform(double lo, double hi, int cells);
  // Symmetric grading about the midpoint: `core_cells` uniform cells on
  // [mid - core_half_width, mid + core_half_width], geometric stretching outside.
  static AxisCoords graded(double lo, double hi, int cells, double core_half_width, int core_cells);

  int cells() const { return static_cast<int>(nodes_.size()) - 1; }
  double node(int i) const { return nodes_[i]; }
  double center(int i) const { return 0.5 * (nodes_[i] + nodes_[i + 1]); }
  double width(int i) const { return nodes_[i + 1] - nodes_[i]; }
  // Distance between the points straddling node i (cell centers, or the wall
  // and the first center at either end). Equals the dual control width.
  double dual(int i) const;
  double lo() const { return nodes_.front(); }
  double hi() const { return nodes_.back(); }
  double min_width() const;
  double max_width() const;
  bool is_uniform(double rel_tol = 1e-12) const;
  const std::vector<double>& nodes() const { return nodes_; }
  // Index of the cell containing x (clamped to the axis).
  int locate(double x) const;

 private:
  std::vector<double> nodes_;
};

// Tensor-product MAC grid. Cell (i,j,k) is stored at i + nx*(j + ny*k);
// component a of a face field lives on a lattice with one extra node along a.
class StaggeredGrid {
 public:
  StaggeredGrid() = default;
  StaggeredGrid(AxisCoords x, AxisCoords y, AxisCoords z);

  static StaggeredGrid uniform(Index3 dims, Point3 origin, double h);
  static StaggeredGrid uniform_box(Index3 dims, Point3 lo, Point3 hi);

  const AxisCoords& axis(int a) const { return axes_[a]; }
  const Index3& dims() const { return dims_; }
  std::size_t cell_count() const { return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]; }
  Index3 face_dims(int a) const {
    Index3 d = dims_;
    ++d[a];
    return d;
  }
  std::size_t face_count(int a) const {
    const Index3 d = face_dims(a);
    return static_cast<std::size_t>(d[0]) * d[1] * d[2];
  }
  std::size_t face_count() const { return face_count(0) + face_count(1) + face_count(2); }

  std::size_t cell_index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(dims_[0]) * (j + static_cast<std::size_t>(dims_[1]) * k);
  }
  std::size_t face_index(int a, int i, int j, int k) const {
    const Index3 d = face_dims(a);
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(d[0]) * (j + static_cast<std::size_t>(d[1]) * k);
  }

  double cell_volume(int i, int j, int k) const {
    return axes_[0].width(i) * axes_[1].width(j) * axes_[2].width(k);
  }
  // Control volume of a face unknown: dual width along a times cell widths across.
  double face_volume(int a, Index3 p) const;
  double face_area(int a, Index3 p) const;
  Point3 cell_center(int i, int j, int k) const {
    return {axes_[0].center(i), axes_[1].center(j), axes_[2].center(k)};
  }
  Point3 face_center(int a, Index3 p) const;

  bool is_uniform() const;
  // Uniform spacing; throws if the grid is graded or anisotropic.
  double spacing() const;
  double min_spacing() const;
  Point3 lo() const { return {axes_[0].lo(), axes_[1].lo(), axes_[2].lo()}; }
  Point3 hi() const { return {axes_[0].hi(), axes_[1].hi(), axes_[2].hi()}; }
  double volume() const;

  bool operator==(const StaggeredGrid& o) const;

 private:
  std::array<AxisCoords, 3> axes_;
  Index3 dims_{0, 0, 0};
};

}  // namespace homog::numerics
