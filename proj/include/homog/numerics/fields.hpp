#pragma once

#include <array>
#include <span>
#include <vector>

#include "homog/numerics/grid.hpp"

namespace homog::numerics {

// Cell-centred scalar (rho, theta, pressure, viscosity...).
class CellField {
 public:
  CellField() = default;
  explicit CellField(const StaggeredGrid& g, double value = 0.0)
      : dims_(g.dims()), data_(g.cell_count(), value) {}

  const Index3& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  double& operator()(int i, int j, int k) { return data_[i + dims_[0] * (j + static_cast<std::size_t>(dims_[1]) * k)]; }
  double operator()(int i, int j, int k) const {
    return data_[i + dims_[0] * (j + static_cast<std::size_t>(dims_[1]) * k)];
  }
  double& operator[](std::size_t c) { return data_[c]; }
  double operator[](std::size_t c) const { return data_[c]; }
  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  bool matches(const StaggeredGrid& g) const { return dims_ == g.dims(); }

 private:
  Index3 dims_{0, 0, 0};
  std::vector<double> data_;
};

// Face-centred vector field: three component lattices stored back to back so
// the whole field is one flat vector for the Krylov solvers. Wall-normal
// faces are part of the storage and are kept at zero.
class FaceField {
 public:
  FaceField() = default;
  explicit FaceField(const StaggeredGrid& g, double value = 0.0) : cell_dims_(g.dims()) {
    offset_[0] = 0;
    for (int a = 0; a < 3; ++a) offset_[a + 1] = offset_[a] + g.face_count(a);
    data_.assign(offset_[3], value);
  }

  const Index3& cell_dims() const { return cell_dims_; }
  Index3 comp_dims(int a) const {
    Index3 d = cell_dims_;
    ++d[a];
    return d;
  }
  std::size_t size() const { return data_.size(); }
  std::size_t offset(int a) const { return offset_[a]; }
  std::span<double> comp(int a) { return {data_.data() + offset_[a], offset_[a + 1] - offset_[a]}; }
  std::span<const double> comp(int a) const { return {data_.data() + offset_[a], offset_[a + 1] - offset_[a]}; }
  double& operator()(int a, int i, int j, int k) {
    const Index3 d = comp_dims(a);
    return data_[offset_[a] + i + d[0] * (j + static_cast<std::size_t>(d[1]) * k)];
  }
  double operator()(int a, int i, int j, int k) const {
    const Index3 d = comp_dims(a);
    return data_[offset_[a] + i + d[0] * (j + static_cast<std::size_t>(d[1]) * k)];
  }
  double& operator[](std::size_t f) { return data_[f]; }
  double operator[](std::size_t f) const { return data_[f]; }
  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  bool matches(const StaggeredGrid& g) const { return cell_dims_ == g.dims(); }

 private:
  Index3 cell_dims_{0, 0, 0};
  std::array<std::size_t, 4> offset_{0, 0, 0, 0};
  std::vector<double> data_;
};

// Call fn(a, i, j, k, flat_index) for every face, component by component.
template <class Fn>
void for_each_face(const StaggeredGrid& g, Fn&& fn) {
  std::size_t f = 0;
  for (int a = 0; a < 3; ++a) {
    const Index3 d = g.face_dims(a);
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i) fn(a, i, j, k, f++);
  }
}

template <class Fn>
void for_each_cell(const StaggeredGrid& g, Fn&& fn) {
  std::size_t c = 0;
  const Index3 d = g.dims();
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) fn(i, j, k, c++);
}

// Per-face control volumes and wall flags, in FaceField flat order.
std::vector<double> face_volumes(const StaggeredGrid& g);
std::vector<double> cell_volumes(const StaggeredGrid& g);
// 1 for faces on the box boundary (normal velocity pinned to zero).
std::vector<unsigned char> wall_faces(const StaggeredGrid& g);

}  // namespace homog::numerics
