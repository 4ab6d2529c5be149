#include "homog/numerics/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace homog::numerics {

AxisCoords::AxisCoords(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 5) throw std::invalid_argument("axis needs at least 4 cells");
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    if (!(nodes_[i] > nodes_[i - 1])) throw std::invalid_argument("axis nodes must increase strictly");
}

AxisCoords AxisCoords::uniform(double lo, double hi, int cells) {
  std::vector<double> x(cells + 1);
  const double h = (hi - lo) / cells;
  for (int i = 0; i <= cells; ++i) x[i] = lo + h * i;
  x[cells] = hi;
  return AxisCoords(std::move(x));
}

AxisCoords AxisCoords::graded(double lo, double hi, int cells, double core_half_width, int core_cells) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  if (core_cells % 2 || cells % 2 || core_cells >= cells || core_half_width >= half)
    throw std::invalid_argument("graded axis: inconsistent core");
  const int outer = (cells - core_cells) / 2;
  const double h = 2.0 * core_half_width / core_cells;
  const double span = half - core_half_width;
  // Growth factor q with h * (q + q^2 + ... + q^outer) = span.
  auto covered = [&](double q) {
    double s = 0.0, t = 1.0;
    for (int i = 0; i < outer; ++i) {
      t *= q;
      s += t;
    }
    return h * s;
  };
  double qlo = 1e-3, qhi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double q = 0.5 * (qlo + qhi);
    (covered(q) < span ? qlo : qhi) = q;
  }
  const double q = 0.5 * (qlo + qhi);
  std::vector<double> right;  // nodes from the core edge outwards
  double x = core_half_width, w = h;
  for (int i = 0; i < outer; ++i) {
    w *= q;
    x += w;
    right.push_back(x);
  }
  right.back() = half;
  std::vector<double> nodes;
  nodes.reserve(cells + 1);
  for (auto it = right.rbegin(); it != right.rend(); ++it) nodes.push_back(mid - *it);
  for (int i = 0; i <= core_cells; ++i) nodes.push_back(mid - core_half_width + h * i);
  for (double r : right) nodes.push_back(mid + r);
  nodes.front() = lo;
  nodes.back() = hi;
  return AxisCoords(std::move(nodes));
}

double AxisCoords::dual(int i) const {
  const int n = cells();
  double d = 0.0;
  if (i > 0) d += 0.5 * width(i - 1);
  if (i < n) d += 0.5 * width(i);
  return d;
}

double AxisCoords::min_width() const {
  double m = width(0);
  for (int i = 1; i < cells(); ++i) m = std::min(m, width(i));
  return m;
}

double AxisCoords::max_width() const {
  double m = width(0);
  for (int i = 1; i < cells(); ++i) m = std::max(m, width(i));
  return m;
}

bool AxisCoords::is_uniform(double rel_tol) const {
  const double h = (hi() - lo()) / cells();
  for (int i = 0; i < cells(); ++i)
    if (std::abs(width(i) - h) > rel_tol * h) return false;
  return true;
}

int AxisCoords::locate(double x) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  int i = static_cast<int>(it - nodes_.begin()) - 1;
  return std::clamp(i, 0, cells() - 1);
}

StaggeredGrid::StaggeredGrid(AxisCoords x, AxisCoords y, AxisCoords z) : axes_{std::move(x), std::move(y), std::move(z)} {
  for (int a = 0; a < 3; ++a) dims_[a] = axes_[a].cells();
}

StaggeredGrid StaggeredGrid::uniform(Index3 dims, Point3 origin, double h) {
  if (!(h > 0)) throw std::invalid_argument("grid spacing must be positive");
  return StaggeredGrid(AxisCoords::uniform(origin[0], origin[0] + h * dims[0], dims[0]),
                       AxisCoords::uniform(origin[1], origin[1] + h * dims[1], dims[1]),
                       AxisCoords::uniform(origin[2], origin[2] + h * dims[2], dims[2]));
}

StaggeredGrid StaggeredGrid::uniform_box(Index3 dims, Point3 lo, Point3 hi) {
  return StaggeredGrid(AxisCoords::uniform(lo[0], hi[0], dims[0]), AxisCoords::uniform(lo[1], hi[1], dims[1]),
                       AxisCoords::uniform(lo[2], hi[2], dims[2]));
}

double StaggeredGrid::face_volume(int a, Index3 p) const {
  double v = 1.0;
  for (int d = 0; d < 3; ++d) v *= (d == a) ? axes_[d].dual(p[d]) : axes_[d].width(p[d]);
  return v;
}

double StaggeredGrid::face_area(int a, Index3 p) const {
  double v = 1.0;
  for (int d = 0; d < 3; ++d)
    if (d != a) v *= axes_[d].width(p[d]);
  return v;
}

Point3 StaggeredGrid::face_center(int a, Index3 p) const {
  Point3 x;
  for (int d = 0; d < 3; ++d) x[d] = (d == a) ? axes_[d].node(p[d]) : axes_[d].center(p[d]);
  return x;
}

bool StaggeredGrid::is_uniform() const {
  if (!axes_[0].is_uniform() || !axes_[1].is_uniform() || !axes_[2].is_uniform()) return false;
  const double h = axes_[0].width(0);
  for (int a = 1; a < 3; ++a)
    if (std::abs(axes_[a].width(0) - h) > 1e-12 * h) return false;
  return true;
}

double StaggeredGrid::spacing() const {
  if (!is_uniform()) throw std::logic_error("grid is not uniform");
  return axes_[0].width(0);
}

double StaggeredGrid::min_spacing() const {
  return std::min({axes_[0].min_width(), axes_[1].min_width(), axes_[2].min_width()});
}

double StaggeredGrid::volume() const {
  return (axes_[0].hi() - axes_[0].lo()) * (axes_[1].hi() - axes_[1].lo()) * (axes_[2].hi() - axes_[2].lo());
}

bool StaggeredGrid::operator==(const StaggeredGrid& o) const {
  for (int a = 0; a < 3; ++a)
    if (axes_[a].nodes() != o.axes_[a].nodes()) return false;
  return true;
}

}  // namespace homog::numerics
