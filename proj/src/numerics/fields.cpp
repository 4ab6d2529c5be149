#include "homog/numerics/fields.hpp"

namespace homog::numerics {

std::vector<double> face_volumes(const StaggeredGrid& g) {
  std::vector<double> v(g.face_count());
  for_each_face(g, [&](int a, int i, int j, int k, std::size_t f) { v[f] = g.face_volume(a, {i, j, k}); });
  return v;
}

std::vector<double> cell_volumes(const StaggeredGrid& g) {
  std::vector<double> v(g.cell_count());
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) { v[c] = g.cell_volume(i, j, k); });
  return v;
}

std::vector<unsigned char> wall_faces(const StaggeredGrid& g) {
  std::vector<unsigned char> w(g.face_count(), 0);
  for_each_face(g, [&](int a, int i, int j, int k, std::size_t f) {
    const Index3 p{i, j, k};
    w[f] = (p[a] == 0 || p[a] == g.dims()[a]) ? 1 : 0;
  });
  return w;
}

}  // namespace homog::numerics
