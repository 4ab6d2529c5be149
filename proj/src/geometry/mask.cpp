#include "homog/geometry/mask.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "homog/errors.hpp"
#include "homog/numerics/fields.hpp"

namespace homog::geometry {

using numerics::Index3;
using numerics::StaggeredGrid;

std::size_t MaskField::solid_count() const {
  std::size_t n = 0;
  for (auto s : solid) n += s;
  return n;
}

double MaskField::solid_volume() const {
  double v = 0.0;
  numerics::for_each_cell(grid, [&](int i, int j, int k, std::size_t c) {
    if (solid[c]) v += grid.cell_volume(i, j, k);
  });
  return v;
}

MaskField classify_cells(const PerforatedDomain& d, const StaggeredGrid& g) {
  MaskField m;
  m.grid = g;
  m.solid.assign(g.cell_count(), 0);
  const double s = d.scale();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const Point3& c = d.holes()[k].center;
    Index3 lo, hi;
    for (int a = 0; a < 3; ++a) {
      lo[a] = g.axis(a).locate(c[a] - 0.75 * s);
      hi[a] = g.axis(a).locate(c[a] + 0.75 * s);
    }
    for (int kk = lo[2]; kk <= hi[2]; ++kk)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i)
          if (d.in_hole(k, g.cell_center(i, j, kk))) m.solid[g.cell_index(i, j, kk)] = 1;
  }
  m.face_fraction.assign(g.face_count(), 0.0);
  numerics::for_each_face(g, [&](int a, int i, int j, int k, std::size_t f) {
    Index3 p{i, j, k};
    double frac = 0.0;
    int cnt = 0;
    if (p[a] < g.dims()[a]) {
      frac += m.solid[g.cell_index(p[0], p[1], p[2])];
      ++cnt;
    }
    if (p[a] > 0) {
      p[a] -= 1;
      frac += m.solid[g.cell_index(p[0], p[1], p[2])];
      ++cnt;
    }
    m.face_fraction[f] = frac / cnt;
  });
  const double hmax = std::max({g.axis(0).max_width(), g.axis(1).max_width(), g.axis(2).max_width()});
  m.resolution_warning = d.size() > 0 && hmax > s / 4;
  return m;
}

MaskField classify_cells(const PerforatedDomain& d, double h) {
  if (!(h > 0)) throw PreconditionError("grid spacing must be positive");
  Index3 n;
  for (int a = 0; a < 3; ++a) {
    const double q = d.box().length(a) / h;
    n[a] = static_cast<int>(std::lround(q));
    if (n[a] < 4) n[a] = 4;
  }
  const StaggeredGrid g = StaggeredGrid::uniform_box(n, d.box().lo, d.box().hi);
  MaskField m = classify_cells(d, g);
  m.resolution_warning = d.size() > 0 && h > d.scale() / 4;
  return m;
}

std::size_t solid_components(const MaskField& m) {
  const Index3 n = m.grid.dims();
  std::vector<int> label(m.solid.size(), -1);
  std::size_t comps = 0;
  std::vector<std::size_t> stack;
  for (std::size_t c0 = 0; c0 < m.solid.size(); ++c0) {
    if (!m.solid[c0] || label[c0] >= 0) continue;
    label[c0] = static_cast<int>(comps);
    stack.push_back(c0);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      const int i = static_cast<int>(c % n[0]);
      const int j = static_cast<int>((c / n[0]) % n[1]);
      const int k = static_cast<int>(c / (static_cast<std::size_t>(n[0]) * n[1]));
      const int nb[6][3] = {{i - 1, j, k}, {i + 1, j, k}, {i, j - 1, k}, {i, j + 1, k}, {i, j, k - 1}, {i, j, k + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[1] < 0 || q[2] < 0 || q[0] >= n[0] || q[1] >= n[1] || q[2] >= n[2]) continue;
        const std::size_t cq = m.grid.cell_index(q[0], q[1], q[2]);
        if (m.solid[cq] && label[cq] < 0) {
          label[cq] = static_cast<int>(comps);
          stack.push_back(cq);
        }
      }
    }
    ++comps;
  }
  return comps;
}

void write_mask(const MaskField& m, const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  const double h = m.grid.spacing();
  os.write("MASK", 4);
  for (int a = 0; a < 3; ++a) {
    const std::int32_t n = m.grid.dims()[a];
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
  }
  os.write(reinterpret_cast<const char*>(&h), sizeof h);
  os.write(reinterpret_cast<const char*>(m.solid.data()), static_cast<std::streamsize>(m.solid.size()));
  if (!os) throw Error("short write to " + p.string());
}

MaskField read_mask(const std::filesystem::path& p, const Point3& origin) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("cannot read " + p.string());
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "MASK", 4) != 0) throw Error("not a mask file: " + p.string());
  Index3 n;
  for (int a = 0; a < 3; ++a) {
    std::int32_t v;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    n[a] = v;
  }
  double h;
  is.read(reinterpret_cast<char*>(&h), sizeof h);
  MaskField m;
  m.grid = StaggeredGrid::uniform(n, origin, h);
  m.solid.resize(m.grid.cell_count());
  is.read(reinterpret_cast<char*>(m.solid.data()), static_cast<std::streamsize>(m.solid.size()));
  if (!is) throw Error("truncated mask file: " + p.string());
  m.face_fraction.assign(m.grid.face_count(), 0.0);
  numerics::for_each_face(m.grid, [&](int a, int i, int j, int k, std::size_t f) {
    Index3 q{i, j, k};
    double frac = 0.0;
    int cnt = 0;
    if (q[a] < n[a]) {
      frac += m.solid[m.grid.cell_index(q[0], q[1], q[2])];
      ++cnt;
    }
    if (q[a] > 0) {
      q[a] -= 1;
      frac += m.solid[m.grid.cell_index(q[0], q[1], q[2])];
      ++cnt;
    }
    m.face_fraction[f] = frac / cnt;
  });
  return m;
}

}  // namespace homog::geometry
