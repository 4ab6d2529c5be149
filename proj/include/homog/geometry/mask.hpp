#pragma once

#include <filesystem>
#include <vector>

#include "homog/geometry/domain.hpp"
#include "homog/numerics/grid.hpp"

namespace homog::geometry {

struct MaskField {
  numerics::StaggeredGrid grid;
  std::vector<unsigned char> solid;   // per cell
  std::vector<double> face_fraction;  // per face: share of the two adjacent cells that are solid
  bool resolution_warning = false;    // h > eps^3 / 4

  std::size_t solid_count() const;
  double solid_volume() const;
};

MaskField classify_cells(const PerforatedDomain& d, const numerics::StaggeredGrid& g);
// Uniform grid over the domain box with spacing h (box lengths must be multiples of h).
MaskField classify_cells(const PerforatedDomain& d, double h);

// 6-connected components of the solid cells.
std::size_t solid_components(const MaskField& m);

// Binary layout: "MASK", int32 nx ny nz, float64 h, then one byte per cell.
void write_mask(const MaskField& m, const std::filesystem::path& p);
MaskField read_mask(const std::filesystem::path& p, const Point3& origin = {0, 0, 0});

}  // namespace homog::geometry
