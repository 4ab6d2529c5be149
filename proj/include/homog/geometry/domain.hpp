#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "homog/geometry/shape.hpp"
#include "homog/numerics/grid.hpp"

namespace homog::geometry {

struct Box {
  Point3 lo{0, 0, 0}, hi{1, 1, 1};
  double length(int a) const { return hi[a] - lo[a]; }
  double volume() const { return length(0) * length(1) * length(2); }
  bool operator==(const Box&) const = default;
};

struct Hole {
  Point3 center;
  HoleShape shape;  // unit scale; the physical hole is center + eps^3 * shape
};

// Box minus eps^3-scaled holes on the shifted lattice eps (k + 1/2).
class PerforatedDomain {
 public:
  PerforatedDomain() = default;
  PerforatedDomain(Box box, double eps, std::uint64_t seed, std::vector<Hole> holes);

  const Box& box() const { return box_; }
  double eps() const { return eps_; }
  double scale() const { return eps_ * eps_ * eps_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Hole>& holes() const { return holes_; }
  std::size_t size() const { return holes_.size(); }

  bool in_hole(std::size_t k, const Point3& x) const;
  // Index of the hole containing x, or -1.
  long hole_at(const Point3& x) const;
  // sum_k |B(x_k, 3/4 eps^3)|: the bound on the total hole volume.
  double hole_volume_bound() const;
  double hole_volume() const;
  // Re-checks every invariant; throws PreconditionError on violation.
  void validate() const;

  // Structured text: header (box, eps, seed, count) + one line per hole.
  std::string descriptor() const;
  static PerforatedDomain parse_descriptor(const std::string& text);
  void save(const std::filesystem::path& p) const;
  static PerforatedDomain load(const std::filesystem::path& p);

 private:
  Box box_;
  double eps_ = 0.5;
  std::uint64_t seed_ = 0;
  std::vector<Hole> holes_;
};

// Throws PreconditionError (eps outside (0,1)), EmptyDomain (no admissible centre),
// RejectedSpec (shape outside the shell).
PerforatedDomain build_perforated_domain(const Box& box, double eps, const ShapeSpec& spec, std::uint64_t seed);

// Centres of the admissible lattice points, in lexicographic (z, y, x) order.
std::vector<Point3> lattice_centers(const Box& box, double eps);

// C^1 piecewise-cubic profile: 1 on [0, 3/4], smoothstep down to 0 at 1.
double chi(double t);
double chi_prime(double t);
// phi_k(x) = chi(|x - x_k| / eps^3); throws std::out_of_range for a bad k.
double cutoff_value(const PerforatedDomain& d, std::size_t k, const Point3& x);
double cutoff_gradient_norm(const PerforatedDomain& d, std::size_t k, const Point3& x);

}  // namespace homog::geometry
