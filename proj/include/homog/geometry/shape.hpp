#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "homog/numerics/grid.hpp"

namespace homog::geometry {

using numerics::Point3;

enum class ShapeKind { sphere, ellipsoid, random_star };

std::string to_string(ShapeKind k);
ShapeKind shape_kind_from_string(const std::string& s);

// Parameters at unit scale (the shell 1/2 <= r < 3/4 applies here).
struct ShapeSpec {
  ShapeKind kind = ShapeKind::sphere;
  double radius = 0.5;                        // sphere
  std::array<double, 3> semi_axes{0.5, 0.6, 0.7};  // ellipsoid
  double r0 = 0.625;                          // random star mean radius
  double amplitude = 0.05;                    // random star: sum |c_m|
  int degree = 3;                             // random star: max monomial degree
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

// Star-shaped hole at unit scale, boundary r = R(d) in body-frame directions d.
class HoleShape {
 public:
  HoleShape() = default;

  ShapeKind kind() const { return kind_; }
  const Eigen::Matrix3d& rotation() const { return rot_; }
  // Radial support function along a world-frame unit direction.
  double radius(const Eigen::Vector3d& dir) const;
  bool contains(const Point3& x) const;
  // Guaranteed bounds on R(d) from the parametrisation.
  double min_radius_bound() const { return rmin_bound_; }
  double max_radius_bound() const { return rmax_bound_; }
  // Exact volume for sphere/ellipsoid, quadrature for stars.
  double volume() const;
  HoleShape rotated(const Eigen::Matrix3d& r) const;
  // Canonical one-line description; parsable by parse().
  std::string describe() const;
  static HoleShape parse(const std::string& line);
  // FNV-1a of describe().
  std::uint64_t hash() const;

  const std::vector<double>& params() const { return params_; }
  const std::vector<std::array<int, 3>>& exponents() const { return expo_; }

  // Assemble from raw parts; runs no shell check.
  static HoleShape from_parts(ShapeKind kind, std::vector<double> params, std::vector<std::array<int, 3>> expo,
                              Eigen::Matrix3d rot);

 private:
  ShapeKind kind_ = ShapeKind::sphere;
  // sphere: {r}; ellipsoid: {a,b,c}; star: {r0, c_1..c_m}
  std::vector<double> params_{0.5};
  std::vector<std::array<int, 3>> expo_;  // star monomial exponents
  Eigen::Matrix3d rot_ = Eigen::Matrix3d::Identity();
  double rmin_bound_ = 0.5, rmax_bound_ = 0.5;

  double body_radius(const Eigen::Vector3d& d) const;
  void compute_bounds();
};

struct ShellReport {
  double min_sampled = 0, max_sampled = 0;
  std::size_t samples = 0;
};

// Fibonacci-sphere sampling of the radial function.
ShellReport sample_shell(const HoleShape& s, std::size_t samples = 10000);

// Builds and validates a shape; throws RejectedSpec naming the violated bound.
HoleShape make_hole_shape(const ShapeSpec& spec, std::uint64_t seed);

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& axis, double angle);

}  // namespace homog::geometry
