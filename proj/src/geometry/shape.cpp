#include "homog/geometry/shape.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "homog/errors.hpp"

namespace homog::geometry {

namespace {

constexpr double kInner = 0.5;
constexpr double kOuter = 0.75;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Eigen::Vector3d fibonacci_dir(std::size_t i, std::size_t n) {
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double z = 1.0 - (2.0 * i + 1.0) / static_cast<double>(n);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = golden * static_cast<double>(i);
  return {r * std::cos(phi), r * std::sin(phi), z};
}

}  // namespace

std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::ellipsoid: return "ellipsoid";
    case ShapeKind::random_star: return "random-star";
  }
  return "?";
}

ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "sphere") return ShapeKind::sphere;
  if (s == "ellipsoid") return ShapeKind::ellipsoid;
  if (s == "random-star" || s == "random_star") return ShapeKind::random_star;
  throw ConfigError("unknown shape kind '" + s + "'");
}

double HoleShape::body_radius(const Eigen::Vector3d& d) const {
  switch (kind_) {
    case ShapeKind::sphere: return params_[0];
    case ShapeKind::ellipsoid: {
      const double q = d(0) * d(0) / (params_[0] * params_[0]) + d(1) * d(1) / (params_[1] * params_[1]) +
                       d(2) * d(2) / (params_[2] * params_[2]);
      return 1.0 / std::sqrt(q);
    }
    case ShapeKind::random_star: {
      double r = params_[0];
      for (std::size_t m = 0; m < expo_.size(); ++m)
        r += params_[m + 1] * std::pow(d(0), expo_[m][0]) * std::pow(d(1), expo_[m][1]) * std::pow(d(2), expo_[m][2]);
      return r;
    }
  }
  return 0.0;
}

double HoleShape::radius(const Eigen::Vector3d& dir) const { return body_radius(rot_.transpose() * dir.normalized()); }

bool HoleShape::contains(const Point3& x) const {
  const Eigen::Vector3d v(x[0], x[1], x[2]);
  const double r = v.norm();
  if (r < rmin_bound_) return true;
  if (r >= rmax_bound_) return false;
  const Eigen::Vector3d body = rot_.transpose() * v;
  if (kind_ == ShapeKind::ellipsoid) {
    const double q = body(0) * body(0) / (params_[0] * params_[0]) + body(1) * body(1) / (params_[1] * params_[1]) +
                     body(2) * body(2) / (params_[2] * params_[2]);
    return q < 1.0;
  }
  return r < body_radius(body / r);
}

void HoleShape::compute_bounds() {
  switch (kind_) {
    case ShapeKind::sphere:
      rmin_bound_ = rmax_bound_ = params_[0];
      break;
    case ShapeKind::ellipsoid:
      rmin_bound_ = std::min({params_[0], params_[1], params_[2]});
      rmax_bound_ = std::max({params_[0], params_[1], params_[2]});
      break;
    case ShapeKind::random_star: {
      double s = 0.0;
      for (std::size_t m = 1; m < params_.size(); ++m) s += std::abs(params_[m]);
      rmin_bound_ = params_[0] - s;
      rmax_bound_ = params_[0] + s;
      break;
    }
  }
}

double HoleShape::volume() const {
  if (kind_ == ShapeKind::sphere) return 4.0 / 3.0 * std::numbers::pi * std::pow(params_[0], 3);
  if (kind_ == ShapeKind::ellipsoid) return 4.0 / 3.0 * std::numbers::pi * params_[0] * params_[1] * params_[2];
  const std::size_t n = 40000;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::pow(body_radius(fibonacci_dir(i, n)), 3) / 3.0;
  return s * 4.0 * std::numbers::pi / n;
}

HoleShape HoleShape::rotated(const Eigen::Matrix3d& r) const {
  HoleShape s = *this;
  s.rot_ = r * rot_;
  return s;
}

std::string HoleShape::describe() const {
  std::ostringstream os;
  os << to_string(kind_);
  if (kind_ == ShapeKind::random_star) {
    os << ' ' << fmt(params_[0]) << ' ' << expo_.size();
    for (std::size_t m = 0; m < expo_.size(); ++m)
      os << ' ' << expo_[m][0] << ' ' << expo_[m][1] << ' ' << expo_[m][2] << ' ' << fmt(params_[m + 1]);
  } else {
    for (double p : params_) os << ' ' << fmt(p);
  }
  os << " rot";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) os << ' ' << fmt(rot_(i, j));
  return os.str();
}

HoleShape HoleShape::parse(const std::string& line) {
  std::istringstream is(line);
  std::string kind;
  is >> kind;
  const ShapeKind k = shape_kind_from_string(kind);
  std::vector<double> params;
  std::vector<std::array<int, 3>> expo;
  if (k == ShapeKind::random_star) {
    double r0;
    std::size_t m;
    is >> r0 >> m;
    params.push_back(r0);
    for (std::size_t q = 0; q < m; ++q) {
      std::array<int, 3> e;
      double c;
      is >> e[0] >> e[1] >> e[2] >> c;
      expo.push_back(e);
      params.push_back(c);
    }
  } else {
    const int np = k == ShapeKind::sphere ? 1 : 3;
    for (int q = 0; q < np; ++q) {
      double v;
      is >> v;
      params.push_back(v);
    }
  }
  std::string tag;
  is >> tag;
  if (tag != "rot") throw ConfigError("malformed shape record: " + line);
  Eigen::Matrix3d rot;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) is >> rot(i, j);
  if (!is) throw ConfigError("malformed shape record: " + line);
  return from_parts(k, std::move(params), std::move(expo), rot);
}

std::uint64_t HoleShape::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : describe()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

HoleShape HoleShape::from_parts(ShapeKind kind, std::vector<double> params, std::vector<std::array<int, 3>> expo,
                                Eigen::Matrix3d rot) {
  HoleShape s;
  s.kind_ = kind;
  s.params_ = std::move(params);
  s.expo_ = std::move(expo);
  s.rot_ = rot;
  s.compute_bounds();
  return s;
}

ShellReport sample_shell(const HoleShape& s, std::size_t samples) {
  ShellReport r{1e300, -1e300, samples};
  for (std::size_t i = 0; i < samples; ++i) {
    const double v = s.radius(fibonacci_dir(i, samples));
    r.min_sampled = std::min(r.min_sampled, v);
    r.max_sampled = std::max(r.max_sampled, v);
  }
  return r;
}

HoleShape make_hole_shape(const ShapeSpec& spec, std::uint64_t seed) {
  HoleShape s;
  switch (spec.kind) {
    case ShapeKind::sphere:
      s = HoleShape::from_parts(ShapeKind::sphere, {spec.radius}, {}, spec.rotation);
      break;
    case ShapeKind::ellipsoid:
      s = HoleShape::from_parts(ShapeKind::ellipsoid, {spec.semi_axes[0], spec.semi_axes[1], spec.semi_axes[2]}, {},
                                spec.rotation);
      break;
    case ShapeKind::random_star: {
      if (spec.degree < 1 || spec.degree > 6) throw RejectedSpec("random-star degree must be in [1, 6]");
      std::vector<std::array<int, 3>> expo;
      for (int t = 1; t <= spec.degree; ++t)
        for (int i = 0; i <= t; ++i)
          for (int j = 0; i + j <= t; ++j) expo.push_back({i, j, t - i - j});
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<double> c(expo.size());
      double sum = 0.0;
      for (double& x : c) {
        x = u(rng);
        sum += std::abs(x);
      }
      std::vector<double> params{spec.r0};
      for (double x : c) params.push_back(sum > 0 ? spec.amplitude * x / sum : 0.0);
      s = HoleShape::from_parts(ShapeKind::random_star, std::move(params), std::move(expo), spec.rotation);
      break;
    }
  }
  for (double p : s.params())
    if (!std::isfinite(p)) throw RejectedSpec("shape parameters must be finite");
  const ShellReport rep = sample_shell(s);
  const double lo = std::min(rep.min_sampled, s.kind() == ShapeKind::random_star ? rep.min_sampled : s.min_radius_bound());
  const double hi = std::max(rep.max_sampled, s.kind() == ShapeKind::random_star ? rep.max_sampled : s.max_radius_bound());
  if (lo < kInner) {
    std::ostringstream os;
    os << "shape violates the inner shell bound: radius " << lo << " < 1/2";
    throw RejectedSpec(os.str());
  }
  if (hi >= kOuter) {
    std::ostringstream os;
    os << "shape violates the outer shell bound: radius " << hi << " >= 3/4";
    throw RejectedSpec(os.str());
  }
  return s;
}

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace homog::geometry
