#include "homog/geometry/domain.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "homog/errors.hpp"

namespace homog::geometry {

namespace {

double dist(const Point3& a, const Point3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PerforatedDomain::PerforatedDomain(Box box, double eps, std::uint64_t seed, std::vector<Hole> holes)
    : box_(box), eps_(eps), seed_(seed), holes_(std::move(holes)) {}

bool PerforatedDomain::in_hole(std::size_t k, const Point3& x) const {
  const Hole& h = holes_.at(k);
  const double s = scale();
  return h.shape.contains({(x[0] - h.center[0]) / s, (x[1] - h.center[1]) / s, (x[2] - h.center[2]) / s});
}

long PerforatedDomain::hole_at(const Point3& x) const {
  // Centres sit on the eps-lattice, so only the nearest lattice point can host x.
  if (holes_.empty()) return -1;
  const double s = scale();
  for (std::size_t k = 0; k < holes_.size(); ++k) {
    const Point3& c = holes_[k].center;
    if (std::abs(x[0] - c[0]) >= 0.75 * s || std::abs(x[1] - c[1]) >= 0.75 * s || std::abs(x[2] - c[2]) >= 0.75 * s)
      continue;
    if (in_hole(k, x)) return static_cast<long>(k);
  }
  return -1;
}

double PerforatedDomain::hole_volume_bound() const {
  return holes_.size() * 4.0 / 3.0 * std::numbers::pi * std::pow(0.75 * scale(), 3);
}

double PerforatedDomain::hole_volume() const {
  double v = 0.0;
  for (const Hole& h : holes_) v += h.shape.volume() * std::pow(scale(), 3);
  return v;
}

void PerforatedDomain::validate() const {
  if (!(eps_ > 0 && eps_ < 1)) throw PreconditionError("epsilon must lie in (0,1)");
  for (std::size_t i = 0; i < holes_.size(); ++i) {
    const Point3& c = holes_[i].center;
    for (int a = 0; a < 3; ++a)
      if (!(c[a] - box_.lo[a] > eps_ && box_.hi[a] - c[a] > eps_))
        throw PreconditionError("hole centre closer than epsilon to the boundary");
    if (holes_[i].shape.min_radius_bound() < 0.5 - 1e-12 && holes_[i].shape.kind() != ShapeKind::random_star)
      throw PreconditionError("hole shape violates the inner shell");
    const ShellReport r = sample_shell(holes_[i].shape, 2000);
    if (r.min_sampled < 0.5 || r.max_sampled >= 0.75) throw PreconditionError("hole shape outside the [1/2, 3/4) shell");
    for (std::size_t j = i + 1; j < holes_.size(); ++j) {
      const double d = dist(c, holes_[j].center);
      // lattice neighbours are exactly eps apart
      if (d < eps_ * (1 - 1e-12)) throw PreconditionError("hole centres closer than epsilon");
      if (d <= 1.5 * scale()) throw PreconditionError("outer hole balls overlap");
    }
  }
  if (hole_volume() > hole_volume_bound() * (1 + 1e-12)) throw PreconditionError("hole volume exceeds its bound");
}

std::string PerforatedDomain::descriptor() const {
  std::ostringstream os;
  os << "perforated-domain v1\n";
  os << "box " << fmt(box_.lo[0]) << ' ' << fmt(box_.lo[1]) << ' ' << fmt(box_.lo[2]) << ' ' << fmt(box_.hi[0]) << ' '
     << fmt(box_.hi[1]) << ' ' << fmt(box_.hi[2]) << '\n';
  os << "epsilon " << fmt(eps_) << '\n';
  os << "seed " << seed_ << '\n';
  os << "holes " << holes_.size() << '\n';
  for (const Hole& h : holes_)
    os << "hole " << fmt(h.center[0]) << ' ' << fmt(h.center[1]) << ' ' << fmt(h.center[2]) << ' ' << h.shape.describe()
       << '\n';
  return os.str();
}

PerforatedDomain PerforatedDomain::parse_descriptor(const std::string& text) {
  std::istringstream is(text);
  std::string line, tag;
  std::getline(is, line);
  if (line != "perforated-domain v1") throw ConfigError("not a domain descriptor");
  Box box;
  double eps = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  is >> tag >> box.lo[0] >> box.lo[1] >> box.lo[2] >> box.hi[0] >> box.hi[1] >> box.hi[2];
  if (tag != "box") throw ConfigError("descriptor: expected box");
  is >> tag >> eps;
  if (tag != "epsilon") throw ConfigError("descriptor: expected epsilon");
  is >> tag >> seed;
  if (tag != "seed") throw ConfigError("descriptor: expected seed");
  is >> tag >> n;
  if (tag != "holes") throw ConfigError("descriptor: expected holes");
  std::getline(is, line);
  std::vector<Hole> holes;
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::getline(is, line)) throw ConfigError("descriptor: truncated hole list");
    std::istringstream ls(line);
    Hole h;
    ls >> tag >> h.center[0] >> h.center[1] >> h.center[2];
    std::string rest;
    std::getline(ls, rest);
    h.shape = HoleShape::parse(rest);
    holes.push_back(std::move(h));
  }
  return PerforatedDomain(box, eps, seed, std::move(holes));
}

void PerforatedDomain::save(const std::filesystem::path& p) const {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  os << descriptor();
}

PerforatedDomain PerforatedDomain::load(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw Error("cannot read " + p.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_descriptor(ss.str());
}

std::vector<Point3> lattice_centers(const Box& box, double eps) {
  std::array<std::vector<double>, 3> coords;
  for (int a = 0; a < 3; ++a) {
    const long k0 = static_cast<long>(std::floor(box.lo[a] / eps)) - 1;
    const long k1 = static_cast<long>(std::ceil(box.hi[a] / eps)) + 1;
    for (long k = k0; k <= k1; ++k) {
      const double x = eps * (static_cast<double>(k) + 0.5);
      // strict distance > eps, robust to the rounding of eps (k + 1/2)
      if (x - box.lo[a] > eps * (1 + 1e-12) && box.hi[a] - x > eps * (1 + 1e-12)) coords[a].push_back(x);
    }
  }
  std::vector<Point3> out;
  for (double z : coords[2])
    for (double y : coords[1])
      for (double x : coords[0]) out.push_back({x, y, z});
  return out;
}

PerforatedDomain build_perforated_domain(const Box& box, double eps, const ShapeSpec& spec, std::uint64_t seed) {
  if (!(eps > 0 && eps < 1)) throw PreconditionError("epsilon must lie in (0,1)");
  for (int a = 0; a < 3; ++a)
    if (!(box.length(a) > 0)) throw PreconditionError("box must have positive extent");
  const auto centers = lattice_centers(box, eps);
  if (centers.empty()) {
    std::ostringstream os;
    os << "no lattice point lies farther than epsilon = " << eps << " from the box boundary";
    throw EmptyDomain(os.str());
  }
  std::vector<Hole> holes;
  holes.reserve(centers.size());
  const bool per_hole = spec.kind == ShapeKind::random_star;
  const HoleShape common = per_hole ? HoleShape{} : make_hole_shape(spec, seed);
  for (std::size_t k = 0; k < centers.size(); ++k) {
    // each star hole draws its own coefficients from a seed derived from (seed, k)
    const HoleShape s = per_hole ? make_hole_shape(spec, seed * 0x9E3779B97F4A7C15ull + k + 1) : common;
    holes.push_back({centers[k], s});
  }
  PerforatedDomain d(box, eps, seed, std::move(holes));
  d.validate();
  return d;
}

double chi(double t) {
  t = std::abs(t);
  if (t <= 0.75) return 1.0;
  if (t >= 1.0) return 0.0;
  const double s = (t - 0.75) * 4.0;
  return 1.0 - s * s * (3.0 - 2.0 * s);
}

double chi_prime(double t) {
  const double a = std::abs(t);
  if (a <= 0.75 || a >= 1.0) return 0.0;
  const double s = (a - 0.75) * 4.0;
  const double d = -24.0 * s * (1.0 - s);
  return t < 0 ? -d : d;
}

double cutoff_value(const PerforatedDomain& d, std::size_t k, const Point3& x) {
  if (k >= d.size()) throw std::out_of_range("hole index out of range");
  return chi(dist(x, d.holes()[k].center) / d.scale());
}

double cutoff_gradient_norm(const PerforatedDomain& d, std::size_t k, const Point3& x) {
  if (k >= d.size()) throw std::out_of_range("hole index out of range");
  return std::abs(chi_prime(dist(x, d.holes()[k].center) / d.scale())) / d.scale();
}

}  // namespace homog::geometry
