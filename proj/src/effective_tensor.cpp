#include "homog/effective_tensor.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "homog/errors.hpp"

namespace homog::effective {

EffectiveTensorField::EffectiveTensorField(geometry::Box box, Index3 dims)
    : box_(box), dims_(dims), D_(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], Eigen::Matrix3d::Zero()) {
  for (int a = 0; a < 3; ++a)
    if (dims[a] < 1) throw PreconditionError("partition needs at least one box per axis");
}

Index3 EffectiveTensorField::locate(const geometry::Point3& x) const {
  Index3 p{};
  for (int a = 0; a < 3; ++a) {
    const double t = (x[a] - box_.lo[a]) / box_.length(a) * dims_[a];
    p[a] = std::clamp(static_cast<int>(std::floor(t)), 0, dims_[a] - 1);
  }
  return p;
}

double EffectiveTensorField::box_volume() const { return box_.volume() / (double(dims_[0]) * dims_[1] * dims_[2]); }

geometry::Box EffectiveTensorField::sub_box(int i, int j, int k) const {
  geometry::Box b;
  const Index3 p{i, j, k};
  for (int a = 0; a < 3; ++a) {
    const double h = box_.length(a) / dims_[a];
    b.lo[a] = box_.lo[a] + h * p[a];
    b.hi[a] = p[a] + 1 == dims_[a] ? box_.hi[a] : box_.lo[a] + h * (p[a] + 1);
  }
  return b;
}

const Eigen::Matrix3d& EffectiveTensorField::at(const geometry::Point3& x) const {
  const Index3 p = locate(x);
  return D_[index(p[0], p[1], p[2])];
}

EffectiveTensorField EffectiveTensorField::coarsen(Index3 coarse) const {
  for (int a = 0; a < 3; ++a)
    if (coarse[a] < 1 || dims_[a] % coarse[a]) throw PreconditionError("coarse partition must divide the fine one");
  EffectiveTensorField out(box_, coarse);
  const Index3 f{dims_[0] / coarse[0], dims_[1] / coarse[1], dims_[2] / coarse[2]};
  const double w = 1.0 / (double(f[0]) * f[1] * f[2]);
  for (int k = 0; k < dims_[2]; ++k)
    for (int j = 0; j < dims_[1]; ++j)
      for (int i = 0; i < dims_[0]; ++i) out[out.index(i / f[0], j / f[1], k / f[2])] += w * D_[index(i, j, k)];
  return out;
}

double EffectiveTensorField::min_eigenvalue() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& d : D_) m = std::min(m, Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(d).eigenvalues()(0));
  return m;
}

bool EffectiveTensorField::is_zero() const {
  for (const auto& d : D_)
    if (!d.isZero(0.0)) return false;
  return true;
}

std::string EffectiveTensorField::to_text() const {
  std::ostringstream os;
  char buf[64];
  os << "effective-tensor v1\n";
  os << "box";
  for (double v : {box_.lo[0], box_.lo[1], box_.lo[2], box_.hi[0], box_.hi[1], box_.hi[2]}) {
    std::snprintf(buf, sizeof buf, " %.17g", v);
    os << buf;
  }
  os << "\ndims " << dims_[0] << ' ' << dims_[1] << ' ' << dims_[2] << '\n';
  for (const auto& d : D_) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        std::snprintf(buf, sizeof buf, "%s%.17g", i + j ? " " : "", d(i, j));
        os << buf;
      }
    os << '\n';
  }
  return os.str();
}

EffectiveTensorField EffectiveTensorField::from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line, tag;
  std::getline(is, line);
  if (line != "effective-tensor v1") throw Error("not an effective-tensor file");
  geometry::Box b;
  Index3 n{};
  is >> tag >> b.lo[0] >> b.lo[1] >> b.lo[2] >> b.hi[0] >> b.hi[1] >> b.hi[2];
  if (tag != "box") throw Error("effective-tensor file: expected box");
  is >> tag >> n[0] >> n[1] >> n[2];
  if (tag != "dims" || !is) throw Error("effective-tensor file: expected dims");
  EffectiveTensorField f(b, n);
  for (auto& d : f.D_)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) is >> d(i, j);
  if (!is) throw Error("effective-tensor file truncated");
  return f;
}

void EffectiveTensorField::save(const std::filesystem::path& p) const {
  std::ofstream out(p);
  out << to_text();
  if (!out) throw Error("cannot write " + p.string());
}

EffectiveTensorField EffectiveTensorField::load(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

Index3 lattice_partition(const geometry::Box& box, double eps) {
  Index3 n{};
  for (int a = 0; a < 3; ++a) n[a] = std::max(1, static_cast<int>(std::lround(box.length(a) / eps)));
  return n;
}

EffectiveTensorField assemble_effective_tensor(const geometry::PerforatedDomain& domain, Index3 partition,
                                               cell::DragCache& cache, const cell::CellGridSpec& spec,
                                               bool allow_compute) {
  EffectiveTensorField field(domain.box(), partition);
  const double s = domain.scale();
  for (const auto& h : domain.holes()) {
    const Eigen::Matrix3d C = cache.get(h.shape, s, spec, allow_compute);
    const Index3 p = field.locate(h.center);
    field[field.index(p[0], p[1], p[2])] += C;
  }
  const double vol = field.box_volume();
  for (std::size_t m = 0; m < field.size(); ++m) field[m] /= vol;
  return field;
}

double extrapolate_to_zero(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> p = y;
  const std::size_t n = x.size();
  for (std::size_t m = 1; m < n; ++m)
    for (std::size_t i = 0; i + m < n; ++i) p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
  return p[0];
}

PeriodicTensorReport periodic_effective_tensor(const geometry::HoleShape& shape, double r0,
                                               const std::vector<double>& eps, cell::DragCache& cache,
                                               const cell::CellGridSpec& spec) {
  if (eps.size() < 2) throw PreconditionError("extrapolation needs at least two levels");
  for (std::size_t k = 1; k < eps.size(); ++k)
    if (!(eps[k] < eps[k - 1])) throw PreconditionError("eps sequence must be strictly decreasing");
  PeriodicTensorReport rep;
  rep.eps = eps;
  for (double e : eps) {
    const double e3 = e * e * e;
    const double s = r0 * e3;
    if (!(s > 0.0 && s <= 0.5)) throw PreconditionError("obstacle scale r0 * eps^3 must lie in (0, 1/2]");
    rep.scales.push_back(s);
    rep.D.push_back(cache.get(shape, s, spec) / e3);
  }
  std::vector<double> x(eps.size()), y(eps.size());
  for (std::size_t k = 0; k < eps.size(); ++k) x[k] = eps[k] * eps[k] * eps[k];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < eps.size(); ++k) y[k] = rep.D[k](i, j);
      rep.D_inf(i, j) = extrapolate_to_zero(x, y);
    }
  rep.D_inf = 0.5 * (rep.D_inf + rep.D_inf.transpose()).eval();
  // the levels should approach the limit monotonically with shrinking steps
  std::vector<double> tr;
  for (const auto& d : rep.D) tr.push_back(d.trace());
  std::ostringstream note;
  for (std::size_t k = 2; k < tr.size(); ++k) {
    const double d1 = tr[k - 1] - tr[k - 2], d2 = tr[k] - tr[k - 1];
    if (d1 * d2 < 0.0) {
      rep.unreliable = true;
      note << "trace sequence not monotone at level " << k << "; ";
    } else if (std::abs(d2) > std::abs(d1)) {
      rep.unreliable = true;
      note << "differences grow at level " << k << "; ";
    }
  }
  if (Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(rep.D_inf).eigenvalues()(0) <= 0.0) {
    rep.unreliable = true;
    note << "extrapolated tensor not positive definite; ";
  }
  rep.note = note.str();
  return rep;
}

}  // namespace homog::effective
