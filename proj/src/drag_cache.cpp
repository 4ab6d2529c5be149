#include "homog/drag_cache.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "homog/errors.hpp"

namespace homog::cell {

namespace {
std::string fmt_s(double s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", s);
  return buf;
}
}  // namespace

std::string resolution_key(const CellGridSpec& spec) {
  std::ostringstream os;
  os << spec.cells << '/' << (spec.core_cells > 0 ? spec.core_cells : spec.cells / 2) << '/' << spec.core_factor;
  return os.str();
}

std::string DragRecord::to_line() const {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(shape_hash));
  os << buf << ' ' << fmt_s(s) << ' ' << resolution;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      std::snprintf(buf, sizeof buf, " %.17g", C(i, j));
      os << buf;
    }
  std::snprintf(buf, sizeof buf, " %.6e %.6e %.6e", energy_gap, force_gap, divergence_residual);
  os << buf;
  return os.str();
}

DragRecord DragRecord::from_line(const std::string& line) {
  std::istringstream is(line);
  DragRecord r;
  std::string hash;
  is >> hash >> r.s >> r.resolution;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) is >> r.C(i, j);
  is >> r.energy_gap >> r.force_gap >> r.divergence_residual;
  if (!is) throw Error("malformed drag-cache record: " + line);
  r.shape_hash = std::stoull(hash, nullptr, 16);
  return r;
}

DragCache::Key DragCache::key(std::uint64_t hash, double s, const std::string& res) { return {hash, fmt_s(s), res}; }

DragCache::DragCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(file_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const DragRecord r = DragRecord::from_line(line);
    records_[key(r.shape_hash, r.s, r.resolution)] = r;
  }
}

std::optional<Eigen::Matrix3d> DragCache::find(const geometry::HoleShape& shape, double s,
                                               const CellGridSpec& spec) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find(key(shape.hash(), s, resolution_key(spec)));
  if (it == records_.end()) return std::nullopt;
  return it->second.C;
}

void DragCache::insert(const DragRecord& rec) {
  std::lock_guard lock(mutex_);
  records_[key(rec.shape_hash, rec.s, rec.resolution)] = rec;
  if (!file_.empty()) {
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    std::ofstream out(file_, std::ios::app);
    out << rec.to_line() << '\n';
    if (!out) throw Error("cannot append to drag cache " + file_.string());
  }
}

Eigen::Matrix3d DragCache::get(const geometry::HoleShape& shape, double s, const CellGridSpec& spec,
                               bool allow_compute, const numerics::SaddleOptions& opt) {
  if (auto hit = find(shape, s, spec)) return *hit;
  if (!allow_compute)
    throw CacheMiss("no drag matrix for shape " + shape.describe() + " at s = " + fmt_s(s) + ", resolution " +
                    resolution_key(spec));
  const CellSolution sol = solve_cell_problem(shape, s, spec, opt);
  const DragMatrix dm = drag_matrix(sol);
  DragRecord rec;
  rec.shape_hash = shape.hash();
  rec.s = s;
  rec.resolution = resolution_key(spec);
  rec.C = dm.C;
  rec.energy_gap = dm.energy_gap;
  rec.force_gap = dm.force_gap;
  rec.divergence_residual = dm.divergence_residual;
  insert(rec);
  {
    std::lock_guard lock(mutex_);
    ++computed_;
  }
  return dm.C;
}

std::size_t DragCache::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

}  // namespace homog::cell
