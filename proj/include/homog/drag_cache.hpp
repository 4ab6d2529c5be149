#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>

#include "homog/cell_problem.hpp"

namespace homog::cell {

struct DragRecord {
  std::uint64_t shape_hash = 0;
  double s = 0.0;
  std::string resolution;
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  double energy_gap = 0.0;
  double force_gap = 0.0;
  double divergence_residual = 0.0;

  std::string to_line() const;
  static DragRecord from_line(const std::string& line);
};

// "cells/core/core_factor", e.g. "96/48/1.4"
std::string resolution_key(const CellGridSpec& spec);

// Drag matrices keyed by (shape hash, s to 12 significant digits, resolution).
// With a path, records are loaded on construction and appended as computed.
class DragCache {
 public:
  DragCache() = default;
  explicit DragCache(std::filesystem::path file);

  std::optional<Eigen::Matrix3d> find(const geometry::HoleShape& shape, double s, const CellGridSpec& spec) const;
  // Computes on a miss when allowed, otherwise throws CacheMiss.
  Eigen::Matrix3d get(const geometry::HoleShape& shape, double s, const CellGridSpec& spec, bool allow_compute = true,
                      const numerics::SaddleOptions& opt = {});
  void insert(const DragRecord& rec);

  std::size_t size() const;
  int computed() const { return computed_; }
  const std::filesystem::path& file() const { return file_; }

 private:
  using Key = std::tuple<std::uint64_t, std::string, std::string>;
  static Key key(std::uint64_t hash, double s, const std::string& res);

  std::filesystem::path file_;
  std::map<Key, DragRecord> records_;
  mutable std::mutex mutex_;
  int computed_ = 0;
};

}  // namespace homog::cell
