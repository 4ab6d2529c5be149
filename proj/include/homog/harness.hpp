#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "homog/cell_problem.hpp"
#include "homog/drag_cache.hpp"
#include "homog/geometry/domain.hpp"
#include "homog/geometry/shape.hpp"
#include "homog/physics.hpp"

namespace homog::harness {

enum class StudyKind { steady, evolution, cell, tensor };
std::string to_string(StudyKind k);
StudyKind study_kind_from_string(const std::string& s);

enum class MacroTensor { periodic, assembled };

struct StudyConfig {
  StudyKind kind = StudyKind::steady;
  geometry::Box box;
  std::vector<double> eps{0.5, 1.0 / 3.0};
  bool large = false;                 // append eps = 1/4
  std::vector<int> resolution;        // cells per unit length, one per eps; empty = one grid resolving the smallest holes
  bool allow_under_resolved = false;  // accept h > eps^3 / 4
  int reference_cells = 0;            // comparison grid, cells per unit length; 0 = gcd of the resolutions
  std::uint64_t seed = 1;
  geometry::ShapeSpec shape;
  physics::PhysParams physics;

  // steady: f = A (sin 2pi x3, sin 2pi x1, sin 2pi x2), theta = B sin pi x1 sin pi x2 sin pi x3
  double force_amplitude = 1.0;
  double theta_amplitude = 0.5;
  // evolution: rho0 = 1 + a sin 2pi x1 sin 2pi x2 sin 2pi x3, u0 = b curl(psi (1,1,1))
  double rho_amplitude = 0.2;
  double u_amplitude = 0.05;
  double dt = 0.02;
  double t_end = 0.5;
  int checkpoint_every = 0;

  cell::CellGridSpec cell_grid;
  std::vector<double> cell_scales{0.2, 0.1};
  double tensor_r0 = 1.0;
  std::vector<double> tensor_eps{0.5848035476425733, 0.4641588833612779, 0.3684031498640387};  // s = 0.2, 0.1, 0.05
  MacroTensor macro_tensor = MacroTensor::periodic;

  std::filesystem::path out = "out";
  std::filesystem::path drag_cache = "drag_cache.txt";  // relative paths live under `out`
  int threads = 0;

  // eps list with the large flag applied
  std::vector<double> eps_list() const;
  int cells_for(std::size_t k) const;
  int reference() const;
  std::filesystem::path cache_path() const;
  // Throws ConfigError.
  void validate() const;
};

StudyConfig parse_config(const std::string& yaml_text);
StudyConfig load_config(const std::filesystem::path& p);

struct EpsResult {
  double eps = 0.0;
  std::size_t holes = 0;
  int cells = 0;
  bool under_resolved = false;
  bool ok = false;
  std::string error;
  std::map<std::string, double> norms;
  std::map<std::string, double> monitors;
};

struct ConvergenceReport {
  std::string kind;
  std::vector<std::string> norm_names;     // all recorded norms
  std::vector<std::string> verdict_norms;  // the ones that enter the verdict
  std::vector<EpsResult> entries;          // sorted by decreasing eps
  std::map<std::string, std::string> verdicts;
  std::string verdict = "inconclusive";
  std::map<std::string, double> info;

  void add(EpsResult r);  // keeps the eps ordering
  void finalize();        // recompute verdicts from the stored norms
  bool partial_failure() const;
  std::string to_json() const;
  static ConvergenceReport from_json(const std::string& text);
};

// "monotone-decreasing" iff there are at least two values and every successive ratio is < 1.
std::string trend_verdict(const std::vector<double>& values);
// Least-squares slope of log(error) against log(eps); NaN with fewer than two positive points.
double loglog_slope(const std::vector<double>& eps, const std::vector<double>& err);

// CSV (one row per eps per norm), per-norm plot data (eps, error, log10 of both),
// verdict summary and the JSON report. Deterministic for identical reports.
void emit_report(const ConvergenceReport& r, const std::filesystem::path& dir);

// Uniform grid over the box with the given cells per unit length.
numerics::StaggeredGrid study_grid(const geometry::Box& box, int cells_per_unit);
// Domain for one eps; a box without admissible lattice points gives a domain without holes.
geometry::PerforatedDomain study_domain(const StudyConfig& c, double eps);

// Conservative restriction onto a coarser grid over the same box (integer ratio).
std::vector<double> restrict_cells(const numerics::StaggeredGrid& fine, std::span<const double> v,
                                   const numerics::StaggeredGrid& coarse);
std::vector<double> restrict_faces(const numerics::StaggeredGrid& fine, std::span<const double> v,
                                   const numerics::StaggeredGrid& coarse);

struct PeriodicLimit {
  Eigen::Matrix3d D = Eigen::Matrix3d::Zero();
  bool unreliable = false;
};
PeriodicLimit periodic_limit(const StudyConfig& c, cell::DragCache& cache);

// Study data on the box (coordinates normalized to [0,1]^3 where noted).
numerics::Point3 study_force(const StudyConfig& c, const numerics::Point3& x);
double study_theta(const StudyConfig& c, const numerics::Point3& x);  // steady: fixed temperature
numerics::CellField study_theta_field(const StudyConfig& c, const numerics::StaggeredGrid& g);
double study_rho0(const StudyConfig& c, const numerics::Point3& x);
numerics::Point3 study_u0(const StudyConfig& c, const numerics::Point3& x);  // divergence-free, zero on the walls

// Single-level runs for every eps (steady or evolution by the study kind).
// Fields and traces go under c.out; entries carry monitors only.
ConvergenceReport run_micro(const StudyConfig& c, cell::DragCache& cache);
// Macro run at the finest resolution: once with the periodic limit tensor,
// once per eps with the assembled one.
ConvergenceReport run_macro(const StudyConfig& c, cell::DragCache& cache);

ConvergenceReport run_steady_convergence(const StudyConfig& c, cell::DragCache& cache);
ConvergenceReport run_evolution_convergence(const StudyConfig& c, cell::DragCache& cache);

}  // namespace homog::harness
