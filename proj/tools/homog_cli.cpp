// homog: command-line driver for the homogenization studies.
#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <omp.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "homog/cell_problem.hpp"
#include "homog/drag_cache.hpp"
#include "homog/effective_tensor.hpp"
#include "homog/errors.hpp"
#include "homog/harness.hpp"

namespace fs = std::filesystem;
using namespace homog;
using json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0, kConfig = 1, kFailure = 2;

struct Common {
  std::string config;
  std::string out;
  int threads = 0;
  long long seed = -1;
};

harness::StudyConfig load(const Common& o, harness::StudyKind fallback, bool force_kind) {
  harness::StudyConfig c;
  if (!o.config.empty()) {
    c = harness::load_config(o.config);
    if (force_kind) c.kind = fallback;
  } else {
    c.kind = fallback;
  }
  if (!o.out.empty()) c.out = o.out;
  if (o.threads > 0) c.threads = o.threads;
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  c.validate();
  if (c.threads > 0) omp_set_num_threads(c.threads);
  fs::create_directories(c.out);
  return c;
}

json mat(const Eigen::Matrix3d& m) {
  json a = json::array();
  for (int i = 0; i < 3; ++i) a.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return a;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << j.dump(2) << "\n";
}

int cmd_cell(const Common& o) {
  auto c = load(o, harness::StudyKind::cell, false);
  const auto shape = geometry::make_hole_shape(c.shape, c.seed);
  cell::DragCache cache(c.cache_path());
  json j;
  j["shape"] = shape.describe();
  j["resolution"] = cell::resolution_key(c.cell_grid);
  j["levels"] = json::array();
  int rc = kOk;
  for (double s : c.cell_scales) {
    json e;
    e["s"] = s;
    try {
      const auto sol = cell::solve_cell_problem(shape, s, c.cell_grid);
      const auto dm = cell::drag_matrix(sol);
      cell::DragRecord rec;
      rec.shape_hash = shape.hash();
      rec.s = s;
      rec.resolution = cell::resolution_key(c.cell_grid);
      rec.C = dm.C;
      rec.energy_gap = dm.energy_gap;
      rec.force_gap = dm.force_gap;
      rec.divergence_residual = dm.divergence_residual;
      cache.insert(rec);
      e["C"] = mat(dm.C);
      e["energy_gap"] = dm.energy_gap;
      e["force_gap"] = dm.force_gap;
      e["divergence_residual"] = dm.divergence_residual;
      const double r = s * shape.max_radius_bound();
      if (r < 0.5) {
        const auto d = cell::decay_diagnostics(sol, r, 0.5);
        e["int_grad_v1_sq"] = d.l2_gradient[0];
        e["int_v1_sq"] = d.l2_velocity[0];
        e["int_q1_sq"] = d.l2_pressure[0];
        e["c_velocity"] = d.c_velocity;
        e["c_gradient"] = d.c_gradient;
        e["c_pressure"] = d.c_pressure;
      }
      std::printf("s = %-8g C = diag(%.6g, %.6g, %.6g)  energy gap %.2e\n", s, dm.C(0, 0), dm.C(1, 1), dm.C(2, 2),
                  dm.energy_gap);
    } catch (const std::exception& ex) {
      e["error"] = ex.what();
      std::fprintf(stderr, "s = %g failed: %s\n", s, ex.what());
      rc = kFailure;
    }
    j["levels"].push_back(e);
  }
  write_json(c.out / "drag.json", j);
  return rc;
}

int cmd_tensor(const Common& o) {
  auto c = load(o, harness::StudyKind::tensor, false);
  cell::DragCache cache(c.cache_path());
  const auto shape = geometry::make_hole_shape(c.shape, c.seed);
  const auto rep = effective::periodic_effective_tensor(shape, c.tensor_r0, c.tensor_eps, cache, c.cell_grid);
  json j;
  j["shape"] = shape.describe();
  j["r0"] = c.tensor_r0;
  j["eps"] = rep.eps;
  j["scales"] = rep.scales;
  j["D"] = json::array();
  for (const auto& D : rep.D) j["D"].push_back(mat(D));
  j["D_inf"] = mat(rep.D_inf);
  j["unreliable"] = rep.unreliable;
  j["note"] = rep.note;
  int rc = kOk;
  j["assembled"] = json::array();
  for (double eps : c.eps_list()) {
    json e;
    e["eps"] = eps;
    try {
      const auto dom = harness::study_domain(c, eps);
      e["holes"] = dom.size();
      const auto field = effective::assemble_effective_tensor(dom, effective::lattice_partition(c.box, eps), cache,
                                                              c.cell_grid);
      char name[64];
      std::snprintf(name, sizeof name, "tensor_eps_%.6g.txt", eps);
      field.save(c.out / name);
      e["file"] = name;
      e["min_eigenvalue"] = field.min_eigenvalue();
    } catch (const std::exception& ex) {
      e["error"] = ex.what();
      rc = kFailure;
    }
    j["assembled"].push_back(e);
  }
  write_json(c.out / "tensor.json", j);
  std::printf("D_inf = diag(%.6g, %.6g, %.6g)%s\n", rep.D_inf(0, 0), rep.D_inf(1, 1), rep.D_inf(2, 2),
              rep.unreliable ? "  [unreliable]" : "");
  return rc;
}

int finish(const harness::ConvergenceReport& r, const fs::path& out, bool full) {
  if (full) {
    harness::emit_report(r, out);
    std::printf("verdict: %s\n", r.verdict.c_str());
    for (const auto& [name, v] : r.verdicts) std::printf("  %s: %s\n", name.c_str(), v.c_str());
  } else {
    std::ofstream(out / "summary.json") << r.to_json();
  }
  for (const auto& e : r.entries)
    if (!e.ok) std::fprintf(stderr, "eps = %g failed: %s\n", e.eps, e.error.c_str());
  return r.partial_failure() ? kFailure : kOk;
}

int cmd_micro(const Common& o) {
  auto c = load(o, harness::StudyKind::steady, false);
  cell::DragCache cache(c.cache_path());
  return finish(harness::run_micro(c, cache), c.out, false);
}

int cmd_macro(const Common& o) {
  auto c = load(o, harness::StudyKind::steady, false);
  cell::DragCache cache(c.cache_path());
  return finish(harness::run_macro(c, cache), c.out, false);
}

int cmd_converge(const Common& o, harness::StudyKind kind) {
  auto c = load(o, kind, true);
  cell::DragCache cache(c.cache_path());
  const auto r = kind == harness::StudyKind::steady ? harness::run_steady_convergence(c, cache)
                                                    : harness::run_evolution_convergence(c, cache);
  return finish(r, c.out, true);
}

int cmd_report(const Common& o, const std::string& input) {
  fs::path in = input;
  if (in.empty()) in = fs::path(o.out.empty() ? "out" : o.out) / "report.json";
  std::ifstream f(in);
  if (!f) throw ConfigError("cannot read report " + in.string());
  std::stringstream ss;
  ss << f.rdbuf();
  const auto r = harness::ConvergenceReport::from_json(ss.str());
  const fs::path out = o.out.empty() ? in.parent_path() : fs::path(o.out);
  return finish(r, out, true);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homogenization toolkit for perforated-domain Stokes/Boussinesq flow"};
  app.require_subcommand(1);
  Common o;
  std::string report_in;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "YAML study configuration");
    s->add_option("--out", o.out, "output directory (overrides the config)");
    s->add_option("--threads", o.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
    s->add_option("--seed", o.seed, "shape seed (overrides the config)")->check(CLI::NonNegativeNumber);
  };
  auto* cell = app.add_subcommand("cell", "drag matrices of the cell problem");
  auto* tensor = app.add_subcommand("tensor", "effective tensor: periodic limit and assembled fields");
  auto* micro = app.add_subcommand("micro", "perforated-domain solves for every eps");
  auto* macro = app.add_subcommand("macro", "homogenized solve");
  auto* cs = app.add_subcommand("converge-steady", "steady convergence study");
  auto* ce = app.add_subcommand("converge-evolution", "evolutionary convergence study");
  auto* rep = app.add_subcommand("report", "regenerate report files from a stored report.json");
  for (auto* s : {cell, tensor, micro, macro, cs, ce, rep}) add_common(s);
  rep->add_option("--input", report_in, "stored report (default: <out>/report.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  try {
    if (*cell) return cmd_cell(o);
    if (*tensor) return cmd_tensor(o);
    if (*micro) return cmd_micro(o);
    if (*macro) return cmd_macro(o);
    if (*cs) return cmd_converge(o, harness::StudyKind::steady);
    if (*ce) return cmd_converge(o, harness::StudyKind::evolution);
    if (*rep) return cmd_report(o, report_in);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
