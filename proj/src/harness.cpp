#include "homog/harness.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <optional>
#include <sstream>

#include "homog/effective_tensor.hpp"
#include "homog/errors.hpp"
#include "homog/geometry/mask.hpp"
#include "homog/homogenized.hpp"
#include "homog/microscale.hpp"

namespace homog::harness {

using geometry::Box;
using numerics::CellField;
using numerics::FaceField;
using numerics::Point3;
using numerics::StaggeredGrid;
using json = nlohmann::ordered_json;

std::string to_string(StudyKind k) {
  switch (k) {
    case StudyKind::steady: return "steady";
    case StudyKind::evolution: return "evolution";
    case StudyKind::cell: return "cell";
    case StudyKind::tensor: return "tensor";
  }
  return "steady";
}

StudyKind study_kind_from_string(const std::string& s) {
  if (s == "steady") return StudyKind::steady;
  if (s == "evolution") return StudyKind::evolution;
  if (s == "cell") return StudyKind::cell;
  if (s == "tensor") return StudyKind::tensor;
  throw ConfigError("unknown study kind '" + s + "'");
}

// ---------------------------------------------------------------- config

std::vector<double> StudyConfig::eps_list() const {
  std::vector<double> e = eps;
  if (large && std::none_of(e.begin(), e.end(), [](double v) { return std::abs(v - 0.25) < 1e-12; }))
    e.push_back(0.25);
  return e;
}

int StudyConfig::cells_for(std::size_t k) const {
  const auto e = eps_list();
  if (k < resolution.size()) return resolution[k];
  if (!resolution.empty()) return resolution.back();
  // one common grid: the smallest count with h <= eps^3 / 4 for the smallest eps
  (void)k;
  return static_cast<int>(std::ceil(4.0 / (e.back() * e.back() * e.back()) - 1e-9));
}

int StudyConfig::reference() const {
  if (reference_cells > 0) return reference_cells;
  int g = 0;
  for (std::size_t k = 0; k < eps_list().size(); ++k) g = std::gcd(g, cells_for(k));
  return g;
}

std::filesystem::path StudyConfig::cache_path() const {
  if (drag_cache.empty()) return {};
  return drag_cache.is_absolute() ? drag_cache : out / drag_cache;
}

void StudyConfig::validate() const {
  const auto e = eps_list();
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (!(e[k] > 0.0 && e[k] < 1.0)) throw ConfigError("every eps must lie in (0, 1)");
    if (k > 0 && !(e[k] < e[k - 1])) throw ConfigError("eps list must be strictly decreasing");
  }
  if (!resolution.empty() && resolution.size() != e.size() && !(resolution.size() == eps.size() && large))
    throw ConfigError("resolution needs one entry per eps");
  for (int a = 0; a < 3; ++a)
    if (!(box.hi[a] > box.lo[a])) throw ConfigError("box must have positive extent");
  for (std::size_t k = 0; k < e.size(); ++k) {
    const int n = cells_for(k);
    if (n < 4) throw ConfigError("resolution must be at least 4 cells per unit length");
    for (int a = 0; a < 3; ++a) {
      const double m = box.length(a) * n;
      if (std::abs(m - std::round(m)) > 1e-9) throw ConfigError("box lengths must be multiples of the grid spacing");
    }
    const double h = 1.0 / n;
    if (h > e[k] * e[k] * e[k] / 4.0 * (1 + 1e-12) && !allow_under_resolved)
      throw ConfigError("resolution " + std::to_string(n) + " does not resolve the holes at eps = " +
                        std::to_string(e[k]) + " (needs h <= eps^3/4); set allow_under_resolved to accept");
  }
  const int ref = reference();
  if (kind == StudyKind::steady || kind == StudyKind::evolution) {
    for (std::size_t k = 0; k < e.size(); ++k)
      if (ref <= 0 || cells_for(k) % ref) throw ConfigError("reference_cells must divide every resolution");
  }
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw ConfigError("need dt > 0 and t_end >= 0");
  if (tensor_eps.size() < 2) throw ConfigError("tensor.eps needs at least two levels");
  for (std::size_t k = 1; k < tensor_eps.size(); ++k)
    if (!(tensor_eps[k] < tensor_eps[k - 1])) throw ConfigError("tensor.eps must be strictly decreasing");
  for (double s : cell_scales)
    if (!(s > 0.0 && s <= 0.5)) throw ConfigError("cell scales must lie in (0, 1/2]");
  if (cell_grid.cells < 8 || cell_grid.cells % 2) throw ConfigError("cell.cells must be even and >= 8");
  physics.validate();
}

namespace {

template <class T>
T get_or(const YAML::Node& n, const char* key, T def) {
  if (!n || !n[key]) return def;
  try {
    return n[key].as<T>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

Point3 get_point(const YAML::Node& n, const char* key, Point3 def) {
  if (!n || !n[key]) return def;
  const auto v = get_or<std::vector<double>>(n, key, {});
  if (v.size() != 3) throw ConfigError(std::string("'") + key + "' needs three entries");
  return {v[0], v[1], v[2]};
}

void check_keys(const YAML::Node& n, const std::vector<std::string>& allowed, const std::string& where) {
  if (!n) return;
  if (!n.IsMap()) throw ConfigError("'" + where + "' must be a mapping");
  for (const auto& kv : n) {
    const auto k = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

}  // namespace

StudyConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping");
  check_keys(root,
             {"study", "box", "eps", "large", "resolution", "allow_under_resolved", "reference_cells", "seed", "shape",
              "physics", "steady", "evolution", "cell", "tensor", "macro_tensor", "output", "drag_cache", "threads"},
             "config");
  StudyConfig c;
  c.kind = study_kind_from_string(get_or<std::string>(root, "study", "steady"));
  if (auto b = root["box"]) {
    check_keys(b, {"lo", "hi"}, "box");
    c.box.lo = get_point(b, "lo", c.box.lo);
    c.box.hi = get_point(b, "hi", c.box.hi);
  }
  c.eps = get_or(root, "eps", c.eps);
  c.large = get_or(root, "large", c.large);
  c.resolution = get_or(root, "resolution", c.resolution);
  c.allow_under_resolved = get_or(root, "allow_under_resolved", c.allow_under_resolved);
  c.reference_cells = get_or(root, "reference_cells", c.reference_cells);
  c.seed = get_or<std::uint64_t>(root, "seed", c.seed);
  if (auto s = root["shape"]) {
    check_keys(s, {"kind", "radius", "semi_axes", "r0", "amplitude", "degree", "rotation"}, "shape");
    c.shape.kind = geometry::shape_kind_from_string(get_or<std::string>(s, "kind", "sphere"));
    c.shape.radius = get_or(s, "radius", c.shape.radius);
    c.shape.semi_axes = get_point(s, "semi_axes", c.shape.semi_axes);
    c.shape.r0 = get_or(s, "r0", c.shape.r0);
    c.shape.amplitude = get_or(s, "amplitude", c.shape.amplitude);
    c.shape.degree = get_or(s, "degree", c.shape.degree);
    if (s["rotation"]) {
      const auto r = get_or<std::vector<double>>(s, "rotation", {});
      if (r.size() != 4) throw ConfigError("shape.rotation is [axis_x, axis_y, axis_z, angle]");
      c.shape.rotation = geometry::rotation_from_axis_angle(Eigen::Vector3d(r[0], r[1], r[2]), r[3]);
    }
  }
  if (auto p = root["physics"]) {
    check_keys(p, {"kappa_f", "kappa_s", "mu0", "mu2", "grad_F", "rho_low", "rho_high", "rho_s", "theta_bar"},
               "physics");
    auto& ph = c.physics;
    ph.kappa_f = get_or(p, "kappa_f", ph.kappa_f);
    ph.kappa_s = get_or(p, "kappa_s", ph.kappa_s);
    ph.viscosity.mu0 = get_or(p, "mu0", ph.viscosity.mu0);
    ph.viscosity.mu2 = get_or(p, "mu2", ph.viscosity.mu2);
    ph.grad_F = get_point(p, "grad_F", ph.grad_F);
    ph.rho_low = get_or(p, "rho_low", ph.rho_low);
    ph.rho_high = get_or(p, "rho_high", ph.rho_high);
    ph.rho_s = get_or(p, "rho_s", ph.rho_s);
    ph.theta_bar = get_or(p, "theta_bar", ph.theta_bar);
  }
  if (auto s = root["steady"]) {
    check_keys(s, {"force_amplitude", "theta_amplitude"}, "steady");
    c.force_amplitude = get_or(s, "force_amplitude", c.force_amplitude);
    c.theta_amplitude = get_or(s, "theta_amplitude", c.theta_amplitude);
  }
  if (auto e = root["evolution"]) {
    check_keys(e, {"rho_amplitude", "u_amplitude", "dt", "t_end", "checkpoint_every"}, "evolution");
    c.rho_amplitude = get_or(e, "rho_amplitude", c.rho_amplitude);
    c.u_amplitude = get_or(e, "u_amplitude", c.u_amplitude);
    c.dt = get_or(e, "dt", c.dt);
    c.t_end = get_or(e, "t_end", c.t_end);
    c.checkpoint_every = get_or(e, "checkpoint_every", c.checkpoint_every);
  }
  if (auto s = root["cell"]) {
    check_keys(s, {"cells", "core_cells", "core_factor", "scales"}, "cell");
    c.cell_grid.cells = get_or(s, "cells", c.cell_grid.cells);
    c.cell_grid.core_cells = get_or(s, "core_cells", c.cell_grid.core_cells);
    c.cell_grid.core_factor = get_or(s, "core_factor", c.cell_grid.core_factor);
    c.cell_scales = get_or(s, "scales", c.cell_scales);
  }
  if (auto t = root["tensor"]) {
    check_keys(t, {"r0", "eps"}, "tensor");
    c.tensor_r0 = get_or(t, "r0", c.tensor_r0);
    c.tensor_eps = get_or(t, "eps", c.tensor_eps);
  }
  const auto mt = get_or<std::string>(root, "macro_tensor", "periodic");
  if (mt == "periodic")
    c.macro_tensor = MacroTensor::periodic;
  else if (mt == "assembled")
    c.macro_tensor = MacroTensor::assembled;
  else
    throw ConfigError("macro_tensor must be 'periodic' or 'assembled'");
  c.out = get_or<std::string>(root, "output", c.out.string());
  c.drag_cache = get_or<std::string>(root, "drag_cache", c.drag_cache.string());
  c.threads = get_or(root, "threads", c.threads);
  return c;
}

StudyConfig load_config(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read config " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------- report

std::string trend_verdict(const std::vector<double>& v) {
  if (v.size() < 2) return "inconclusive";
  for (std::size_t k = 1; k < v.size(); ++k)
    if (!(v[k - 1] > 0.0 && v[k] / v[k - 1] < 1.0)) return "inconclusive";
  return "monotone-decreasing";
}

double loglog_slope(const std::vector<double>& eps, const std::vector<double>& err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < eps.size() && k < err.size(); ++k) {
    if (!(eps[k] > 0 && err[k] > 0)) continue;
    const double x = std::log(eps[k]), y = std::log(err[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double den = n * sxx - sx * sx;
  return den != 0 ? (n * sxy - sx * sy) / den : std::numeric_limits<double>::quiet_NaN();
}

void ConvergenceReport::add(EpsResult r) {
  entries.push_back(std::move(r));
  std::stable_sort(entries.begin(), entries.end(), [](const EpsResult& a, const EpsResult& b) { return a.eps > b.eps; });
}

void ConvergenceReport::finalize() {
  verdicts.clear();
  bool all = !verdict_norms.empty();
  for (const auto& name : norm_names) {
    std::vector<double> v;
    bool complete = true;
    for (const auto& e : entries) {
      auto it = e.norms.find(name);
      if (!e.ok || it == e.norms.end()) {
        complete = false;
        continue;
      }
      v.push_back(it->second);
    }
    const std::string verdict_n = complete ? trend_verdict(v) : "inconclusive";
    verdicts[name] = verdict_n;
    if (std::find(verdict_norms.begin(), verdict_norms.end(), name) != verdict_norms.end() &&
        verdict_n != "monotone-decreasing")
      all = false;
  }
  verdict = all ? "monotone-decreasing" : "inconclusive";
}

bool ConvergenceReport::partial_failure() const {
  return std::any_of(entries.begin(), entries.end(), [](const EpsResult& e) { return !e.ok; });
}

namespace {
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double from_num(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }
}  // namespace

std::string ConvergenceReport::to_json() const {
  json j;
  j["kind"] = kind;
  j["norm_names"] = norm_names;
  j["verdict_norms"] = verdict_norms;
  j["entries"] = json::array();
  for (const auto& e : entries) {
    json x;
    x["eps"] = e.eps;
    x["holes"] = e.holes;
    x["cells"] = e.cells;
    x["under_resolved"] = e.under_resolved;
    x["ok"] = e.ok;
    x["error"] = e.error;
    x["norms"] = json::object();
    for (const auto& [k, v] : e.norms) x["norms"][k] = num(v);
    x["monitors"] = json::object();
    for (const auto& [k, v] : e.monitors) x["monitors"][k] = num(v);
    j["entries"].push_back(x);
  }
  j["verdicts"] = verdicts;
  j["verdict"] = verdict;
  j["info"] = json::object();
  for (const auto& [k, v] : info) j["info"][k] = num(v);
  return j.dump(2) + "\n";
}

ConvergenceReport ConvergenceReport::from_json(const std::string& text) {
  ConvergenceReport r;
  json j;
  try {
    j = json::parse(text);
    r.kind = j.at("kind").get<std::string>();
    r.norm_names = j.at("norm_names").get<std::vector<std::string>>();
    r.verdict_norms = j.at("verdict_norms").get<std::vector<std::string>>();
    for (const auto& x : j.at("entries")) {
      EpsResult e;
      e.eps = x.at("eps").get<double>();
      e.holes = x.at("holes").get<std::size_t>();
      e.cells = x.at("cells").get<int>();
      e.under_resolved = x.at("under_resolved").get<bool>();
      e.ok = x.at("ok").get<bool>();
      e.error = x.at("error").get<std::string>();
      for (const auto& [k, v] : x.at("norms").items()) e.norms[k] = from_num(v);
      for (const auto& [k, v] : x.at("monitors").items()) e.monitors[k] = from_num(v);
      r.entries.push_back(std::move(e));
    }
    for (const auto& [k, v] : j.at("info").items()) r.info[k] = from_num(v);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  r.finalize();
  return r;
}

void emit_report(const ConvergenceReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write " + (dir / name).string());
    return out;
  };
  char buf[256];
  {
    auto out = open("errors.csv");
    out << "eps,norm,value\n";
    for (const auto& e : r.entries)
      for (const auto& name : r.norm_names) {
        auto it = e.norms.find(name);
        if (!e.ok || it == e.norms.end()) continue;
        std::snprintf(buf, sizeof buf, "%.12g,%s,%.12e\n", e.eps, name.c_str(), it->second);
        out << buf;
      }
  }
  for (const auto& name : r.norm_names) {
    auto out = open("plot_" + name + ".dat");
    out << "# eps error log10_eps log10_error\n";
    for (const auto& e : r.entries) {
      auto it = e.norms.find(name);
      if (!e.ok || it == e.norms.end() || !(it->second > 0)) continue;
      std::snprintf(buf, sizeof buf, "%.12g %.12e %.12g %.12g\n", e.eps, it->second, std::log10(e.eps),
                    std::log10(it->second));
      out << buf;
    }
  }
  {
    auto out = open("verdict.txt");
    out << "study: " << r.kind << "\n";
    out << "verdict: " << r.verdict << "\n";
    for (const auto& name : r.norm_names) {
      std::vector<double> eps, err;
      for (const auto& e : r.entries) {
        auto it = e.norms.find(name);
        if (e.ok && it != e.norms.end()) {
          eps.push_back(e.eps);
          err.push_back(it->second);
        }
      }
      const bool used = std::find(r.verdict_norms.begin(), r.verdict_norms.end(), name) != r.verdict_norms.end();
      auto vit = r.verdicts.find(name);
      std::snprintf(buf, sizeof buf, "%s: %s%s, log-log slope %.4g\n", name.c_str(),
                    vit == r.verdicts.end() ? "inconclusive" : vit->second.c_str(), used ? "" : " (not in verdict)",
                    loglog_slope(eps, err));
      out << buf;
    }
    for (const auto& e : r.entries)
      if (!e.ok) out << "eps " << e.eps << " failed: " << e.error << "\n";
    out << "note: trends on the computed sequence only; no limit or rate is claimed\n";
  }
  {
    auto out = open("report.json");
    out << r.to_json();
  }
}

// ---------------------------------------------------------------- grids and restriction

StaggeredGrid study_grid(const Box& box, int n) {
  numerics::Index3 d{};
  for (int a = 0; a < 3; ++a) d[a] = static_cast<int>(std::lround(box.length(a) * n));
  return StaggeredGrid::uniform_box(d, box.lo, box.hi);
}

geometry::PerforatedDomain study_domain(const StudyConfig& c, double eps) {
  try {
    return geometry::build_perforated_domain(c.box, eps, c.shape, c.seed);
  } catch (const EmptyDomain&) {
    return geometry::PerforatedDomain(c.box, eps, c.seed, {});
  }
}

namespace {
numerics::Index3 ratio(const StaggeredGrid& fine, const StaggeredGrid& coarse) {
  numerics::Index3 r{};
  for (int a = 0; a < 3; ++a) {
    if (coarse.dims()[a] <= 0 || fine.dims()[a] % coarse.dims()[a])
      throw PreconditionError("restriction needs an integer refinement ratio");
    r[a] = fine.dims()[a] / coarse.dims()[a];
  }
  return r;
}
}  // namespace

std::vector<double> restrict_cells(const StaggeredGrid& fine, std::span<const double> v, const StaggeredGrid& coarse) {
  const auto r = ratio(fine, coarse);
  std::vector<double> out(coarse.cell_count(), 0.0), vol(coarse.cell_count(), 0.0);
  numerics::for_each_cell(fine, [&](int i, int j, int k, std::size_t c) {
    const std::size_t cc = coarse.cell_index(i / r[0], j / r[1], k / r[2]);
    const double w = fine.cell_volume(i, j, k);
    out[cc] += w * v[c];
    vol[cc] += w;
  });
  for (std::size_t c = 0; c < out.size(); ++c) out[c] /= vol[c];
  return out;
}

std::vector<double> restrict_faces(const StaggeredGrid& fine, std::span<const double> v, const StaggeredGrid& coarse) {
  const auto r = ratio(fine, coarse);
  FaceField out(coarse), area(coarse);
  // fine faces lying on a coarse face: flux-weighted average
  numerics::for_each_face(fine, [&](int a, int i, int j, int k, std::size_t f) {
    const numerics::Index3 p{i, j, k};
    if (p[a] % r[a]) return;
    numerics::Index3 q{};
    for (int b = 0; b < 3; ++b) q[b] = b == a ? p[b] / r[b] : p[b] / r[b];
    const double w = fine.face_area(a, p);
    out(a, q[0], q[1], q[2]) += w * v[f];
    area(a, q[0], q[1], q[2]) += w;
  });
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = area[f] > 0 ? out[f] / area[f] : 0.0;
  return out.data();
}

namespace {

double l2_cells(const StaggeredGrid& g, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  numerics::for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    s += g.cell_volume(i, j, k) * (a[c] - b[c]) * (a[c] - b[c]);
  });
  return s;
}

double l1_cells(const StaggeredGrid& g, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  numerics::for_each_cell(g, [&](int i, int j, int k, std::size_t c) { s += g.cell_volume(i, j, k) * std::abs(a[c] - b[c]); });
  return s;
}

double l2_faces(const StaggeredGrid& g, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  numerics::for_each_face(g, [&](int ax, int i, int j, int k, std::size_t f) {
    s += g.face_volume(ax, {i, j, k}) * (a[f] - b[f]) * (a[f] - b[f]);
  });
  return s;
}

// zero extension: no velocity on faces touching a hole
std::vector<double> zero_extended(const micro::Medium& m, const FaceField& u) {
  std::vector<double> v = u.data();
  if (!m.has_holes()) return v;
  const auto free = m.free_faces();
  for (std::size_t f = 0; f < v.size(); ++f)
    if (!free[f]) v[f] = 0.0;
  return v;
}

std::vector<numerics::Sym3> macro_tensor_for(const StudyConfig& c, const StaggeredGrid& g,
                                             const geometry::PerforatedDomain* dom, const Eigen::Matrix3d& D_inf,
                                             cell::DragCache& cache) {
  if (c.macro_tensor == MacroTensor::periodic || !dom) return macro::uniform_tensor(g, D_inf);
  const auto field = effective::assemble_effective_tensor(*dom, effective::lattice_partition(c.box, dom->eps()), cache,
                                                          c.cell_grid);
  return macro::sample_tensor(g, field);
}

}  // namespace

Point3 study_force(const StudyConfig& c, const Point3& x) {
  const double A = c.force_amplitude, tp = 2 * M_PI;
  return {A * std::sin(tp * x[2]), A * std::sin(tp * x[0]), A * std::sin(tp * x[1])};
}

double study_theta(const StudyConfig& c, const Point3& x) {
  Point3 t{};
  for (int a = 0; a < 3; ++a) t[a] = (x[a] - c.box.lo[a]) / c.box.length(a);
  return c.theta_amplitude * std::sin(M_PI * t[0]) * std::sin(M_PI * t[1]) * std::sin(M_PI * t[2]);
}

CellField study_theta_field(const StudyConfig& c, const StaggeredGrid& g) {
  CellField th(g);
  numerics::for_each_cell(g, [&](int i, int j, int k, std::size_t q) { th[q] = study_theta(c, g.cell_center(i, j, k)); });
  return th;
}

double study_rho0(const StudyConfig& c, const Point3& x) {
  Point3 t{};
  for (int a = 0; a < 3; ++a) t[a] = (x[a] - c.box.lo[a]) / c.box.length(a);
  const double tp = 2 * M_PI;
  return 1.0 + c.rho_amplitude * std::sin(tp * t[0]) * std::sin(tp * t[1]) * std::sin(tp * t[2]);
}

// b curl(psi (1,1,1)), psi = prod sin^2(pi t_a): divergence-free, vanishing on the walls
Point3 study_u0(const StudyConfig& c, const Point3& x) {
  Point3 t{}, s{}, co{};
  for (int a = 0; a < 3; ++a) {
    t[a] = (x[a] - c.box.lo[a]) / c.box.length(a);
    s[a] = std::sin(M_PI * t[a]);
    co[a] = std::cos(M_PI * t[a]);
  }
  Point3 d{};
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, e = (a + 2) % 3;
    d[a] = 2 * M_PI / c.box.length(a) * s[a] * co[a] * s[b] * s[b] * s[e] * s[e];
  }
  const double B = c.u_amplitude;
  return {B * (d[1] - d[2]), B * (d[2] - d[0]), B * (d[0] - d[1])};
}

PeriodicLimit periodic_limit(const StudyConfig& c, cell::DragCache& cache) {
  const auto shape = geometry::make_hole_shape(c.shape, c.seed);
  const auto rep = effective::periodic_effective_tensor(shape, c.tensor_r0, c.tensor_eps, cache, c.cell_grid);
  return {rep.D_inf, rep.unreliable};
}

ConvergenceReport run_steady_convergence(const StudyConfig& c, cell::DragCache& cache) {
  c.validate();
  ConvergenceReport rep;
  rep.kind = "steady";
  rep.norm_names = {"U_L2", "P_L2"};
  rep.verdict_norms = {"U_L2"};  // pressure converges only weakly
  const auto eps = c.eps_list();
  int n_macro = 0;
  for (std::size_t k = 0; k < eps.size(); ++k) n_macro = std::max(n_macro, c.cells_for(k));
  const StaggeredGrid gm = study_grid(c.box, n_macro);
  const StaggeredGrid gr = study_grid(c.box, c.reference());

  Eigen::Matrix3d D_inf = Eigen::Matrix3d::Zero();
  if (c.macro_tensor == MacroTensor::periodic) {
    const auto lim = periodic_limit(c, cache);
    D_inf = lim.D;
    rep.info["D_inf_xx"] = D_inf(0, 0);
    rep.info["D_inf_yy"] = D_inf(1, 1);
    rep.info["D_inf_zz"] = D_inf(2, 2);
    rep.info["D_inf_unreliable"] = lim.unreliable ? 1.0 : 0.0;
  }
  const auto force_fn = [&](const Point3& x) { return study_force(c, x); };

  // the limit problem on the finest grid (once, unless the tensor follows eps)
  std::vector<double> U_ref, P_ref;
  auto macro_solve = [&](const geometry::PerforatedDomain* dom) {
    const auto D = macro_tensor_for(c, gm, dom, D_inf, cache);
    const auto f = micro::face_force(gm, force_fn);
    const auto sol = macro::solve_homogenized_steady(gm, c.physics, D, study_theta_field(c, gm), f);
    U_ref = restrict_faces(gm, sol.u.span(), gr);
    P_ref = restrict_cells(gm, sol.p.span(), gr);
  };
  if (c.macro_tensor == MacroTensor::periodic) macro_solve(nullptr);

  for (std::size_t k = 0; k < eps.size(); ++k) {
    EpsResult r;
    r.eps = eps[k];
    r.cells = c.cells_for(k);
    r.under_resolved = 1.0 / r.cells > eps[k] * eps[k] * eps[k] / 4.0 * (1 + 1e-12);
    try {
      const auto dom = study_domain(c, eps[k]);
      r.holes = dom.size();
      const StaggeredGrid g = study_grid(c.box, r.cells);
      const auto mask = geometry::classify_cells(dom, g);
      const auto med = micro::perforated_medium(mask);
      r.monitors["solid_cells"] = static_cast<double>(mask.solid_count());
      r.monitors["hole_volume"] = dom.hole_volume();
      if (dom.size() > 0) {
        const auto field = effective::assemble_effective_tensor(dom, effective::lattice_partition(c.box, eps[k]),
                                                                cache, c.cell_grid);
        double tr = 0.0;
        for (std::size_t m = 0; m < field.size(); ++m) tr += field[m].trace() / 3.0;
        r.monitors["D_mean_diagonal"] = tr / static_cast<double>(field.size());
      } else {
        r.monitors["D_mean_diagonal"] = 0.0;
      }
      if (c.macro_tensor == MacroTensor::assembled) macro_solve(&dom);
      const auto f = micro::face_force(g, force_fn);
      const auto sol = micro::solve_steady_stokes(med, c.physics, study_theta_field(c, g), f);
      const auto u = zero_extended(med, sol.u);
      const auto ur = restrict_faces(g, u, gr);
      const auto pr = restrict_cells(g, sol.p.span(), gr);
      r.norms["U_L2"] = std::sqrt(l2_faces(gr, ur, U_ref));
      r.norms["P_L2"] = std::sqrt(l2_cells(gr, pr, P_ref));
      r.monitors["iterations"] = sol.stats.iterations;
      r.monitors["momentum_residual"] = sol.stats.momentum_residual;
      r.monitors["divergence_residual"] = sol.stats.divergence_residual;
      r.monitors["U_L2_norm"] = std::sqrt(l2_faces(gr, ur, std::vector<double>(ur.size(), 0.0)));
      r.ok = true;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
    rep.add(std::move(r));
  }
  rep.info["macro_cells"] = n_macro;
  rep.info["reference_cells"] = c.reference();
  rep.finalize();
  return rep;
}

namespace {
struct Snapshot {
  std::vector<double> u, theta, rho;
};
}  // namespace

ConvergenceReport run_evolution_convergence(const StudyConfig& c, cell::DragCache& cache) {
  c.validate();
  ConvergenceReport rep;
  rep.kind = "evolution";
  rep.norm_names = {"u_L2tx", "theta_L2tx", "rho_L1sup"};
  rep.verdict_norms = rep.norm_names;
  const auto eps = c.eps_list();
  int n_macro = 0;
  for (std::size_t k = 0; k < eps.size(); ++k) n_macro = std::max(n_macro, c.cells_for(k));
  const StaggeredGrid gm = study_grid(c.box, n_macro);
  const StaggeredGrid gr = study_grid(c.box, c.reference());
  const auto rho_fn = [&](const Point3& x) { return study_rho0(c, x); };
  const auto u_fn = [&](const Point3& x) { return study_u0(c, x); };

  Eigen::Matrix3d D_inf = Eigen::Matrix3d::Zero();
  if (c.macro_tensor == MacroTensor::periodic) {
    const auto lim = periodic_limit(c, cache);
    D_inf = lim.D;
    rep.info["D_inf_xx"] = D_inf(0, 0);
    rep.info["D_inf_yy"] = D_inf(1, 1);
    rep.info["D_inf_zz"] = D_inf(2, 2);
    rep.info["D_inf_unreliable"] = lim.unreliable ? 1.0 : 0.0;
  }

  micro::EvolveOptions eo;
  eo.dt = c.dt;
  eo.t_end = c.t_end;
  eo.checkpoint_every = c.checkpoint_every;
  std::filesystem::create_directories(c.out);

  std::vector<Snapshot> ref;
  double dt_eff = 0.0;
  auto macro_run = [&](const geometry::PerforatedDomain* dom) {
    ref.clear();
    const auto D = macro_tensor_for(c, gm, dom, D_inf, cache);
    const auto med = macro::homogenized_medium(gm, D);
    auto s0 = micro::initial_state(med, c.physics, rho_fn, u_fn);
    auto o = eo;
    o.label = "macro";
    o.checkpoint_dir = c.out / "checkpoints";
    const auto res = micro::evolve(med, c.physics, std::move(s0), o, [&](int, const micro::FluidState& s) {
      ref.push_back({restrict_faces(gm, s.u.span(), gr), restrict_cells(gm, s.theta.span(), gr),
                     restrict_cells(gm, s.rho.span(), gr)});
    });
    res.trace.write_csv(c.out / "trace_macro.csv");
    const auto& rows = res.trace.rows;
    dt_eff = rows.size() > 1 ? rows[1].t - rows[0].t : c.dt;
    double ts = 0.0;
    for (const auto& row : rows) ts = std::max(ts, row.theta_sup);
    rep.info["macro_theta_sup"] = ts;
  };
  if (c.macro_tensor == MacroTensor::periodic) macro_run(nullptr);

  std::vector<double> theta_sups;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    EpsResult r;
    r.eps = eps[k];
    r.cells = c.cells_for(k);
    r.under_resolved = 1.0 / r.cells > eps[k] * eps[k] * eps[k] / 4.0 * (1 + 1e-12);
    char label[64];
    std::snprintf(label, sizeof label, "eps_%.6g", eps[k]);
    try {
      const auto dom = study_domain(c, eps[k]);
      r.holes = dom.size();
      if (c.macro_tensor == MacroTensor::assembled) macro_run(&dom);
      const StaggeredGrid g = study_grid(c.box, r.cells);
      const auto med = micro::perforated_medium(geometry::classify_cells(dom, g));
      auto s0 = micro::initial_state(med, c.physics, rho_fn, u_fn);
      double u2 = 0.0, t2 = 0.0, rsup = 0.0;
      auto o = eo;
      o.label = label;
      o.checkpoint_dir = c.out / "checkpoints";
      const auto res = micro::evolve(med, c.physics, std::move(s0), o, [&](int n, const micro::FluidState& s) {
        const Snapshot& m = ref.at(static_cast<std::size_t>(n));
        const auto ur = restrict_faces(g, zero_extended(med, s.u), gr);
        const auto tr = restrict_cells(g, s.theta.span(), gr);
        const auto rr = restrict_cells(g, s.rho.span(), gr);
        if (n > 0) {
          u2 += dt_eff * l2_faces(gr, ur, m.u);
          t2 += dt_eff * l2_cells(gr, tr, m.theta);
        }
        rsup = std::max(rsup, l1_cells(gr, rr, m.rho));
      });
      res.trace.write_csv(c.out / (std::string("trace_") + label + ".csv"));
      r.norms["u_L2tx"] = std::sqrt(u2);
      r.norms["theta_L2tx"] = std::sqrt(t2);
      r.norms["rho_L1sup"] = rsup;
      double ts = 0.0, er = -std::numeric_limits<double>::infinity(), mass_drift = 0.0;
      for (const auto& row : res.trace.rows) {
        ts = std::max(ts, row.theta_sup);
        er = std::max(er, row.step_residual);
        mass_drift = std::max(mass_drift, std::abs(row.mass - res.trace.rows.front().mass) / res.trace.rows.front().mass);
      }
      r.monitors["theta_sup"] = ts;
      r.monitors["max_step_energy_residual"] = er;
      r.monitors["mass_drift"] = mass_drift;
      r.monitors["initial_kinetic"] = res.trace.rows.front().kinetic;
      r.monitors["rho_min"] = res.trace.rows.back().rho_min;
      r.monitors["rho_max"] = res.trace.rows.back().rho_max;
      r.monitors["steps"] = static_cast<double>(res.trace.rows.size() - 1);
      theta_sups.push_back(ts);
      r.ok = true;
    } catch (const micro::EvolutionAborted& e) {
      r.ok = false;
      r.error = e.what();
      e.trace().write_csv(c.out / (std::string("trace_") + label + ".csv"));
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
    rep.add(std::move(r));
  }
  if (!theta_sups.empty()) {
    const auto [lo, hi] = std::minmax_element(theta_sups.begin(), theta_sups.end());
    rep.info["theta_sup_variation"] = *hi > 0 ? (*hi - *lo) / *hi : 0.0;
  }
  rep.info["macro_cells"] = n_macro;
  rep.info["reference_cells"] = c.reference();
  rep.finalize();
  return rep;
}

namespace {

std::string eps_label(double eps) {
  char b[64];
  std::snprintf(b, sizeof b, "eps_%.6g", eps);
  return b;
}

void summarize_trace(EpsResult& r, const micro::MonitorTrace& t) {
  if (t.rows.empty()) return;
  double ts = 0.0, er = -std::numeric_limits<double>::infinity();
  for (const auto& row : t.rows) {
    ts = std::max(ts, row.theta_sup);
    er = std::max(er, row.step_residual);
  }
  r.monitors["theta_sup"] = ts;
  r.monitors["max_step_energy_residual"] = er;
  r.monitors["initial_kinetic"] = t.rows.front().kinetic;
  r.monitors["final_kinetic"] = t.rows.back().kinetic;
  r.monitors["mass"] = t.rows.back().mass;
  r.monitors["rho_min"] = t.rows.back().rho_min;
  r.monitors["rho_max"] = t.rows.back().rho_max;
  r.monitors["steps"] = static_cast<double>(t.rows.size() - 1);
}

// One level: steady solve or evolution on the given medium, output under dir.
void run_level(const StudyConfig& c, const micro::Medium& med, const std::filesystem::path& dir, EpsResult& r) {
  std::filesystem::create_directories(dir);
  const auto& g = med.grid;
  if (c.kind == StudyKind::evolution) {
    micro::EvolveOptions eo;
    eo.dt = c.dt;
    eo.t_end = c.t_end;
    eo.checkpoint_every = c.checkpoint_every;
    eo.checkpoint_dir = dir / "checkpoints";
    auto s0 = micro::initial_state(med, c.physics, [&](const Point3& x) { return study_rho0(c, x); },
                                   [&](const Point3& x) { return study_u0(c, x); });
    try {
      const auto res = micro::evolve(med, c.physics, std::move(s0), eo);
      res.trace.write_csv(dir / "trace.csv");
      summarize_trace(r, res.trace);
      const auto& s = res.final_state;
      micro::write_field(dir / "u.field", "u", g, s.t, s.u.span(), 1);
      micro::write_field(dir / "p.field", "p", g, s.t, s.p.span());
      micro::write_field(dir / "theta.field", "theta", g, s.t, s.theta.span());
      micro::write_field(dir / "rho.field", "rho", g, s.t, s.rho.span());
    } catch (const micro::EvolutionAborted& e) {
      e.trace().write_csv(dir / "trace.csv");
      throw;
    }
  } else {
    const auto f = micro::face_force(g, [&](const Point3& x) { return study_force(c, x); });
    const auto th = study_theta_field(c, g);
    const auto sol = micro::solve_steady_stokes(med, c.physics, th, f);
    micro::write_field(dir / "u.field", "u", g, 0.0, sol.u.span(), 1);
    micro::write_field(dir / "p.field", "p", g, 0.0, sol.p.span());
    micro::write_field(dir / "theta.field", "theta", g, 0.0, th.span());
    r.monitors["iterations"] = sol.stats.iterations;
    r.monitors["momentum_residual"] = sol.stats.momentum_residual;
    r.monitors["divergence_residual"] = sol.stats.divergence_residual;
  }
}

}  // namespace

ConvergenceReport run_micro(const StudyConfig& c, cell::DragCache&) {
  c.validate();
  ConvergenceReport rep;
  rep.kind = "micro-" + to_string(c.kind);
  const auto eps = c.eps_list();
  for (std::size_t k = 0; k < eps.size(); ++k) {
    EpsResult r;
    r.eps = eps[k];
    r.cells = c.cells_for(k);
    r.under_resolved = 1.0 / r.cells > eps[k] * eps[k] * eps[k] / 4.0 * (1 + 1e-12);
    try {
      const auto dom = study_domain(c, eps[k]);
      r.holes = dom.size();
      const auto mask = geometry::classify_cells(dom, study_grid(c.box, r.cells));
      const auto dir = c.out / ("micro_" + eps_label(eps[k]));
      std::filesystem::create_directories(dir);
      geometry::write_mask(mask, dir / "mask.txt");
      run_level(c, micro::perforated_medium(mask), dir, r);
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    rep.add(std::move(r));
  }
  rep.finalize();
  return rep;
}

ConvergenceReport run_macro(const StudyConfig& c, cell::DragCache& cache) {
  c.validate();
  ConvergenceReport rep;
  rep.kind = "macro-" + to_string(c.kind);
  const auto eps = c.eps_list();
  int n = 0;
  for (std::size_t k = 0; k < eps.size(); ++k) n = std::max(n, c.cells_for(k));
  const StaggeredGrid g = study_grid(c.box, n);
  Eigen::Matrix3d D_inf = Eigen::Matrix3d::Zero();
  if (c.macro_tensor == MacroTensor::periodic) {
    const auto lim = periodic_limit(c, cache);
    D_inf = lim.D;
    rep.info["D_inf_xx"] = D_inf(0, 0);
    rep.info["D_inf_yy"] = D_inf(1, 1);
    rep.info["D_inf_zz"] = D_inf(2, 2);
    rep.info["D_inf_unreliable"] = lim.unreliable ? 1.0 : 0.0;
  }
  const std::size_t levels = c.macro_tensor == MacroTensor::periodic ? 1 : eps.size();
  for (std::size_t k = 0; k < levels; ++k) {
    EpsResult r;
    r.eps = c.macro_tensor == MacroTensor::periodic ? 0.0 : eps[k];
    r.cells = n;
    try {
      std::optional<geometry::PerforatedDomain> dom;
      if (c.macro_tensor == MacroTensor::assembled) dom = study_domain(c, eps[k]);
      const auto D = macro_tensor_for(c, g, dom ? &*dom : nullptr, D_inf, cache);
      const auto dir = c.out / (c.macro_tensor == MacroTensor::periodic ? std::string("macro") : "macro_" + eps_label(eps[k]));
      run_level(c, macro::homogenized_medium(g, D), dir, r);
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    rep.add(std::move(r));
  }
  rep.finalize();
  return rep;
}

}  // namespace homog::harness
