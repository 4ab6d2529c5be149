#include "homog/microscale.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "homog/numerics/conduction.hpp"
#include "homog/numerics/kernels.hpp"

namespace homog::micro {

using numerics::Exec;
using numerics::for_each_cell;
using numerics::for_each_face;
using numerics::Index3;
using numerics::Point3;

bool Medium::has_holes() const { return std::any_of(solid.begin(), solid.end(), [](unsigned char c) { return c; }); }

std::vector<unsigned char> Medium::free_faces() const {
  const std::size_t nf = grid.face_count();
  const auto wall = numerics::wall_faces(grid);
  const auto pen = numerics::penalty_from_solid(grid, solid, 1.0);
  std::vector<unsigned char> free(nf);
  for (std::size_t f = 0; f < nf; ++f) free[f] = !wall[f] && pen[f] == 0.0;
  return free;
}

Medium perforated_medium(const geometry::MaskField& mask) {
  Medium m;
  m.grid = mask.grid;
  m.solid = mask.solid;
  return m;
}

Medium open_medium(const StaggeredGrid& g, std::vector<numerics::Sym3> D) {
  Medium m;
  m.grid = g;
  if (!D.empty() && D.size() != g.cell_count()) throw PreconditionError("tensor field does not match the grid");
  m.D = std::move(D);
  return m;
}

std::vector<double> face_force(const StaggeredGrid& g, const std::function<Point3(const Point3&)>& f) {
  std::vector<double> out(g.face_count(), 0.0);
  for_each_face(g, [&](int a, int i, int j, int k, std::size_t idx) {
    const Index3 p{i, j, k};
    out[idx] = g.face_volume(a, p) * f(g.face_center(a, p))[a];
  });
  return out;
}

std::vector<double> face_mass(const StaggeredGrid& g, const CellField& rho) {
  std::vector<double> m(g.face_count());
  const Index3 n = g.dims();
  for_each_face(g, [&](int a, int i, int j, int k, std::size_t idx) {
    const Index3 p{i, j, k};
    Index3 lo = p;
    lo[a] -= 1;
    double r;
    if (p[a] == 0)
      r = rho(i, j, k);
    else if (p[a] == n[a])
      r = rho(lo[0], lo[1], lo[2]);
    else
      r = 0.5 * (rho(lo[0], lo[1], lo[2]) + rho(i, j, k));
    m[idx] = g.face_volume(a, p) * r;
  });
  return m;
}

double kinetic_energy(const StaggeredGrid& g, const CellField& rho, const FaceField& u) {
  const auto m = face_mass(g, rho);
  double e = 0.0;
  for (std::size_t f = 0; f < m.size(); ++f) e += m[f] * u[f] * u[f];
  return 0.5 * e;
}

HeatResult solve_heat(const Medium& m, const PhysParams& p, const FaceField& u, const CellField* guess, double rtol) {
  const auto kappa = physics::conductivity(m.grid, m.solid, p);
  const numerics::ConductionSolver solver(m.grid, kappa);
  const auto rhs = physics::heat_source(m.grid, u.span(), p.grad_F);
  HeatResult r;
  r.theta = CellField(m.grid);
  if (numerics::max_abs(rhs) == 0.0) {
    r.info.converged = true;
    return r;
  }
  auto sol = solver.solve(rhs, guess ? guess->span() : std::span<const double>{}, rtol);
  r.theta.data() = std::move(sol.theta);
  r.info = std::move(sol.info);
  r.dissipation = solver.op().energy(r.theta.span());
  return r;
}

namespace {

numerics::FrictionOperator make_friction(const Medium& m, const std::vector<double>& mu) {
  if (m.D.empty()) return {};
  return numerics::FrictionOperator(m.grid, physics::friction_weights(m.grid, mu, m.D));
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

numerics::StokesSolution solve_steady_stokes(const Medium& m, const PhysParams& p, const CellField& theta,
                                             std::span<const double> force, const numerics::SaddleOptions& opt) {
  numerics::StokesInput in;
  in.mu_cell = physics::viscosity_field(theta.span(), p);
  in.form = numerics::ViscousForm::symmetric_gradient;
  in.solid_cell = m.solid;
  in.force.assign(force.begin(), force.end());
  in.friction = make_friction(m, in.mu_cell);
  return numerics::stokes_solve(m.grid, in, opt);
}

SteadyResult solve_steady_coupled(const Medium& m, const PhysParams& p, std::span<const double> force,
                                  const CoupledOptions& opt) {
  p.validate();
  SteadyResult res;
  res.theta = CellField(m.grid);
  for (int it = 1; it <= opt.max_outer; ++it) {
    auto st = solve_steady_stokes(m, p, res.theta, force, opt.saddle);
    auto heat = solve_heat(m, p, st.u, &res.theta);
    const double nrm = numerics::norm2(heat.theta.span());
    const double inc = nrm > 0 ? l2_distance(heat.theta.span(), res.theta.span()) / nrm : 0.0;
    res.increments.push_back(inc);
    if (res.increments.size() >= 2 && res.increments[res.increments.size() - 2] > 0)
      res.contraction.push_back(inc / res.increments[res.increments.size() - 2]);
    res.u = std::move(st.u);
    res.p = std::move(st.p);
    res.last = std::move(st.stats);
    res.theta = std::move(heat.theta);
    res.outer_iterations = it;
    // with a temperature-independent viscosity the flow does not see theta
    if (p.viscosity.is_constant() || inc <= opt.tol) return res;
  }
  std::ostringstream os;
  os << "Picard iteration did not converge in " << opt.max_outer << " outer iterations (last increment "
     << res.increments.back() << ")";
  throw SolverError(os.str(), res.increments);
}

double cfl_number(const StaggeredGrid& g, const FaceField& u, double dt) {
  double c = 0.0;
  for (int a = 0; a < 3; ++a) c = std::max(c, dt * numerics::max_abs(u.comp(a)) / g.axis(a).min_width());
  return c;
}

CellField advect_density(const Medium& m, const CellField& rho, const FaceField& u, double dt, Exec exec,
                         double cfl_max) {
  const StaggeredGrid& g = m.grid;
  const double cfl = cfl_number(g, u, dt);
  if (cfl > cfl_max) {
    std::ostringstream os;
    os << "CFL number " << cfl << " exceeds " << cfl_max << " (dt = " << dt << ")";
    throw CflViolation(os.str());
  }
  const auto free = m.free_faces();
  const Index3 n = g.dims();
  CellField out(g);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Index3 c{i, j, k};
        const double rc = rho(i, j, k);
        double net = 0.0;  // outgoing mass
        for (int a = 0; a < 3; ++a) {
          const std::size_t off = u.offset(a);
          for (int side = 0; side < 2; ++side) {
            Index3 fp = c;
            fp[a] += side;
            const std::size_t f = off + g.face_index(a, fp[0], fp[1], fp[2]);
            if (!free[f]) continue;
            const double flux = g.face_area(a, fp) * u[f];  // along +a
            Index3 nb = c;
            nb[a] += side ? 1 : -1;
            const double rn = rho(nb[0], nb[1], nb[2]);
            const double outward = side ? flux : -flux;
            net += outward * (outward > 0 ? rc : rn);
          }
        }
        out(i, j, k) = rc - dt * net / g.cell_volume(i, j, k);
      }
  return out;
}

ConvectionOperator::ConvectionOperator(const StaggeredGrid& g, std::vector<unsigned char> free, const CellField& rho,
                                       const FaceField& u)
    : grid_(g), free_(std::move(free)), rho_(&rho), u_(&u) {}

// Mass flux from the component-a control volume at face p into its +b neighbour.
double ConvectionOperator::flux(int a, int b, const Index3& p) const {
  const CellField& rho = *rho_;
  const FaceField& u = *u_;
  if (a == b) {
    const int b1 = (a + 1) % 3, b2 = (a + 2) % 3;
    const double area = grid_.axis(b1).width(p[b1]) * grid_.axis(b2).width(p[b2]);
    Index3 q = p;
    q[a] += 1;
    const double ub = 0.5 * (u(a, p[0], p[1], p[2]) + u(a, q[0], q[1], q[2]));
    return area * rho(p[0], p[1], p[2]) * ub;
  }
  const int c = 3 - a - b;
  Index3 lo = p, hi = p;  // b-faces straddling the a-node
  lo[a] -= 1;
  lo[b] += 1;
  hi[b] += 1;
  const double ub = 0.5 * (u(b, lo[0], lo[1], lo[2]) + u(b, hi[0], hi[1], hi[2]));
  Index3 c00 = p, c01 = p, c10 = p, c11 = p;
  c00[a] -= 1;
  c01[a] -= 1;
  c01[b] += 1;
  c11[b] += 1;
  const double r = 0.25 * (rho(c00[0], c00[1], c00[2]) + rho(c01[0], c01[1], c01[2]) + rho(c10[0], c10[1], c10[2]) +
                           rho(c11[0], c11[1], c11[2]));
  const double area = grid_.axis(a).dual(p[a]) * grid_.axis(c).width(p[c]);
  return area * r * ub;
}

void ConvectionOperator::apply(std::span<const double> w, std::span<double> out, Exec exec) const {
  for (int a = 0; a < 3; ++a) {
    const Index3 d = grid_.face_dims(a);
    const std::size_t off = u_->offset(a);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i) {
          const Index3 p{i, j, k};
          const std::size_t f = off + grid_.face_index(a, i, j, k);
          if (!free_[f]) {
            out[f] = 0.0;
            continue;
          }
          double s = 0.0;
          for (int b = 0; b < 3; ++b) {
            if (p[b] + 1 < d[b]) {
              Index3 q = p;
              q[b] += 1;
              const std::size_t g = off + grid_.face_index(a, q[0], q[1], q[2]);
              if (free_[g]) s += flux(a, b, p) * w[g];
            }
            if (p[b] > 0) {
              Index3 q = p;
              q[b] -= 1;
              const std::size_t g = off + grid_.face_index(a, q[0], q[1], q[2]);
              if (free_[g]) s -= flux(a, b, q) * w[g];
            }
          }
          out[f] = 0.5 * s;
        }
  }
}

StepResult step_momentum(const Medium& m, const PhysParams& p, const FluidState& state, const CellField& rho_new,
                         double dt, const StepOptions& opt) {
  if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
  const StaggeredGrid& g = m.grid;
  const std::size_t nf = g.face_count();
  const auto free = m.free_faces();
  const auto m0 = face_mass(g, state.rho);
  const auto m1 = face_mass(g, rho_new);
  StepResult res;
  StepReport& rep = res.report;
  rep.kinetic_before = kinetic_energy(g, state.rho, state.u);

  // convection sub-step: (Mbar + dt S) u* = M0 u^n
  std::vector<double> ustar(nf, 0.0);
  std::vector<double> mbar(nf);
  for (std::size_t f = 0; f < nf; ++f) mbar[f] = 0.5 * (m0[f] + m1[f]);
  std::vector<double> b(nf, 0.0);
  for (std::size_t f = 0; f < nf; ++f) b[f] = free[f] ? m0[f] * state.u[f] : 0.0;
  if (numerics::max_abs(b) > 0.0) {
    for (std::size_t f = 0; f < nf; ++f) ustar[f] = b[f] / mbar[f];
    if (opt.convection) {
      const ConvectionOperator S(g, free, state.rho, state.u);
      auto op = [&](std::span<const double> w, std::span<double> y) {
        S.apply(w, y);
        for (std::size_t f = 0; f < nf; ++f) y[f] = mbar[f] * w[f] + dt * y[f];
      };
      auto pre = [&](std::span<const double> r, std::span<double> z) {
        for (std::size_t f = 0; f < nf; ++f) z[f] = r[f] / mbar[f];
      };
      numerics::KrylovOptions ko;
      ko.rtol = opt.convection_rtol;
      ko.max_iter = 500;
      rep.krylov += numerics::bicgstab(op, pre, b, ustar, ko).iterations;
    }
  }
  {
    double e = 0.0;
    for (std::size_t f = 0; f < nf; ++f) e += m1[f] * ustar[f] * ustar[f];
    rep.kinetic_convected = 0.5 * e;
  }

  // implicit saddle solve, Picard-coupled with the heat problem
  const auto penalty = numerics::penalty_from_solid(g, m.solid, p.mu_low());
  std::vector<double> mass(nf), inertia(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    mass[f] = m1[f] / dt;
    inertia[f] = mass[f] * ustar[f];
  }
  CellField theta = state.theta;
  CellField theta_used = theta;
  numerics::StokesSolution sol;
  numerics::ViscousOperator viscous;
  numerics::FrictionOperator friction;
  std::vector<double> buoy;
  HeatResult heat;
  // the previous step is a good starting point
  bool have = state.u.matches(g) && state.p.matches(g);
  if (have) {
    sol.u = state.u;
    sol.p = state.p;
  }
  for (int it = 1;; ++it) {
    const auto mu = physics::viscosity_field(theta.span(), p);
    numerics::StokesProblem pb;
    pb.grid = g;
    pb.viscous = numerics::ViscousOperator(g, mu, numerics::ViscousForm::symmetric_gradient);
    pb.mass = mass;
    pb.penalty = penalty;
    pb.friction = make_friction(m, mu);
    buoy = physics::buoyancy_force(g, theta.span(), p.grad_F);
    pb.force = inertia;
    numerics::axpy(1.0, buoy, pb.force);
    viscous = pb.viscous;
    friction = pb.friction;
    const numerics::SaddleSolver solver(std::move(pb));
    sol = solver.solve(opt.saddle, have ? &sol : nullptr);
    have = true;
    rep.krylov += sol.stats.iterations;
    rep.picard = it;
    theta_used = theta;
    if (!opt.couple_heat) break;
    heat = solve_heat(m, p, sol.u, &theta);
    const double nrm = numerics::norm2(heat.theta.span());
    const double inc = nrm > 0 ? l2_distance(heat.theta.span(), theta.span()) / nrm : 0.0;
    theta = std::move(heat.theta);
    if (inc <= opt.picard_tol) break;
    if (it >= opt.max_picard) {
      std::ostringstream os;
      os << "momentum/heat Picard iteration stalled at increment " << inc;
      throw SolverError(os.str(), {});
    }
  }
  rep.momentum_residual = sol.stats.momentum_residual;
  rep.divergence_residual = sol.stats.divergence_residual;
  rep.diss_viscous = viscous.energy(sol.u.span());
  rep.diss_friction = friction.empty() ? 0.0 : friction.energy(sol.u.span());
  double pen = 0.0, work = 0.0;
  for (std::size_t f = 0; f < nf; ++f) {
    pen += penalty[f] * sol.u[f] * sol.u[f];
    work += buoy[f] * sol.u[f];
  }
  rep.diss_penalty = pen;
  rep.forcing_work = work;
  rep.diss_heat = opt.couple_heat ? heat.dissipation : 0.0;

  res.u = numerics::project_div_free(g, sol.u, m.solid, opt.project_tol);
  res.p = std::move(sol.p);
  res.theta = opt.couple_heat ? std::move(theta) : std::move(theta_used);
  rep.kinetic_after = kinetic_energy(g, rho_new, res.u);
  return res;
}

double holder_quotient(const StaggeredGrid& g, const CellField& theta, double nu) {
  const Index3 n = g.dims();
  double q = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int d = 1; d <= 8 && d < n[a]; d *= 2)
      for_each_cell(g, [&](int i, int j, int k, std::size_t) {
        Index3 o{i, j, k};
        o[a] += d;
        if (o[a] >= n[a]) return;
        const double dist = g.axis(a).center(o[a]) - g.axis(a).center(o[a] - d);
        q = std::max(q, std::abs(theta(o[0], o[1], o[2]) - theta(i, j, k)) / std::pow(dist, nu));
      });
  return q;
}

std::string MonitorTrace::csv() const {
  std::ostringstream os;
  os << "step,t,kinetic,diss_viscous,diss_heat,diss_friction,diss_penalty,energy_residual,step_residual,"
        "friction_rate,mass,rho_min,rho_max,rho_l2,theta_sup,theta_holder,solid_u_max,picard,krylov\n";
  char buf[64];
  for (const auto& r : rows) {
    os << r.step;
    for (double v : {r.t, r.kinetic, r.diss_viscous, r.diss_heat, r.diss_friction, r.diss_penalty, r.energy_residual,
                     r.step_residual, r.friction_rate, r.mass, r.rho_min, r.rho_max, r.rho_l2, r.theta_sup,
                     r.theta_holder, r.solid_u_max}) {
      std::snprintf(buf, sizeof buf, ",%.12e", v);
      os << buf;
    }
    os << ',' << r.picard << ',' << r.krylov << '\n';
  }
  return os.str();
}

void MonitorTrace::write_csv(const std::filesystem::path& p) const {
  std::ofstream out(p);
  out << csv();
  if (!out) throw Error("cannot write " + p.string());
}

namespace {

void fill_state_monitors(const Medium& m, const FluidState& s, MonitorRow& r) {
  const StaggeredGrid& g = m.grid;
  r.t = s.t;
  r.kinetic = kinetic_energy(g, s.rho, s.u);
  r.mass = 0.0;
  r.rho_l2 = 0.0;
  r.rho_min = std::numeric_limits<double>::infinity();
  r.rho_max = -r.rho_min;
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    const double v = g.cell_volume(i, j, k);
    r.mass += v * s.rho[c];
    r.rho_l2 += v * s.rho[c] * s.rho[c];
    r.rho_min = std::min(r.rho_min, s.rho[c]);
    r.rho_max = std::max(r.rho_max, s.rho[c]);
  });
  r.theta_sup = numerics::max_abs(s.theta.span());
  r.theta_holder = holder_quotient(g, s.theta);
  r.solid_u_max = 0.0;
  if (m.has_holes()) {
    const auto free = m.free_faces();
    const auto wall = numerics::wall_faces(g);
    for (std::size_t f = 0; f < free.size(); ++f)
      if (!free[f] && !wall[f]) r.solid_u_max = std::max(r.solid_u_max, std::abs(s.u[f]));
  }
}

}  // namespace

FluidState initial_state(const Medium& m, const PhysParams& p, const std::function<double(const Point3&)>& rho0,
                         const std::function<Point3(const Point3&)>& u0) {
  const StaggeredGrid& g = m.grid;
  FluidState s;
  s.rho = CellField(g);
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    s.rho[c] = (!m.solid.empty() && m.solid[c]) ? p.rho_s : rho0(g.cell_center(i, j, k));
  });
  FaceField u(g);
  for_each_face(g, [&](int a, int i, int j, int k, std::size_t f) { u[f] = u0(g.face_center(a, {i, j, k}))[a]; });
  s.u = numerics::project_div_free(g, u, m.solid, 1e-13);
  s.p = CellField(g);
  s.theta = solve_heat(m, p, s.u).theta;
  return s;
}

void write_field(const std::filesystem::path& path, const std::string& name, const StaggeredGrid& g, double t,
                 std::span<const double> values, int components) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  char buf[256];
  const Point3 lo = g.lo();
  std::snprintf(buf, sizeof buf,
                "HOMOG-FIELD v1\nname %s\ndims %d %d %d\nh %.17g\norigin %.17g %.17g %.17g\ntime %.17g\n"
                "components %d\ncount %zu\nend\n",
                name.c_str(), g.dims()[0], g.dims()[1], g.dims()[2], g.spacing(), lo[0], lo[1], lo[2], t, components,
                values.size());
  out << buf;
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw Error("cannot write " + path.string());
}

FieldFile read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  FieldFile f;
  std::string line, tag;
  std::getline(in, line);
  if (line != "HOMOG-FIELD v1") throw Error("not a field file: " + path.string());
  std::size_t count = 0;
  while (std::getline(in, line) && line != "end") {
    std::istringstream is(line);
    is >> tag;
    if (tag == "name") is >> f.name;
    else if (tag == "dims") is >> f.dims[0] >> f.dims[1] >> f.dims[2];
    else if (tag == "h") is >> f.h;
    else if (tag == "origin") is >> f.origin[0] >> f.origin[1] >> f.origin[2];
    else if (tag == "time") is >> f.t;
    else if (tag == "components") is >> f.components;
    else if (tag == "count") is >> count;
  }
  f.values.resize(count);
  in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw Error("truncated field file: " + path.string());
  return f;
}

void write_checkpoint(const std::filesystem::path& dir, const std::string& label, int step, const StaggeredGrid& g,
                      const FluidState& s) {
  std::filesystem::create_directories(dir);
  char stem[128];
  std::snprintf(stem, sizeof stem, "%s_%06d", label.c_str(), step);
  const std::string base = (dir / stem).string();
  write_field(base + ".rho.bin", "rho", g, s.t, s.rho.span());
  write_field(base + ".theta.bin", "theta", g, s.t, s.theta.span());
  write_field(base + ".p.bin", "p", g, s.t, s.p.span());
  write_field(base + ".u.bin", "u", g, s.t, s.u.span(), 3);
}

EvolveResult evolve(const Medium& m, const PhysParams& p, FluidState s0, const EvolveOptions& opt,
                    const StepObserver& observer) {
  p.validate();
  if (!(opt.dt > 0.0) || !(opt.t_end >= 0.0)) throw PreconditionError("evolve needs dt > 0 and t_end >= 0");
  const StaggeredGrid& g = m.grid;
  const int steps = static_cast<int>(std::ceil(opt.t_end / opt.dt - 1e-9));
  const double dt = steps > 0 ? opt.t_end / steps : opt.dt;

  EvolveResult res;
  MonitorTrace& trace = res.trace;
  FluidState s = std::move(s0);
  auto fail = [&](const std::string& what) { throw EvolutionAborted(what, trace); };

  for (std::size_t c = 0; c < s.rho.size(); ++c)
    if (s.rho[c] < p.rho_low || s.rho[c] > p.rho_high) fail("initial density outside [rho_low, rho_high]");

  MonitorRow r0;
  fill_state_monitors(m, s, r0);
  trace.rows.push_back(r0);
  const double ke0 = r0.kinetic, mass0 = r0.mass, rmin0 = r0.rho_min, rmax0 = r0.rho_max;
  const double bound_slack = opt.bounds_tol * std::max(std::abs(rmax0), std::abs(rmin0));
  if (observer) observer(0, s);
  if (opt.checkpoint_every > 0) write_checkpoint(opt.checkpoint_dir, opt.label, 0, g, s);

  MonitorRow cum = r0;
  for (int n = 1; n <= steps; ++n) {
    StepResult st;
    CellField rho_new;
    try {
      rho_new = advect_density(m, s.rho, s.u, dt);
      // quasi-static heat at the current velocity
      s.theta = solve_heat(m, p, s.u, &s.theta).theta;
      st = step_momentum(m, p, s, rho_new, dt, opt.step);
    } catch (const EvolutionAborted&) {
      throw;
    } catch (const std::exception& e) {
      fail(std::string("step ") + std::to_string(n) + ": " + e.what());
    }
    s.rho = std::move(rho_new);
    s.u = std::move(st.u);
    s.p = std::move(st.p);
    s.theta = std::move(st.theta);
    s.t = n * dt;

    const StepReport& sr = st.report;
    MonitorRow r;
    r.step = n;
    fill_state_monitors(m, s, r);
    r.diss_viscous = cum.diss_viscous + dt * sr.diss_viscous;
    r.diss_heat = cum.diss_heat + dt * sr.diss_heat;
    r.diss_friction = cum.diss_friction + dt * sr.diss_friction;
    r.diss_penalty = cum.diss_penalty + dt * sr.diss_penalty;
    r.energy_residual = r.kinetic + r.diss_viscous + r.diss_heat + r.diss_friction + r.diss_penalty - ke0;
    r.step_residual =
        r.kinetic + dt * (sr.diss_viscous + sr.diss_heat + sr.diss_friction + sr.diss_penalty) - sr.kinetic_before;
    r.friction_rate = sr.diss_friction;
    r.picard = sr.picard;
    r.krylov = sr.krylov;
    trace.rows.push_back(r);
    cum = r;

    if (opt.enforce) {
      std::ostringstream os;
      if (std::abs(r.mass - mass0) > opt.mass_tol * std::abs(mass0))
        os << "mass drift " << (r.mass - mass0) / mass0 << " exceeds " << opt.mass_tol;
      else if (r.rho_min < rmin0 - bound_slack || r.rho_max > rmax0 + bound_slack)
        os << "density range expanded to [" << r.rho_min << ", " << r.rho_max << "]";
      else if (r.step_residual > opt.energy_rel_tol * ke0 + opt.energy_abs_tol)
        os << "energy inequality violated: step residual " << r.step_residual;
      else if (r.friction_rate < -1e-12 * std::max(sr.diss_viscous, 1e-300))
        os << "friction term not dissipative: " << r.friction_rate;
      if (!os.str().empty()) fail("step " + std::to_string(n) + ": " + os.str());
    }
    if (opt.checkpoint_every > 0 && n % opt.checkpoint_every == 0)
      write_checkpoint(opt.checkpoint_dir, opt.label, n, g, s);
    if (observer) observer(n, s);
  }
  res.final_state = std::move(s);
  return res;
}

}  // namespace homog::micro
