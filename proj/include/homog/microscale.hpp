#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "homog/errors.hpp"
#include "homog/geometry/mask.hpp"
#include "homog/numerics/fields.hpp"
#include "homog/numerics/friction.hpp"
#include "homog/numerics/krylov.hpp"
#include "homog/numerics/stokes.hpp"
#include "homog/physics.hpp"

namespace homog::micro {

using numerics::CellField;
using numerics::FaceField;
using numerics::StaggeredGrid;
using physics::PhysParams;

// Where the flow lives: solid cells (penalized holes) and an optional
// per-cell Brinkman tensor. The micro problem uses the first, the limit
// problem the second; the stepping code is shared.
struct Medium {
  StaggeredGrid grid;
  std::vector<unsigned char> solid;  // empty = no holes
  std::vector<numerics::Sym3> D;     // empty = no friction

  bool has_holes() const;
  // Faces carrying a velocity unknown: not on the wall, not touching a solid cell.
  std::vector<unsigned char> free_faces() const;
};

Medium perforated_medium(const geometry::MaskField& mask);
Medium open_medium(const StaggeredGrid& g, std::vector<numerics::Sym3> D = {});

struct FluidState {
  CellField rho, theta, p;
  FaceField u;
  double t = 0.0;
};

// Integrated face force V_f f_a(x_f) of a pointwise field.
std::vector<double> face_force(const StaggeredGrid& g, const std::function<numerics::Point3(const numerics::Point3&)>& f);

// Kinetic energy 1/2 sum_f V_f rho_f u_f^2 (rho_f: mean of the adjacent cells).
double kinetic_energy(const StaggeredGrid& g, const CellField& rho, const FaceField& u);
std::vector<double> face_mass(const StaggeredGrid& g, const CellField& rho);

struct HeatResult {
  CellField theta;
  numerics::KrylovResult info;
  double dissipation = 0.0;  // int kappa |grad theta|^2
};

// -div(kappa grad theta) = u . grad F with theta = 0 on the box walls.
HeatResult solve_heat(const Medium& m, const PhysParams& p, const FaceField& u, const CellField* guess = nullptr,
                      double rtol = 1e-12);

// Steady Stokes with mu(theta) for a given theta and integrated force.
numerics::StokesSolution solve_steady_stokes(const Medium& m, const PhysParams& p, const CellField& theta,
                                             std::span<const double> force, const numerics::SaddleOptions& opt = {});

struct CoupledOptions {
  double tol = 1e-10;   // relative successive-iterate distance of theta
  int max_outer = 50;
  numerics::SaddleOptions saddle;
};

struct SteadyResult {
  FaceField u;
  CellField p, theta;
  int outer_iterations = 0;
  std::vector<double> increments;   // |theta_m - theta_{m-1}| / |theta_m|
  std::vector<double> contraction;  // ratios of successive increments
  numerics::SaddleStats last;
};

// Picard iteration theta -> Stokes(mu(theta)) -> heat, from theta = 0.
// Throws SolverError with the increment history when it does not converge.
SteadyResult solve_steady_coupled(const Medium& m, const PhysParams& p, std::span<const double> force,
                                  const CoupledOptions& opt = {});

// Conservative first-order upwind transport on the free faces. Throws
// CflViolation when dt max|u| / h > cfl_max.
CellField advect_density(const Medium& m, const CellField& rho, const FaceField& u, double dt,
                         numerics::Exec exec = numerics::Exec::parallel, double cfl_max = 0.5);
double cfl_number(const StaggeredGrid& g, const FaceField& u, double dt);

// Skew-symmetric momentum convection S(rho, u) on the free faces:
// (S w)_f = 1/2 sum_g phi_{f->g} w_g with phi the mass flux between the
// velocity control volumes. w^T S w = 0 exactly.
class ConvectionOperator {
 public:
  ConvectionOperator(const StaggeredGrid& g, std::vector<unsigned char> free, const CellField& rho, const FaceField& u);
  void apply(std::span<const double> w, std::span<double> out, numerics::Exec exec = numerics::Exec::parallel) const;

 private:
  StaggeredGrid grid_;
  std::vector<unsigned char> free_;
  const CellField* rho_;
  const FaceField* u_;
  double flux(int a, int b, const numerics::Index3& p) const;
};

struct StepOptions {
  numerics::SaddleOptions saddle;
  bool couple_heat = true;       // Picard on (u, theta) inside the step
  double picard_tol = 1e-4;     // energy pairing error is about picard_tol * heat dissipation
  int max_picard = 40;
  double convection_rtol = 1e-13;
  double project_tol = 1e-13;
  bool convection = true;
};

struct StepReport {
  int picard = 0;
  int krylov = 0;
  double momentum_residual = 0.0;
  double divergence_residual = 0.0;
  double kinetic_before = 0.0;     // with rho^n
  double kinetic_convected = 0.0;  // after the convection sub-step, with rho^{n+1}
  double kinetic_after = 0.0;
  double diss_viscous = 0.0;       // rates; multiply by dt for the step
  double diss_heat = 0.0;
  double diss_friction = 0.0;
  double diss_penalty = 0.0;
  double forcing_work = 0.0;
};

struct StepResult {
  FaceField u;
  CellField p, theta;
  StepReport report;
};

// One implicit momentum step from (rho^n, u^n, theta^n) with the transported
// density rho_new: skew convection sub-step, then the implicit viscous/friction/
// penalization saddle solve with buoyancy -theta grad F, iterated with the heat
// solve until theta settles (couple_heat), then projection.
StepResult step_momentum(const Medium& m, const PhysParams& p, const FluidState& state, const CellField& rho_new,
                         double dt, const StepOptions& opt = {});

struct MonitorRow {
  int step = 0;
  double t = 0.0;
  double kinetic = 0.0;
  double diss_viscous = 0.0;   // cumulative sum dt * rate
  double diss_heat = 0.0;
  double diss_friction = 0.0;
  double diss_penalty = 0.0;
  double energy_residual = 0.0;  // kinetic + cumulative dissipation - initial kinetic
  double step_residual = 0.0;
  double friction_rate = 0.0;    // int mu (D u) . u, must be >= 0
  double mass = 0.0;
  double rho_min = 0.0, rho_max = 0.0;
  double rho_l2 = 0.0;           // int rho^2
  double theta_sup = 0.0;
  double theta_holder = 0.0;     // discrete Hoelder quotient, exponent 1/4
  double solid_u_max = 0.0;
  int picard = 0;
  int krylov = 0;
};

struct MonitorTrace {
  std::vector<MonitorRow> rows;
  std::string csv() const;
  void write_csv(const std::filesystem::path& p) const;
};

class EvolutionAborted : public Error {
 public:
  EvolutionAborted(const std::string& what, MonitorTrace trace) : Error(what), trace_(std::move(trace)) {}
  const MonitorTrace& trace() const { return trace_; }

 private:
  MonitorTrace trace_;
};

struct EvolveOptions {
  double dt = 0.05;
  double t_end = 0.5;
  StepOptions step;
  bool enforce = true;            // hard assertions on the conservation monitors
  double mass_tol = 1e-10;
  double energy_rel_tol = 1e-6;   // per step, relative to the initial kinetic energy
  double energy_abs_tol = 1e-8;
  double bounds_tol = 1e-12;      // relative slack on rho min/max (round-off)
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;
  std::string label = "state";
};

// Called after every accepted step (and once for the initial state).
using StepObserver = std::function<void(int step, const FluidState&)>;

struct EvolveResult {
  FluidState final_state;
  MonitorTrace trace;
};

// Loop: advect rho -> heat at the current velocity -> momentum step -> monitors.
// Any sub-step failure or violated assertion throws EvolutionAborted with the trace so far.
EvolveResult evolve(const Medium& m, const PhysParams& p, FluidState s0, const EvolveOptions& opt,
                    const StepObserver& observer = {});

// Initial state: rho from a pointwise profile (rho_s in solid cells), u from
// a pointwise field made discretely divergence-free and zero on the holes,
// theta from the heat problem.
FluidState initial_state(const Medium& m, const PhysParams& p,
                         const std::function<double(const numerics::Point3&)>& rho0,
                         const std::function<numerics::Point3(const numerics::Point3&)>& u0);

// Discrete Hoelder quotient max |theta(x) - theta(y)| / |x - y|^nu over axis
// offsets 1, 2, 4, 8 cells.
double holder_quotient(const StaggeredGrid& g, const CellField& theta, double nu = 0.25);

// Field files: text header (name, dims, spacing, origin, time, components)
// followed by the raw float64 values.
void write_field(const std::filesystem::path& path, const std::string& name, const StaggeredGrid& g, double t,
                 std::span<const double> values, int components = 1);
struct FieldFile {
  std::string name;
  numerics::Index3 dims{};
  double h = 0.0;
  numerics::Point3 origin{};
  double t = 0.0;
  int components = 1;
  std::vector<double> values;
};
FieldFile read_field(const std::filesystem::path& path);
void write_checkpoint(const std::filesystem::path& dir, const std::string& label, int step, const StaggeredGrid& g,
                      const FluidState& s);

}  // namespace homog::micro
