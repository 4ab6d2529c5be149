#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "homog/numerics/divergence.hpp"
#include "homog/numerics/fdm.hpp"
#include "homog/numerics/fields.hpp"
#include "homog/numerics/friction.hpp"
#include "homog/numerics/krylov.hpp"
#include "homog/numerics/viscous.hpp"

namespace homog::numerics {

// Generalized Stokes problem on a MAC grid:
//   (A_mu + diag(mass) + diag(penalty) + Friction) u + B^T p = force + penalty .* target
//   B u = -B_pen target
// Faces with penalty > 0 are "penalized": pressure does not act on them and
// the constraint only involves the remaining (free) faces.
struct StokesProblem {
  StaggeredGrid grid;
  ViscousOperator viscous;
  std::vector<double> mass;     // per face; empty = 0
  std::vector<double> penalty;  // per face; empty = none
  std::vector<double> target;   // per face; empty = 0
  FrictionOperator friction;
  std::vector<double> force;    // per face, integrated; empty = 0
};

enum class SaddleStrategy { minres, uzawa };

struct SaddleOptions {
  SaddleStrategy strategy = SaddleStrategy::minres;
  bool fallback = true;          // uzawa -> minres on stagnation
  double rtol = 1e-10;           // Krylov tolerance (preconditioned norm)
  double momentum_tol = 1e-8;    // true relative momentum residual
  double div_tol = 1e-9;         // true relative divergence residual
  int max_iter = 4000;
  int max_restarts = 4;
  double inner_rtol = 1e-12;     // uzawa inner velocity solves
  int uzawa_max_outer = 400;
};

struct SaddleStats {
  SaddleStrategy used = SaddleStrategy::minres;
  bool fell_back = false;
  int iterations = 0;
  int restarts = 0;
  double momentum_residual = 0.0;
  double divergence_residual = 0.0;
  std::vector<double> history;
};

struct StokesSolution {
  FaceField u;
  CellField p;
  SaddleStats stats;
};

// Face penalty V_f / eta_f with eta_f = eta_scale * h_f^2 / mu_ref for every
// face adjacent to a solid cell (h_f = smaller of the two adjacent widths).
std::vector<double> penalty_from_solid(const StaggeredGrid& g, std::span<const unsigned char> solid_cell, double mu_ref,
                                       double eta_scale = 1e-6);

class SaddleSolver {
 public:
  explicit SaddleSolver(StokesProblem problem);

  const StokesProblem& problem() const { return prob_; }
  const DivergenceOperator& divergence() const { return div_; }
  std::size_t velocity_size() const { return nf_; }
  std::size_t pressure_size() const { return nc_; }

  // Velocity block  (A_mu + diag + Friction) u.
  void apply_velocity(std::span<const double> u, std::span<double> out) const;
  // Full symmetric saddle operator on [u; p].
  void apply(std::span<const double> x, std::span<double> y) const;
  void precondition_velocity(std::span<const double> r, std::span<double> z) const;
  void precondition_pressure(std::span<const double> r, std::span<double> z) const;
  std::vector<double> rhs() const;

  StokesSolution solve(const SaddleOptions& opt = {}, const StokesSolution* warm = nullptr) const;
  // True relative residuals of a candidate solution.
  std::array<double, 2> residuals(std::span<const double> u, std::span<const double> p) const;

 private:
  StokesProblem prob_;
  DivergenceOperator div_;
  std::size_t nf_ = 0, nc_ = 0;
  std::vector<double> diag_extra_;   // mass + penalty per face
  std::vector<double> inv_diag_;     // for penalized faces
  std::vector<unsigned char> pen_;
  std::vector<double> cell_vol_, mu_over_vol_;
  std::array<FastDiagonalization, 3> fdm_u_;
  FastDiagonalization fdm_p_;
  double schur_shift_ = 0.0;
  mutable std::vector<double> buf_;

  void normalize_pressure(std::span<double> p) const;
  void solve_minres(std::vector<double>& x, const SaddleOptions& opt, SaddleStats& st) const;
  bool solve_uzawa(std::vector<double>& x, const SaddleOptions& opt, SaddleStats& st) const;
};

// Convenience wrapper: steady generalized Stokes with optional solid cells.
struct StokesInput {
  std::vector<double> mu_cell;
  ViscousForm form = ViscousForm::symmetric_gradient;
  std::vector<unsigned char> solid_cell;  // empty = no holes
  std::vector<double> force;              // per face, integrated
  FrictionOperator friction;
};
StokesSolution stokes_solve(const StaggeredGrid& g, const StokesInput& in, const SaddleOptions& opt = {});

// L2 projection onto discretely divergence-free fields vanishing on the
// non-free faces: u' = u - M^{-1} B^T phi with B M^{-1} B^T phi = B u.
FaceField project_div_free(const StaggeredGrid& g, const FaceField& u, std::span<const unsigned char> solid_cell = {},
                           double tol = 1e-12);

}  // namespace homog::numerics
