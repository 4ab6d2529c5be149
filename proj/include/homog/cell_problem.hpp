#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "homog/geometry/shape.hpp"
#include "homog/numerics/fields.hpp"
#include "homog/numerics/stokes.hpp"

namespace homog::cell {

// Graded Cartesian grid on [-1,1]^3: a uniform core of `core_cells` cells
// covering [-w, w] with w = core_factor * (largest obstacle radius), and
// geometric stretching out to the box faces.
struct CellGridSpec {
  int cells = 96;
  int core_cells = 0;        // 0 = cells / 2
  double core_factor = 1.4;
};

numerics::StaggeredGrid cell_grid(const geometry::HoleShape& shape, double s, const CellGridSpec& spec);

struct CellSolution {
  geometry::HoleShape shape;
  double s = 0.0;
  CellGridSpec spec;
  numerics::StaggeredGrid grid;
  numerics::ViscousOperator viscous;       // mu = 1, Laplacian form
  std::vector<unsigned char> obstacle;     // cells inside s * shape
  std::vector<unsigned char> exterior;     // cells outside the unit ball
  std::array<numerics::FaceField, 3> v;
  std::array<numerics::CellField, 3> q;
  std::array<numerics::SaddleStats, 3> stats;
  std::array<std::vector<double>, 3> target;  // boundary data e^i on obstacle faces
  std::vector<double> penalty;
};

// Three Stokes problems (one per unit vector e^i): v^i = e^i on K, 0 on |x| = 1.
// Throws PreconditionError for s outside (0, 1/2], SolverError on non-convergence.
CellSolution solve_cell_problem(const geometry::HoleShape& shape, double s, const CellGridSpec& spec = {},
                                const numerics::SaddleOptions& opt = {});

struct DragMatrix {
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();           // Gram matrix of discrete gradients
  Eigen::Matrix3d C_operator = Eigen::Matrix3d::Zero();  // v^T A v through the operator
  Eigen::Matrix3d C_force = Eigen::Matrix3d::Zero();     // boundary reaction + pressure work
  double energy_gap = 0.0;   // max |C - C_operator| / max |C_ii|
  double force_gap = 0.0;    // max |C - C_force| / max |C_ii|
  double divergence_residual = 0.0;
};

DragMatrix drag_matrix(const CellSolution& sol);

struct DecayReport {
  double r = 0, d = 0;
  std::array<double, 3> c_velocity{};   // sup |v^i| |x| / r over r < |x| < 1
  std::array<double, 3> c_gradient{};   // sup |grad v^i| |x|^2 / r
  std::array<double, 3> c_pressure{};   // sup |q^i| |x|^2 / r
  std::array<double, 3> l2_velocity{};  // int_{B(0,d)} |v^i|^2
  std::array<double, 3> l2_gradient{};  // int_{B(0,d)} |grad v^i|^2
  std::array<double, 3> l2_pressure{};  // int_{B(0,d)} |q^i|^2
  // the L2 quantities divided by r^2 d, r, r
  std::array<double, 3> ratio_velocity{}, ratio_gradient{}, ratio_pressure{};
};

// Requires K inside B(0,r), r < d <= 1; throws PreconditionError otherwise.
DecayReport decay_diagnostics(const CellSolution& sol, double r, double d);

}  // namespace homog::cell
