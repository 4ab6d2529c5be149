#pragma once

#include <functional>
#include <span>
#include <vector>

namespace homog::numerics {

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

struct KrylovOptions {
  double rtol = 1e-10;
  double atol = 0.0;
  int max_iter = 1000;
  bool throw_on_failure = true;
};

struct KrylovResult {
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;         // final relative residual estimate
  std::vector<double> history;   // relative residual per iteration
};

// Preconditioned CG for SPD (or consistent PSD) systems. x holds the initial
// guess on entry. Throws IndefiniteOperator on non-positive curvature and
// SolverError on non-convergence (unless throw_on_failure is false).
KrylovResult pcg(const LinearMap& a, const LinearMap& precond, std::span<const double> b, std::span<double> x,
                 const KrylovOptions& opt);

// Preconditioned MINRES for symmetric (indefinite) systems with an SPD
// preconditioner. Convergence is measured in the preconditioner-inverse norm.
KrylovResult minres(const LinearMap& a, const LinearMap& precond, std::span<const double> b, std::span<double> x,
                    const KrylovOptions& opt);

// Right-preconditioned BiCGSTAB for nonsymmetric systems (the skew
// convection step). Residual measured in the true 2-norm.
KrylovResult bicgstab(const LinearMap& a, const LinearMap& precond, std::span<const double> b, std::span<double> x,
                      const KrylovOptions& opt);

inline LinearMap identity_map() {
  return [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
}

}  // namespace homog::numerics
