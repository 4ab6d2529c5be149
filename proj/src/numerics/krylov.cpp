#include "homog/numerics/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "homog/errors.hpp"
#include "homog/numerics/kernels.hpp"

namespace homog::numerics {

KrylovResult pcg(const LinearMap& a, const LinearMap& precond, std::span<const double> b, std::span<double> x,
                 const KrylovOptions& opt) {
  const std::size_t n = b.size();
  KrylovResult res;
  std::vector<double> r(n), z(n), p(n), ap(n);
  a(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  const double bnorm = norm2(b);
  if (bnorm == 0.0 && norm2(r) == 0.0) {
    res.converged = true;
    return res;
  }
  const double scale = bnorm > 0 ? bnorm : 1.0;
  double rnorm = norm2(r);
  res.history.push_back(rnorm / scale);
  if (rnorm <= std::max(opt.rtol * scale, opt.atol)) {
    res.converged = true;
    res.residual = rnorm / scale;
    return res;
  }
  precond(r, z);
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= opt.max_iter; ++it) {
    a(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) {
      std::ostringstream os;
      os << "CG: non-positive curvature p^T A p = " << pap << " at iteration " << it;
      throw IndefiniteOperator(os.str(), res.history);
    }
    const double alpha = rz / pap;
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    rnorm = norm2(r);
    res.iterations = it;
    res.history.push_back(rnorm / scale);
    if (rnorm <= std::max(opt.rtol * scale, opt.atol)) {
      res.converged = true;
      break;
    }
    precond(r, z);
    const double rz_new = dot(r, z);
    xpby(z, rz_new / rz, p);
    rz = rz_new;
  }
  res.residual = res.history.back();
  if (!res.converged && opt.throw_on_failure) {
    std::ostringstream os;
    os << "CG did not converge in " << opt.max_iter << " iterations (relative residual " << res.residual << ")";
    throw SolverError(os.str(), res.history);
  }
  return res;
}

// Paige-Saunders MINRES with preconditioning (Lanczos on M^{-1} A).
KrylovResult minres(const LinearMap& a, const LinearMap& precond, std::span<const double> b, std::span<double> x,
                    const KrylovOptions& opt) {
  const std::size_t n = b.size();
  KrylovResult res;
  std::vector<double> r1(n), r2(n), y(n), v(n), w(n, 0.0), w1(n), w2(n, 0.0);
  a(x, y);
  for (std::size_t i = 0; i < n; ++i) r1[i] = b[i] - y[i];
  precond(r1, y);
  double beta1 = dot(r1, y);
  if (beta1 < 0) throw IndefiniteOperator("MINRES: preconditioner is not positive definite", {});
  beta1 = std::sqrt(beta1);
  if (beta1 == 0.0) {
    res.converged = true;
    return res;
  }
  // reference scale: M^{-1}-norm of b (fall back to initial residual)
  std::vector<double> zb(n);
  precond(b, zb);
  double bscale = std::sqrt(std::max(dot(b, zb), 0.0));
  if (bscale == 0.0) bscale = beta1;
  const double tol = std::max(opt.rtol * bscale, opt.atol);

  r2 = r1;
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  res.history.push_back(phibar / bscale);
  if (phibar <= tol) {
    res.converged = true;
    res.residual = phibar / bscale;
    return res;
  }
  for (int it = 1; it <= opt.max_iter; ++it) {
    const double s = 1.0 / beta;
    for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];
    a(v, y);
    if (it >= 2) axpy(-beta / oldb, r1, y);
    const double alfa = dot(v, y);
    axpy(-alfa / beta, r2, y);
    std::swap(r1, r2);
    r2 = y;  // r1 <- old r2, r2 <- y
    precond(r2, y);
    oldb = beta;
    beta = dot(r2, y);
    if (beta < 0) throw IndefiniteOperator("MINRES: preconditioner is not positive definite", res.history);
    beta = std::sqrt(beta);

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::hypot(gbar, beta);
    gamma = std::max(gamma, std::numeric_limits<double>::min());
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    const double denom = 1.0 / gamma;
    std::swap(w1, w2);  // w1 <- w2
    std::swap(w2, w);   // w2 <- w
    for (std::size_t i = 0; i < n; ++i) w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
    axpy(phi, w, x);

    res.iterations = it;
    res.history.push_back(phibar / bscale);
    if (phibar <= tol) {
      res.converged = true;
      break;
    }
    if (beta == 0.0) {  // exact Krylov space exhausted
      res.converged = true;
      break;
    }
  }
  res.residual = res.history.back();
  if (!res.converged && opt.throw_on_failure) {
    std::ostringstream os;
    os << "MINRES did not converge in " << opt.max_iter << " iterations (relative residual " << res.residual << ")";
    throw SolverError(os.str(), res.history);
  }
  return res;
}

KrylovResult bicgstab(const LinearMap& a, const LinearMap& precond, std::span<const double> b, std::span<double> x,
                      const KrylovOptions& opt) {
  const std::size_t n = b.size();
  KrylovResult res;
  std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n), sh(n);
  a(x, v);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - v[i];
  const double bnorm = norm2(b);
  double rnorm = norm2(r);
  if (bnorm == 0.0 && rnorm == 0.0) {
    res.converged = true;
    return res;
  }
  const double scale = bnorm > 0 ? bnorm : 1.0;
  const double tol = std::max(opt.rtol * scale, opt.atol);
  res.history.push_back(rnorm / scale);
  rhat = r;
  std::fill(v.begin(), v.end(), 0.0);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  for (int it = 1; it <= opt.max_iter && rnorm > tol; ++it) {
    const double rho_new = dot(rhat, r);
    if (rho_new == 0.0) {
      // breakdown: restart the shadow residual
      rhat = r;
      std::fill(p.begin(), p.end(), 0.0);
      std::fill(v.begin(), v.end(), 0.0);
      rho = alpha = omega = 1.0;
      continue;
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    precond(p, ph);
    a(ph, v);
    alpha = rho / dot(rhat, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    res.iterations = it;
    if (norm2(s) <= tol) {
      axpy(alpha, ph, x);
      rnorm = norm2(s);
      res.history.push_back(rnorm / scale);
      break;
    }
    precond(s, sh);
    a(sh, t);
    const double tt = dot(t, t);
    omega = tt > 0 ? dot(t, s) / tt : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * ph[i] + omega * sh[i];
      r[i] = s[i] - omega * t[i];
    }
    rnorm = norm2(r);
    res.history.push_back(rnorm / scale);
    if (omega == 0.0) break;
  }
  res.residual = rnorm / scale;
  res.converged = rnorm <= tol;
  if (!res.converged && opt.throw_on_failure) {
    std::ostringstream os;
    os << "BiCGSTAB did not converge in " << res.iterations << " iterations (relative residual " << res.residual
       << ")";
    throw SolverError(os.str(), res.history);
  }
  return res;
}

}  // namespace homog::numerics
