#include "homog/numerics/stokes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "homog/errors.hpp"
#include "homog/numerics/kernels.hpp"

namespace homog::numerics {

std::vector<double> penalty_from_solid(const StaggeredGrid& g, std::span<const unsigned char> solid_cell, double mu_ref,
                                       double eta_scale) {
  std::vector<double> pen(g.face_count(), 0.0);
  if (solid_cell.empty()) return pen;
  const Index3 n = g.dims();
  const Lattice lc(n);
  for_each_face(g, [&](int a, int i, int j, int k, std::size_t f) {
    const Index3 p{i, j, k};
    if (p[a] == 0 || p[a] == n[a]) return;
    Index3 lo = p;
    lo[a] -= 1;
    if (!solid_cell[lc(lo)] && !solid_cell[lc(p)]) return;
    const double h = std::min(g.axis(a).width(p[a] - 1), g.axis(a).width(p[a]));
    double hmin = h;
    for (int b = 0; b < 3; ++b)
      if (b != a) hmin = std::min(hmin, g.axis(b).width(p[b]));
    const double eta = eta_scale * hmin * hmin / mu_ref;
    pen[f] = g.face_volume(a, p) / eta;
  });
  return pen;
}

SaddleSolver::SaddleSolver(StokesProblem problem) : prob_(std::move(problem)) {
  const StaggeredGrid& g = prob_.grid;
  nf_ = g.face_count();
  nc_ = g.cell_count();
  auto sized = [&](std::vector<double>& v) {
    if (v.empty()) v.assign(nf_, 0.0);
    if (v.size() != nf_) throw std::invalid_argument("stokes problem: face vector size mismatch");
  };
  sized(prob_.mass);
  sized(prob_.penalty);
  sized(prob_.target);
  sized(prob_.force);
  const auto wall = wall_faces(g);
  pen_.assign(nf_, 0);
  std::vector<unsigned char> free(nf_, 0);
  for (std::size_t f = 0; f < nf_; ++f) {
    if (wall[f]) {  // Dirichlet rows: no unknown, no data
      prob_.penalty[f] = 0.0;
      prob_.target[f] = 0.0;
      prob_.force[f] = 0.0;
      prob_.mass[f] = 0.0;
      continue;
    }
    pen_[f] = prob_.penalty[f] > 0.0;
    free[f] = !pen_[f];
    if (!pen_[f]) prob_.target[f] = 0.0;
  }
  div_ = DivergenceOperator(g, std::move(free));

  diag_extra_.resize(nf_);
  for (std::size_t f = 0; f < nf_; ++f) diag_extra_[f] = prob_.mass[f] + prob_.penalty[f];
  const auto dv = prob_.viscous.diagonal();
  const auto df = prob_.friction.empty() ? std::vector<double>(nf_, 0.0) : prob_.friction.diagonal();
  inv_diag_.resize(nf_);
  for (std::size_t f = 0; f < nf_; ++f) inv_diag_[f] = 1.0 / (dv[f] + diag_extra_[f] + df[f]);

  cell_vol_ = cell_volumes(g);
  mu_over_vol_.resize(nc_);
  for (std::size_t c = 0; c < nc_; ++c) mu_over_vol_[c] = prob_.viscous.mu_cell()[c] / cell_vol_[c];

  // Velocity blocks: sigma M + mu K restricted to the interior faces of each component.
  const double mu = prob_.viscous.mean_mu();
  const bool sym = prob_.viscous.form() == ViscousForm::symmetric_gradient;
  const auto vol = face_volumes(g);
  double shift_num = 0.0, shift_den = 0.0;
  for (int a = 0; a < 3; ++a) {
    std::array<Line1D, 3> lines;
    for (int d = 0; d < 3; ++d)
      lines[d] = d == a ? Line1D::faces_dirichlet(g.axis(d)) : Line1D::cells_dirichlet(g.axis(d));
    fdm_u_[a] = FastDiagonalization(std::move(lines));
    const std::size_t off = a == 0 ? 0 : (a == 1 ? g.face_count(0) : g.face_count(0) + g.face_count(1));
    double num = 0.0, den = 0.0;
    for (std::size_t f = off; f < off + g.face_count(a); ++f) {
      if (!div_.free_faces()[f]) continue;
      num += prob_.mass[f] + df[f];
      den += vol[f];
    }
    const double sigma = den > 0 ? num / den : 0.0;
    shift_num += num;
    shift_den += den;
    std::array<double, 3> c{mu, mu, mu};
    if (sym) c[a] = 2.0 * mu;
    fdm_u_[a].set_coefficients(sigma, c);
  }
  schur_shift_ = shift_den > 0 ? shift_num / shift_den : 0.0;
  fdm_p_ = FastDiagonalization({Line1D::cells_neumann(g.axis(0)), Line1D::cells_neumann(g.axis(1)),
                                Line1D::cells_neumann(g.axis(2))});
  fdm_p_.set_coefficients(0.0, {1.0, 1.0, 1.0});
}

void SaddleSolver::apply_velocity(std::span<const double> u, std::span<double> out) const {
  prob_.viscous.apply(u, out);
  const long n = static_cast<long>(nf_);
  const double* d = diag_extra_.data();
#pragma omp parallel for schedule(static)
  for (long f = 0; f < n; ++f) out[f] += d[f] * u[f];
  prob_.friction.apply_add(u, out);
}

void SaddleSolver::apply(std::span<const double> x, std::span<double> y) const {
  auto u = x.subspan(0, nf_);
  auto p = x.subspan(nf_, nc_);
  auto yu = y.subspan(0, nf_);
  auto yp = y.subspan(nf_, nc_);
  apply_velocity(u, yu);
  buf_.resize(nf_);
  div_.apply_transpose(p, buf_);
  axpy(1.0, buf_, yu);
  div_.apply(u, yp);
}

void SaddleSolver::precondition_velocity(std::span<const double> r, std::span<double> z) const {
  const StaggeredGrid& g = prob_.grid;
  const Index3 n = g.dims();
  const auto& free = div_.free_faces();
  std::size_t off = 0;
  std::vector<double> work;
  for (int a = 0; a < 3; ++a) {
    const Lattice lf(g.face_dims(a));
    Index3 m = n;
    m[a] -= 1;
    const Lattice li(m);
    work.assign(li.size(), 0.0);
    for (int k = 0; k < m[2]; ++k)
      for (int j = 0; j < m[1]; ++j)
        for (int i = 0; i < m[0]; ++i) {
          Index3 p{i, j, k};
          const long q = li(p);
          p[a] += 1;
          const long f = off + lf(p);
          work[q] = free[f] ? r[f] : 0.0;
        }
    fdm_u_[a].solve(work);
    for (int k = 0; k < lf.n[2]; ++k)
      for (int j = 0; j < lf.n[1]; ++j)
        for (int i = 0; i < lf.n[0]; ++i) {
          Index3 p{i, j, k};
          const long f = off + lf(p);
          if (p[a] == 0 || p[a] == n[a]) {
            z[f] = 0.0;
          } else if (pen_[f]) {
            z[f] = r[f] * inv_diag_[f];
          } else {
            p[a] -= 1;
            z[f] = work[li(p)];
          }
        }
    off += g.face_count(a);
  }
}

void SaddleSolver::precondition_pressure(std::span<const double> r, std::span<double> z) const {
  const auto& act = div_.active_cells();
  std::vector<double> rr(nc_);
  double mean = 0.0;
  for (std::size_t c = 0; c < nc_; ++c) {
    rr[c] = act[c] ? r[c] : 0.0;
    mean += rr[c];
  }
  const double na = static_cast<double>(std::max<std::size_t>(div_.active_count(), 1));
  mean /= na;
  for (std::size_t c = 0; c < nc_; ++c)
    if (act[c]) rr[c] -= mean;
  std::vector<double> w;
  if (schur_shift_ > 0.0) {
    w = rr;
    fdm_p_.solve(w);
  }
  double zmean = 0.0;
  for (std::size_t c = 0; c < nc_; ++c) {
    if (!act[c]) {
      z[c] = 0.0;
      continue;
    }
    z[c] = mu_over_vol_[c] * rr[c] + (schur_shift_ > 0.0 ? schur_shift_ * w[c] : 0.0);
    zmean += z[c];
  }
  zmean /= na;
  for (std::size_t c = 0; c < nc_; ++c)
    if (act[c]) z[c] -= zmean;
}

std::vector<double> SaddleSolver::rhs() const {
  std::vector<double> b(nf_ + nc_, 0.0);
  for (std::size_t f = 0; f < nf_; ++f) b[f] = prob_.force[f] + prob_.penalty[f] * prob_.target[f];
  std::span<double> bp(b.data() + nf_, nc_);
  div_.apply_all(prob_.target, bp);
  const auto& act = div_.active_cells();
  for (std::size_t c = 0; c < nc_; ++c) bp[c] = act[c] ? -bp[c] : 0.0;
  return b;
}

std::array<double, 2> SaddleSolver::residuals(std::span<const double> u, std::span<const double> p) const {
  const auto b = rhs();
  std::vector<double> au(nf_), bt(nf_), bu(nc_);
  apply_velocity(u, au);
  div_.apply_transpose(p, bt);
  div_.apply(u, bu);
  double rf = 0, bf = 0, af = 0, tf = 0, rp = 0, bpn = 0, ap = 0;
  for (std::size_t f = 0; f < nf_; ++f) {
    const double r = b[f] - au[f] - bt[f];
    if (pen_[f]) {
      rp += r * r;
      bpn += b[f] * b[f];
      ap += au[f] * au[f];
    } else {
      rf += r * r;
      bf += b[f] * b[f];
      af += au[f] * au[f];
      tf += bt[f] * bt[f];
    }
  }
  const double sfree = std::sqrt(std::max({bf, af, tf}));
  const double spen = std::sqrt(std::max(bpn, ap));
  double mom = 0.0;
  if (sfree > 0) mom = std::max(mom, std::sqrt(rf) / sfree);
  if (spen > 0) mom = std::max(mom, std::sqrt(rp) / spen);
  // divergence relative to |B| |u_bar|, u_bar = u on free faces, target on penalized ones
  std::vector<double> ub(nf_), scale(nc_);
  const auto& free = div_.free_faces();
  for (std::size_t f = 0; f < nf_; ++f) ub[f] = free[f] ? u[f] : (pen_[f] ? prob_.target[f] : 0.0);
  div_.apply_abs(ub, scale);
  double rd = 0, sd = 0;
  for (std::size_t c = 0; c < nc_; ++c) {
    if (!div_.active_cells()[c]) continue;
    const double r = b[nf_ + c] - bu[c];
    rd += r * r;
    sd += scale[c] * scale[c];
  }
  const double dv = sd > 0 ? std::sqrt(rd / sd) : std::sqrt(rd);
  return {mom, dv};
}

void SaddleSolver::normalize_pressure(std::span<double> p) const {
  const auto& act = div_.active_cells();
  double s = 0, v = 0;
  for (std::size_t c = 0; c < nc_; ++c)
    if (act[c]) {
      s += p[c] * cell_vol_[c];
      v += cell_vol_[c];
    }
  const double mean = v > 0 ? s / v : 0.0;
  for (std::size_t c = 0; c < nc_; ++c) p[c] = act[c] ? p[c] - mean : 0.0;
}

void SaddleSolver::solve_minres(std::vector<double>& x, const SaddleOptions& opt, SaddleStats& st) const {
  const auto b = rhs();
  const std::size_t n = nf_ + nc_;
  auto op = [this](std::span<const double> in, std::span<double> out) { apply(in, out); };
  auto pre = [this](std::span<const double> r, std::span<double> z) {
    precondition_velocity(r.subspan(0, nf_), z.subspan(0, nf_));
    precondition_pressure(r.subspan(nf_, nc_), z.subspan(nf_, nc_));
  };
  std::vector<double> r0(n), delta(n);
  double tighten = 1.0;
  for (int attempt = 0; attempt <= opt.max_restarts + 1; ++attempt) {
    const auto res = residuals(std::span<const double>(x).subspan(0, nf_), std::span<const double>(x).subspan(nf_, nc_));
    st.momentum_residual = res[0];
    st.divergence_residual = res[1];
    if (res[0] <= opt.momentum_tol && res[1] <= opt.div_tol && (attempt > 0 || norm2(x) > 0.0)) return;
    if (attempt == opt.max_restarts + 1) break;
    if (attempt > 0) ++st.restarts;
    // solve for the correction; the reduction asked for follows from the true residuals
    // (a warm start close to the solution needs only a few iterations)
    const double worst = std::max(res[0] / opt.momentum_tol, res[1] / opt.div_tol);
    apply(x, r0);
    for (std::size_t i = 0; i < n; ++i) r0[i] = b[i] - r0[i];
    std::fill(delta.begin(), delta.end(), 0.0);
    KrylovOptions ko;
    ko.rtol = std::clamp(std::max(opt.rtol, 1e-3 / worst) * tighten, 1e-15, 0.1);
    ko.max_iter = opt.max_iter;
    ko.throw_on_failure = false;
    const KrylovResult kr = minres(op, pre, r0, delta, ko);
    axpy(1.0, delta, x);
    st.iterations += kr.iterations;
    st.history.insert(st.history.end(), kr.history.begin(), kr.history.end());
    tighten *= 0.1;
  }
  std::ostringstream os;
  os << "saddle solve did not reach tolerance: momentum " << st.momentum_residual << ", divergence "
     << st.divergence_residual << " after " << st.iterations << " iterations";
  throw SolverError(os.str(), st.history);
}

bool SaddleSolver::solve_uzawa(std::vector<double>& x, const SaddleOptions& opt, SaddleStats& st) const {
  const auto b = rhs();
  std::span<const double> bu(b.data(), nf_), c(b.data() + nf_, nc_);
  std::span<double> u(x.data(), nf_), p(x.data() + nf_, nc_);
  auto vop = [this](std::span<const double> in, std::span<double> out) { apply_velocity(in, out); };
  auto vpre = [this](std::span<const double> r, std::span<double> z) { precondition_velocity(r, z); };
  KrylovOptions ko;
  ko.rtol = opt.inner_rtol;
  ko.max_iter = opt.max_iter;
  auto ainv = [&](std::span<const double> rhs_u, std::span<double> sol) {
    const auto kr = pcg(vop, vpre, rhs_u, sol, ko);
    st.iterations += kr.iterations;
  };
  std::vector<double> t(nf_), w(nf_), r(nc_), z(nc_), d(nc_), sd(nc_);
  div_.apply_transpose(p, t);
  for (std::size_t f = 0; f < nf_; ++f) t[f] = bu[f] - t[f];
  ainv(t, u);
  auto div_res = [&]() {
    div_.apply(u, r);
    for (std::size_t i = 0; i < nc_; ++i) r[i] = div_.active_cells()[i] ? r[i] - c[i] : 0.0;  // r = B u - c
  };
  auto rel = [&]() {
    std::vector<double> ub(nf_), scale(nc_);
    for (std::size_t f = 0; f < nf_; ++f) ub[f] = div_.free_faces()[f] ? u[f] : (pen_[f] ? prob_.target[f] : 0.0);
    div_.apply_abs(ub, scale);
    const double s = norm2(scale);
    return s > 0 ? norm2(r) / s : norm2(r);
  };
  div_res();
  // CG on S p = B A^{-1} f - c; with u = A^{-1}(f - B^T p) its residual is B u - c
  precondition_pressure(r, z);
  d = z;
  double rz = dot(r, z);
  double last_check = rel();
  st.history.push_back(last_check);
  for (int it = 1; it <= opt.uzawa_max_outer; ++it) {
    if (st.history.back() <= opt.div_tol * 0.1) return true;
    div_.apply_transpose(d, t);
    std::fill(w.begin(), w.end(), 0.0);
    ainv(t, w);
    div_.apply(w, sd);
    for (std::size_t i = 0; i < nc_; ++i)
      if (!div_.active_cells()[i]) sd[i] = 0.0;
    const double dsd = dot(d, sd);
    if (!(dsd > 0)) return false;
    const double alpha = rz / dsd;
    axpy(alpha, d, p);
    axpy(-alpha, w, u);
    axpy(-alpha, sd, r);
    {
      std::vector<double> ub(nf_), scale(nc_);
      for (std::size_t f = 0; f < nf_; ++f) ub[f] = div_.free_faces()[f] ? u[f] : (pen_[f] ? prob_.target[f] : 0.0);
      div_.apply_abs(ub, scale);
      const double s = norm2(scale);
      st.history.push_back(s > 0 ? norm2(r) / s : norm2(r));
    }
    if (it % 30 == 0) {
      if (st.history.back() > 0.5 * last_check) return false;  // stagnation
      last_check = st.history.back();
    }
    precondition_pressure(r, z);
    const double rz_new = dot(r, z);
    xpby(z, rz_new / rz, d);
    rz = rz_new;
  }
  return st.history.back() <= opt.div_tol;
}

StokesSolution SaddleSolver::solve(const SaddleOptions& opt, const StokesSolution* warm) const {
  const StaggeredGrid& g = prob_.grid;
  std::vector<double> x(nf_ + nc_, 0.0);
  if (warm && warm->u.matches(g) && warm->p.matches(g)) {
    std::copy(warm->u.data().begin(), warm->u.data().end(), x.begin());
    std::copy(warm->p.data().begin(), warm->p.data().end(), x.begin() + nf_);
  }
  for (std::size_t f = 0; f < nf_; ++f)
    if (pen_[f] && !warm) x[f] = prob_.target[f];
  SaddleStats st;
  st.used = opt.strategy;
  if (opt.strategy == SaddleStrategy::uzawa) {
    std::vector<double> xu = x;
    bool ok = false;
    try {
      ok = solve_uzawa(xu, opt, st);
    } catch (const SolverError&) {
      ok = false;
    }
    if (ok) {
      x = xu;
      const auto res = residuals(std::span<const double>(x).subspan(0, nf_), std::span<const double>(x).subspan(nf_, nc_));
      st.momentum_residual = res[0];
      st.divergence_residual = res[1];
      ok = res[0] <= opt.momentum_tol * 10 && res[1] <= opt.div_tol;
    }
    if (!ok) {
      if (!opt.fallback) throw SolverError("Uzawa iteration stagnated", st.history);
      st.fell_back = true;
      st.used = SaddleStrategy::minres;
      solve_minres(x, opt, st);
    }
  } else {
    solve_minres(x, opt, st);
  }
  StokesSolution sol{FaceField(g), CellField(g), st};
  std::copy(x.begin(), x.begin() + nf_, sol.u.data().begin());
  std::copy(x.begin() + nf_, x.end(), sol.p.data().begin());
  normalize_pressure(sol.p.span());
  return sol;
}

StokesSolution stokes_solve(const StaggeredGrid& g, const StokesInput& in, const SaddleOptions& opt) {
  StokesProblem pb;
  pb.grid = g;
  pb.viscous = ViscousOperator(g, in.mu_cell, in.form);
  const double mu_min = *std::min_element(in.mu_cell.begin(), in.mu_cell.end());
  if (!(mu_min > 0)) throw PreconditionError("stokes_solve: viscosity must be positive");
  pb.penalty = penalty_from_solid(g, in.solid_cell, mu_min);
  pb.force = in.force;
  pb.friction = in.friction;
  return SaddleSolver(std::move(pb)).solve(opt);
}

FaceField project_div_free(const StaggeredGrid& g, const FaceField& u, std::span<const unsigned char> solid_cell,
                           double tol) {
  const std::size_t nf = g.face_count(), nc = g.cell_count();
  const auto wall = wall_faces(g);
  std::vector<unsigned char> free(nf, 0);
  const auto pen = penalty_from_solid(g, solid_cell, 1.0);
  for (std::size_t f = 0; f < nf; ++f) free[f] = !wall[f] && pen[f] == 0.0;
  const DivergenceOperator div(g, free);
  const auto vol = face_volumes(g);
  std::vector<double> um(nf);
  for (std::size_t f = 0; f < nf; ++f) um[f] = free[f] ? u[f] : 0.0;
  std::vector<double> rhs(nc), phi(nc, 0.0), t(nf);
  div.apply(um, rhs);
  const auto& act = div.active_cells();
  const double na = static_cast<double>(std::max<std::size_t>(div.active_count(), 1));
  auto center = [&](std::span<double> v) {
    double m = 0.0;
    for (std::size_t c = 0; c < nc; ++c) m += act[c] ? v[c] : 0.0;
    m /= na;
    for (std::size_t c = 0; c < nc; ++c) v[c] = act[c] ? v[c] - m : 0.0;
  };
  center(rhs);
  auto op = [&](std::span<const double> x, std::span<double> y) {
    div.apply_transpose(x, t);
    for (std::size_t f = 0; f < nf; ++f) t[f] /= vol[f];
    div.apply(t, y);
  };
  FastDiagonalization fdm({Line1D::cells_neumann(g.axis(0)), Line1D::cells_neumann(g.axis(1)),
                           Line1D::cells_neumann(g.axis(2))});
  auto pre = [&](std::span<const double> r, std::span<double> z) {
    std::copy(r.begin(), r.end(), z.begin());
    center(z);
    fdm.solve(z);
    center(z);
  };
  KrylovOptions ko;
  ko.rtol = tol;
  ko.max_iter = 2000;
  // scale-aware absolute floor: |B| |u|
  std::vector<double> sc(nc);
  div.apply_abs(um, sc);
  ko.atol = tol * norm2(sc);
  if (norm2(rhs) > ko.atol) pcg(op, pre, rhs, phi, ko);
  FaceField out(g);
  div.apply_transpose(phi, t);
  for (std::size_t f = 0; f < nf; ++f) out[f] = free[f] ? um[f] - t[f] / vol[f] : 0.0;
  return out;
}

}  // namespace homog::numerics
