#include "homog/numerics/viscous.hpp"

#include <stdexcept>

namespace homog::numerics {

ViscousOperator::ViscousOperator(const StaggeredGrid& g, std::span<const double> mu_cell, ViscousForm form)
    : grid_(g), form_(form), mu_cell_(mu_cell.begin(), mu_cell.end()) {
  if (mu_cell_.size() != g.cell_count()) throw std::invalid_argument("viscosity size does not match grid");
  const Index3 n = g.dims();
  for (int a = 0; a < 3; ++a) {
    const AxisCoords& ax = g.axis(a);
    inv_w_[a].resize(n[a]);
    inv_d_[a].resize(n[a] + 1);
    for (int i = 0; i < n[a]; ++i) inv_w_[a][i] = 1.0 / ax.width(i);
    for (int i = 0; i <= n[a]; ++i) inv_d_[a][i] = 1.0 / ax.dual(i);
  }
  const double factor = form == ViscousForm::symmetric_gradient ? 2.0 : 1.0;
  cell_w_.resize(g.cell_count());
  double mu_v = 0.0;
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    const double v = g.cell_volume(i, j, k);
    if (!(mu_cell_[c] > 0)) throw std::invalid_argument("viscosity must be positive");
    cell_w_[c] = factor * mu_cell_[c] * v;
    mu_v += mu_cell_[c] * v;
  });
  mean_mu_ = mu_v / g.volume();

  const Lattice lc(n);
  for (int c = 0; c < 3; ++c) {
    const int a = (c + 1) % 3, b = (c + 2) % 3;
    const Lattice le(edge_dims(n, c));
    edge_w_[c].assign(le.size(), 0.0);
    for (int k = 0; k < le.n[2]; ++k)
      for (int j = 0; j < le.n[1]; ++j)
        for (int i = 0; i < le.n[0]; ++i) {
          const Index3 e{i, j, k};
          double sum = 0.0;
          int cnt = 0;
          for (int da = -1; da <= 0; ++da)
            for (int db = -1; db <= 0; ++db) {
              Index3 q = e;
              q[a] += da;
              q[b] += db;
              if (q[a] < 0 || q[a] >= n[a] || q[b] < 0 || q[b] >= n[b]) continue;
              sum += mu_cell_[lc(q)];
              ++cnt;
            }
          const double vol = g.axis(a).dual(e[a]) * g.axis(b).dual(e[b]) * g.axis(c).width(e[c]);
          edge_w_[c][le(e)] = (sum / cnt) * vol;
        }
  }
}

namespace {

template <int A, bool Sym>
void apply_comp(const StaggeredGrid& g, const std::vector<double>& cell_w, const std::array<std::vector<double>, 3>& edge_w,
                const std::array<std::vector<double>, 3>& inv_w, const std::array<std::vector<double>, 3>& inv_d,
                const std::array<const double*, 3>& u, double* out, Exec exec) {
  const Index3 n = g.dims();
  const Lattice la(g.face_dims(A));
  const Lattice lc(n);
  constexpr int B1 = (A + 1) % 3, B2 = (A + 2) % 3;
  const Lattice lb1(g.face_dims(B1)), lb2(g.face_dims(B2));
  const Lattice le_c2(edge_dims(n, B2)), le_c1(edge_dims(n, B1));  // plane (A,B1) -> c = B2
  const double* ua = u[A];
  const int nk = la.n[2];
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int k = 0; k < nk; ++k) {
    for (int j = 0; j < la.n[1]; ++j) {
      for (int i = 0; i < la.n[0]; ++i) {
        const Index3 p{i, j, k};
        const long idx = la(p);
        const int node = p[A];
        if (node == 0 || node == n[A]) {
          out[idx] = 0.0;
          continue;
        }
        const double val = ua[idx];
        Index3 cl = p;
        cl[A] = node - 1;
        const double iwl = inv_w[A][node - 1], iwu = inv_w[A][node];
        double acc = cell_w[lc(cl)] * (val - ua[idx - la.stride[A]]) * iwl * iwl -
                     cell_w[lc(p)] * (ua[idx + la.stride[A]] - val) * iwu * iwu;

        auto shear = [&]<int B>(const Lattice& lb, const Lattice& le, const std::vector<double>& ew) {
          const int jb = p[B];
          const double ida = inv_d[A][node];
          // edge below (node jb along B)
          {
            Index3 e = p;
            const double below = jb > 0 ? ua[idx - la.stride[B]] : 0.0;
            double s = (val - below) * inv_d[B][jb];
            if constexpr (Sym) {
              Index3 q = p;  // u_B at cell `node` (and node-1) along A, node jb along B
              const long qi = lb(q);
              s += (u[B][qi] - u[B][qi - lb.stride[A]]) * ida;
            }
            acc += ew[le(e)] * s * inv_d[B][jb];
          }
          // edge above (node jb+1 along B)
          {
            Index3 e = p;
            e[B] = jb + 1;
            const double above = jb < n[B] - 1 ? ua[idx + la.stride[B]] : 0.0;
            double s = (above - val) * inv_d[B][jb + 1];
            if constexpr (Sym) {
              Index3 q = p;
              q[B] = jb + 1;
              const long qi = lb(q);
              s += (u[B][qi] - u[B][qi - lb.stride[A]]) * ida;
            }
            acc -= ew[le(e)] * s * inv_d[B][jb + 1];
          }
        };
        shear.template operator()<B1>(lb1, le_c2, edge_w[B2]);
        shear.template operator()<B2>(lb2, le_c1, edge_w[B1]);
        out[idx] = acc;
      }
    }
  }
}

}  // namespace

void ViscousOperator::apply(std::span<const double> u, std::span<double> out, Exec exec) const {
  const std::size_t o1 = grid_.face_count(0), o2 = o1 + grid_.face_count(1);
  const std::array<const double*, 3> uc{u.data(), u.data() + o1, u.data() + o2};
  std::array<double*, 3> oc{out.data(), out.data() + o1, out.data() + o2};
  if (form_ == ViscousForm::symmetric_gradient) {
    apply_comp<0, true>(grid_, cell_w_, edge_w_, inv_w_, inv_d_, uc, oc[0], exec);
    apply_comp<1, true>(grid_, cell_w_, edge_w_, inv_w_, inv_d_, uc, oc[1], exec);
    apply_comp<2, true>(grid_, cell_w_, edge_w_, inv_w_, inv_d_, uc, oc[2], exec);
  } else {
    apply_comp<0, false>(grid_, cell_w_, edge_w_, inv_w_, inv_d_, uc, oc[0], exec);
    apply_comp<1, false>(grid_, cell_w_, edge_w_, inv_w_, inv_d_, uc, oc[1], exec);
    apply_comp<2, false>(grid_, cell_w_, edge_w_, inv_w_, inv_d_, uc, oc[2], exec);
  }
}

std::vector<double> ViscousOperator::diagonal() const {
  std::vector<double> d(grid_.face_count(), 1.0);
  const Index3 n = grid_.dims();
  const Lattice lc(n);
  for_each_face(grid_, [&](int a, int i, int j, int k, std::size_t f) {
    const Index3 p{i, j, k};
    const int node = p[a];
    if (node == 0 || node == n[a]) return;
    Index3 cl = p;
    cl[a] = node - 1;
    double s = cell_w_[lc(cl)] * inv_w_[a][node - 1] * inv_w_[a][node - 1] + cell_w_[lc(p)] * inv_w_[a][node] * inv_w_[a][node];
    for (int b = 0; b < 3; ++b) {
      if (b == a) continue;
      const int c = 3 - a - b;
      const Lattice le(edge_dims(n, c));
      Index3 e = p;
      s += edge_w_[c][le(e)] * inv_d_[b][p[b]] * inv_d_[b][p[b]];
      e[b] = p[b] + 1;
      s += edge_w_[c][le(e)] * inv_d_[b][p[b] + 1] * inv_d_[b][p[b] + 1];
    }
    d[f] = s;
  });
  return d;
}

template <class Visit>
double ViscousOperator::strain_sum(std::span<const double> u, std::span<const double> v, Visit&& keep, bool use_mu) const {
  const StaggeredGrid& g = grid_;
  const Index3 n = g.dims();
  const Lattice lc(n);
  const std::size_t o1 = g.face_count(0), o2 = o1 + g.face_count(1);
  const std::array<std::size_t, 3> off{0, o1, o2};
  const std::array<Lattice, 3> lf{Lattice(g.face_dims(0)), Lattice(g.face_dims(1)), Lattice(g.face_dims(2))};
  const double factor = form_ == ViscousForm::symmetric_gradient ? 2.0 : 1.0;
  auto val = [&](std::span<const double> w, int a, Index3 q) -> double {
    for (int d = 0; d < 3; ++d) {
      const int lim = d == a ? n[d] : n[d] - 1;
      if (q[d] < 0 || q[d] > lim) return 0.0;
    }
    return w[off[a] + lf[a](q)];
  };
  double total = 0.0;
  // normal strains at cell centres
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    if (!keep(g.cell_center(i, j, k))) return;
    const double w = use_mu ? cell_w_[c] : factor * g.cell_volume(i, j, k);
    for (int a = 0; a < 3; ++a) {
      Index3 lo{i, j, k}, hi{i, j, k};
      hi[a] += 1;
      const double iw = inv_w_[a][lo[a]];
      total += w * (val(u, a, hi) - val(u, a, lo)) * iw * (val(v, a, hi) - val(v, a, lo)) * iw;
    }
  });
  // shear strains on edges
  for (int c = 0; c < 3; ++c) {
    const int a = (c + 1) % 3, b = (c + 2) % 3;
    const Lattice le(edge_dims(n, c));
    for (int k = 0; k < le.n[2]; ++k)
      for (int j = 0; j < le.n[1]; ++j)
        for (int i = 0; i < le.n[0]; ++i) {
          const Index3 e{i, j, k};
          Point3 x;
          x[a] = g.axis(a).node(e[a]);
          x[b] = g.axis(b).node(e[b]);
          x[c] = g.axis(c).center(e[c]);
          if (!keep(x)) continue;
          double w = edge_w_[c][le(e)];
          if (!use_mu) w = g.axis(a).dual(e[a]) * g.axis(b).dual(e[b]) * g.axis(c).width(e[c]);
          // d_b u_a and d_a u_b at the edge
          auto grads = [&](std::span<const double> f, double& dba, double& dab) {
            Index3 q = e;
            q[b] = e[b] - 1;
            dba = (val(f, a, e) - val(f, a, q)) * inv_d_[b][e[b]];
            Index3 r = e;
            r[a] = e[a] - 1;
            dab = (val(f, b, e) - val(f, b, r)) * inv_d_[a][e[a]];
          };
          double ub, ua, vb, va;
          grads(u, ub, ua);
          grads(v, vb, va);
          if (form_ == ViscousForm::symmetric_gradient)
            total += w * (ub + ua) * (vb + va);
          else
            total += w * (ub * vb + ua * va);
        }
  }
  return total;
}

double ViscousOperator::bilinear(std::span<const double> u, std::span<const double> v) const {
  return strain_sum(u, v, [](const Point3&) { return true; }, true);
}

double ViscousOperator::energy_in(std::span<const double> u, const std::function<bool(const Point3&)>& inside,
                                  bool weight_by_mu) const {
  return strain_sum(u, u, inside, weight_by_mu);
}

}  // namespace homog::numerics
