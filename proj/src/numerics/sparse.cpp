#include "homog/numerics/sparse.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "homog/errors.hpp"
#include "homog/numerics/fields.hpp"

namespace homog::numerics {

SparseOperator::SparseOperator(CsrMatrix m, bool symmetric) : m_(std::move(m)), symmetric_(symmetric) {
  m_.makeCompressed();
  if (symmetric_ && m_.rows() != m_.cols()) throw std::invalid_argument("symmetric operator must be square");
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y, Exec exec) const {
  const long n = m_.rows();
  const long* outer = m_.outerIndexPtr();
  const long* inner = m_.innerIndexPtr();
  const double* val = m_.valuePtr();
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long r = 0; r < n; ++r) {
    double s = 0.0;
    for (long q = outer[r]; q < outer[r + 1]; ++q) s += val[q] * x[inner[q]];
    y[r] = s;
  }
}

std::vector<double> SparseOperator::diagonal() const {
  std::vector<double> d(m_.rows(), 0.0);
  for (long r = 0; r < m_.outerSize(); ++r)
    for (CsrMatrix::InnerIterator it(m_, r); it; ++it)
      if (it.col() == r) d[r] = it.value();
  return d;
}

bool SparseOperator::check_symmetry(int samples, double tol) const {
  if (m_.rows() != m_.cols()) return false;
  const long nnz = m_.nonZeros();
  if (nnz == 0) return true;
  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<long> pick(0, nnz - 1);
  const long* outer = m_.outerIndexPtr();
  for (int s = 0; s < samples; ++s) {
    const long q = pick(rng);
    const long r = std::upper_bound(outer, outer + m_.rows() + 1, q) - outer - 1;
    const long c = m_.innerIndexPtr()[q];
    const double v = m_.valuePtr()[q];
    const double vt = m_.coeff(c, r);
    if (std::abs(v - vt) > tol * std::max(1.0, std::abs(v))) return false;
  }
  return true;
}

LinearMap SparseOperator::as_map() const {
  return [this](std::span<const double> x, std::span<double> y) { apply(x, y); };
}

SpdSolve solve_spd(const SparseOperator& a, std::span<const double> b, double tol, int maxit) {
  if (static_cast<long>(b.size()) != a.rows()) throw std::invalid_argument("solve_spd: size mismatch");
  std::vector<double> inv = a.diagonal();
  for (double& d : inv) {
    if (!(d > 0)) throw IndefiniteOperator("solve_spd: non-positive diagonal entry", {});
    d = 1.0 / d;
  }
  SpdSolve out;
  out.x.assign(b.size(), 0.0);
  KrylovOptions opt;
  opt.rtol = tol;
  opt.max_iter = maxit;
  out.info = pcg(
      a.as_map(), [&](std::span<const double> r, std::span<double> z) { hadamard(inv, r, z); }, b, out.x, opt);
  return out;
}

SparseOperator assemble_laplacian(const StaggeredGrid& g) {
  const Index3 n = g.dims();
  std::vector<Eigen::Triplet<double, long>> trip;
  trip.reserve(g.cell_count() * 7);
  for_each_cell(g, [&](int i, int j, int k, std::size_t c) {
    const Index3 p{i, j, k};
    double diag = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double area = g.face_area(a, p);
      for (int s = 0; s <= 1; ++s) {
        const int node = p[a] + s;
        const double w = area / g.axis(a).dual(node);
        diag += w;
        Index3 q = p;
        q[a] += s ? 1 : -1;
        if (q[a] < 0 || q[a] >= n[a]) continue;
        trip.emplace_back(static_cast<long>(c), static_cast<long>(g.cell_index(q[0], q[1], q[2])), -w);
      }
    }
    trip.emplace_back(static_cast<long>(c), static_cast<long>(c), diag);
  });
  CsrMatrix m(static_cast<long>(g.cell_count()), static_cast<long>(g.cell_count()));
  m.setFromTriplets(trip.begin(), trip.end());
  return SparseOperator(std::move(m), true);
}

}  // namespace homog::numerics
