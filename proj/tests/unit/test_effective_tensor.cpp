#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "homog/drag_cache.hpp"
#include "homog/effective_tensor.hpp"
#include "homog/errors.hpp"
#include "homog/geometry/domain.hpp"

using namespace homog;
using namespace homog::effective;

namespace {

const cell::CellGridSpec kSpec{40, 0, 1.4};

// Synthetic drag law standing in for the cell solver: C(s K) = c(s) I with
// c(s) = 6 pi (s/2) (1 + s). Keeps these tests about the assembly, not the solver.
double synthetic(double s) { return 6 * std::numbers::pi * s / 2 * (1 + s); }

void seed_cache(cell::DragCache& cache, const geometry::HoleShape& shape, std::vector<double> scales) {
  for (double s : scales) {
    cell::DragRecord r;
    r.shape_hash = shape.hash();
    r.s = s;
    r.resolution = cell::resolution_key(kSpec);
    r.C = Eigen::Matrix3d::Identity() * synthetic(s);
    cache.insert(r);
  }
}

geometry::HoleShape sphere(double r) {
  geometry::ShapeSpec s;
  s.radius = r;
  return geometry::make_hole_shape(s, 1);
}

}  // namespace

TEST(EffectiveTensor, ZeroHolesGiveZeroField) {
  const geometry::PerforatedDomain d(geometry::Box{}, 0.5, 1, {});
  cell::DragCache cache;
  const auto f = assemble_effective_tensor(d, lattice_partition(d.box(), 0.5), cache, kSpec, false);
  EXPECT_TRUE(f.is_zero());
  EXPECT_EQ(f.dims(), (Index3{2, 2, 2}));
}

TEST(EffectiveTensor, InteriorBoxesCarryScaledCellDrag) {
  const double eps = 0.25;
  const auto d = geometry::build_perforated_domain(geometry::Box{}, eps, {}, 1);
  cell::DragCache cache;
  seed_cache(cache, d.holes()[0].shape, {eps * eps * eps});
  const auto f = assemble_effective_tensor(d, lattice_partition(d.box(), eps), cache, kSpec, false);
  const double expect = synthetic(eps * eps * eps) / (eps * eps * eps);
  int with_hole = 0;
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) {
        const bool interior = i > 0 && i < 3 && j > 0 && j < 3 && k > 0 && k < 3;
        const auto& D = f[f.index(i, j, k)];
        if (interior) {
          ++with_hole;
          EXPECT_EQ(D(0, 0), expect);  // same cached matrix, exact
          EXPECT_EQ(D(2, 2), expect);
        } else {
          EXPECT_EQ(D.norm(), 0.0);
        }
      }
  EXPECT_EQ(with_hole, 8);
  EXPECT_GE(f.min_eigenvalue(), 0.0);
}

TEST(EffectiveTensor, CoarseningIsAdditive) {
  const double eps = 0.125;
  const auto d = geometry::build_perforated_domain(geometry::Box{}, eps, {}, 1);
  cell::DragCache cache;
  seed_cache(cache, d.holes()[0].shape, {eps * eps * eps});
  const auto fine = assemble_effective_tensor(d, {8, 8, 8}, cache, kSpec, false);
  const auto mid = assemble_effective_tensor(d, {4, 4, 4}, cache, kSpec, false);
  const auto coarse = assemble_effective_tensor(d, {2, 2, 2}, cache, kSpec, false);
  const auto f2 = fine.coarsen({4, 4, 4});
  const auto f1 = fine.coarsen({2, 2, 2});
  for (std::size_t m = 0; m < mid.size(); ++m) EXPECT_NEAR((f2[m] - mid[m]).norm(), 0.0, 1e-12 * mid[m].norm() + 1e-300);
  for (std::size_t m = 0; m < coarse.size(); ++m) EXPECT_NEAR((f1[m] - coarse[m]).norm(), 0.0, 1e-12 * coarse[m].norm());
  EXPECT_THROW(fine.coarsen({3, 3, 3}), PreconditionError);
}

TEST(EffectiveTensor, MissingDragWithoutComputeThrows) {
  const auto d = geometry::build_perforated_domain(geometry::Box{}, 0.25, {}, 1);
  cell::DragCache cache;
  EXPECT_THROW(assemble_effective_tensor(d, {4, 4, 4}, cache, kSpec, false), CacheMiss);
}

TEST(EffectiveTensor, TextRoundTrip) {
  EffectiveTensorField f(geometry::Box{{0, 0, 0}, {2, 1, 1}}, {2, 1, 1});
  f[0] = Eigen::Matrix3d::Identity() * (1.0 / 3.0);
  f[1](0, 1) = f[1](1, 0) = 0.1;
  const auto back = EffectiveTensorField::from_text(f.to_text());
  EXPECT_EQ(back.to_text(), f.to_text());
  EXPECT_EQ(back[0], f[0]);
  EXPECT_EQ(back.locate({1.5, 0.5, 0.5}), (Index3{1, 0, 0}));
  EXPECT_EQ(&f.at({0.2, 0.2, 0.2}), &f[0]);
}

TEST(Extrapolation, ExactForPolynomials) {
  const std::vector<double> x{0.2, 0.1, 0.05};
  std::vector<double> y;
  for (double t : x) y.push_back(3 - 2 * t + 5 * t * t);
  EXPECT_NEAR(extrapolate_to_zero(x, y), 3.0, 1e-12);
}

TEST(PeriodicTensor, SyntheticLimitAndSizeRatio) {
  const std::vector<double> eps{std::cbrt(0.2), std::cbrt(0.1), std::cbrt(0.05)};
  cell::DragCache cache;
  const auto s1 = sphere(0.5);
  seed_cache(cache, s1, {0.2, 0.1, 0.05});
  const auto rep = periodic_effective_tensor(s1, 1.0, eps, cache, kSpec);
  // eps^-3 C(eps^3 K) = 3 pi (1 + s): linear in s, extrapolates exactly
  EXPECT_NEAR(rep.D_inf(0, 0), 3 * std::numbers::pi, 1e-10);
  EXPECT_NEAR(rep.D_inf(0, 1), 0.0, 1e-12);
  EXPECT_FALSE(rep.unreliable);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(rep.D_inf);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  ASSERT_EQ(rep.D.size(), 3u);
  EXPECT_NEAR(rep.scales[1], 0.1, 1e-12);
  EXPECT_EQ(cache.computed(), 0);
  // r0 doubled: synthetic law gives exactly twice the limit
  cell::DragCache c2;
  seed_cache(c2, s1, {0.4, 0.2, 0.1});
  const auto rep2 = periodic_effective_tensor(s1, 2.0, eps, c2, kSpec);
  const double ratio = rep2.D_inf(0, 0) / rep.D_inf(0, 0);
  EXPECT_GE(ratio, 1.8);
  EXPECT_LE(ratio, 2.2);
}

TEST(PeriodicTensor, RejectsBadSequences) {
  cell::DragCache cache;
  EXPECT_THROW(periodic_effective_tensor(sphere(0.5), 1.0, {0.5}, cache, kSpec), PreconditionError);
  EXPECT_THROW(periodic_effective_tensor(sphere(0.5), 1.0, {0.3, 0.5}, cache, kSpec), PreconditionError);
}
