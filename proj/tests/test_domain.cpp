#include "mssflow/domain.hpp"
#include "mssflow/error.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

using namespace mssflow;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec zero(int n) { return Vec::Zero(n); }

// Central differences of the signed distance: gradient and Hessian.
void fd_distance(const DomainSpec& spec, const Vec& x, double h, Vec& grad, Mat& hess) {
  const int n = spec.dim;
  grad = Vec::Zero(n);
  hess = Mat::Zero(n, n);
  const double d0 = spec.signed_distance(x);
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e(i) = h;
    const double dp = spec.signed_distance(x + e), dm = spec.signed_distance(x - e);
    grad(i) = (dp - dm) / (2 * h);
    hess(i, i) = (dp - 2 * d0 + dm) / (h * h);
    for (int j = i + 1; j < n; ++j) {
      Vec f = Vec::Zero(n);
      f(j) = h;
      const double v = (spec.signed_distance(x + e + f) - spec.signed_distance(x + e - f) -
                        spec.signed_distance(x - e + f) + spec.signed_distance(x - e - f)) /
                       (4 * h * h);
      hess(i, j) = hess(j, i) = v;
    }
  }
}

std::vector<double> sorted_eigs(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(m)};
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(DomainSpec, Validation) {
  EXPECT_THROW(DomainSpec::ball(zero(2), -1.0), PreconditionError);
  EXPECT_THROW(DomainSpec::annulus(zero(2), 1.0, 0.5), PreconditionError);
  EXPECT_THROW(DomainSpec::exterior(zero(2), 1.0, 1.5), PreconditionError);
  EXPECT_THROW(DomainSpec::box(v2(0, 0), v2(1, 0)), PreconditionError);
  EXPECT_NO_THROW(DomainSpec::exterior(zero(2), 1.0, 9.0));
}

TEST(DistanceJet, BallTangentialCurvature) {
  const DomainSpec ball = DomainSpec::ball(zero(2), 2.0);
  for (double s : {0.1, 0.5, 0.9}) {
    const DistanceJet dj = distance_jet(ball, v2(0.0, 2.0 - s));
    EXPECT_NEAR(dj.d, s, 1e-14);
    const auto e = sorted_eigs(dj.hess);
    EXPECT_NEAR(e[0], -1.0 / (2.0 - s), 1e-12);
    EXPECT_NEAR(e[1], 0.0, 1e-12);
    EXPECT_NEAR(dj.grad.norm(), 1.0, 1e-12);
  }
  const DomainSpec ball3 = DomainSpec::ball(zero(3), 1.0);
  Vec x(3);
  x << 0.3, 0.4, 0.5;
  const DistanceJet dj = distance_jet(ball3, x);
  const auto e = sorted_eigs(dj.hess);
  EXPECT_NEAR(e[0], -1.0 / x.norm(), 1e-12);
  EXPECT_NEAR(e[1], -1.0 / x.norm(), 1e-12);
  EXPECT_NEAR(e[2], 0.0, 1e-12);
}

TEST(DistanceJet, BoxFaceIsFlat) {
  const DomainSpec box = DomainSpec::box(v2(0, 0), v2(1, 1));
  const DistanceJet dj = distance_jet(box, v2(0.5, 0.1));
  EXPECT_NEAR(dj.d, 0.1, 1e-15);
  EXPECT_EQ(dj.hess.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(dj.grad(1), 1.0, 1e-15);
  // within eta0 of two faces
  EXPECT_THROW(distance_jet(box, v2(0.05, 0.05)), PreconditionError);
}

TEST(DistanceJet, AnnulusInnerSphereAndFiniteDifferences) {
  const DomainSpec ann = DomainSpec::annulus(zero(2), 0.5, 1.0);
  for (double s : {0.05, 0.1, 0.2}) {
    const DistanceJet dj = distance_jet(ann, v2(0.5 + s, 0.0));
    const auto e = sorted_eigs(dj.hess);
    EXPECT_NEAR(e[1], 1.0 / (0.5 + s), 1e-12);
    EXPECT_NEAR(e[0], 0.0, 1e-12);
  }
  // finite differences: O(h^2) on refinement pairs
  const Vec x = v2(0.45, 0.35);
  const DistanceJet dj = distance_jet(ann, x);
  double prev = 0.0;
  for (double h : {4e-3, 2e-3}) {
    Vec g;
    Mat hs;
    fd_distance(ann, x, h, g, hs);
    const double err = (hs - dj.hess).cwiseAbs().maxCoeff();
    EXPECT_LT((g - dj.grad).norm(), 1e-4);
    if (prev > 0.0) EXPECT_GT(prev / err, 3.5);
    prev = err;
  }
}

TEST(DistanceJet, GradientIsUnitAndFdAgreesOnEveryShape) {
  const std::vector<std::pair<DomainSpec, Vec>> cases = {
      {DomainSpec::ball(zero(2), 1.0), v2(0.6, -0.5)},
      {DomainSpec::annulus(zero(2), 0.5, 1.0), v2(-0.2, 0.85)},
      {DomainSpec::exterior(zero(2), 1.0, 9.0), v2(1.1, 0.7)},
      {DomainSpec::box(v2(-1, -1), v2(1, 1)), v2(0.1, 0.8)},
  };
  for (const auto& [spec, x] : cases) {
    const DistanceJet dj = distance_jet(spec, x);
    EXPECT_NEAR(dj.grad.norm(), 1.0, 1e-10);
    Vec g;
    Mat hs;
    fd_distance(spec, x, 1e-3, g, hs);
    EXPECT_LT((hs - dj.hess).cwiseAbs().maxCoeff(), 1e-4) << spec.describe();
  }
}

TEST(DistanceJet, RejectsOutsideAndMedialRegion) {
  const DomainSpec ball = DomainSpec::ball(zero(2), 1.0);
  EXPECT_THROW(distance_jet(ball, v2(1.2, 0.0)), PreconditionError);
  EXPECT_THROW(distance_jet(ball, v2(0.1, 0.0)), PreconditionError);
}

TEST(BoundaryGeometry, PerShapeConstants) {
  const BoundaryGeometry b = estimate_c0_eta0(DomainSpec::ball(zero(2), 2.0));
  EXPECT_EQ(b.c0, 0.0);
  EXPECT_DOUBLE_EQ(b.eta0, 1.0);
  EXPECT_TRUE(b.strictly_convex);

  const BoundaryGeometry a = estimate_c0_eta0(DomainSpec::annulus(zero(2), 0.5, 1.0));
  EXPECT_DOUBLE_EQ(a.eta0, 0.25);
  EXPECT_DOUBLE_EQ(a.c0, 2.0 / 0.5);
  EXPECT_DOUBLE_EQ(a.c0, 2.0 * a.hess_d_bound);

  const BoundaryGeometry x = estimate_c0_eta0(DomainSpec::box(v2(0, 0), v2(1, 2)));
  EXPECT_EQ(x.c0, 0.0);
  EXPECT_DOUBLE_EQ(x.eta0, 0.45 * 0.5);

  const BoundaryGeometry e1 = estimate_c0_eta0(DomainSpec::exterior(zero(2), 1.0, 9.0));
  const BoundaryGeometry e2 = estimate_c0_eta0(DomainSpec::exterior(zero(2), 1.0, 13.0));
  EXPECT_EQ(e1.c0, e2.c0);
  EXPECT_EQ(e1.eta0, e2.eta0);
}

TEST(BuildGrid, UnitBoxCounts) {
  const Grid g = build_grid(DomainSpec::box(v2(0, 0), v2(1, 1)), 1.0 / 64);
  EXPECT_EQ(g.interior.size(), 63u * 63u);
  EXPECT_EQ(g.boundary_nodes.size(), 4u * 64u);
  EXPECT_TRUE(g.samples.empty());
  EXPECT_DOUBLE_EQ(g.spacing(0), 1.0 / 64);
  double total = 0.0;
  for (int i : g.domain_nodes()) total += g.weight[i];
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(BuildGrid, BallArmsReachTheCircle) {
  const double h = 1.0 / 32;
  const DomainSpec spec = DomainSpec::ball(zero(2), 1.0);
  const Grid g = build_grid(spec, h);
  for (int i = 0; i < g.node_count(); ++i) {
    const Vec x = g.position(i);
    const double r = x.norm();
    if (r < 1.0 - 1e-12) {
      EXPECT_TRUE(g.in_domain(i)) << i;
    } else if (r > 1.0 + 1e-12) {
      EXPECT_FALSE(g.in_domain(i)) << i;
    }
    if (g.kind[i] != NodeKind::Interior) continue;
    for (int axis = 0; axis < 2; ++axis)
      for (int side = 0; side < 2; ++side) {
        const Arm& a = g.arm(i, axis, side);
        ASSERT_TRUE(a.present());
        if (!a.sample) continue;
        const BoundarySample& s = g.samples[a.index];
        EXPECT_NEAR(s.x.norm(), 1.0, 1e-12);
        EXPECT_GT(s.theta, 0.0);
        EXPECT_LE(s.theta, 1.0);
        EXPECT_NEAR(a.length, s.theta * h, 1e-15);
        EXPECT_NEAR((s.x - x).norm(), a.length, 1e-12);
        EXPECT_GE(s.theta, g.snap_fraction - 1e-12);
      }
  }
  EXPECT_GE(g.h_min, 0.5 * h - 1e-15);
}

TEST(BuildGrid, ClassificationMatchesSignedDistance) {
  for (const DomainSpec& spec : {DomainSpec::ball(zero(2), 1.0), DomainSpec::annulus(zero(2), 0.5, 1.0),
                                 DomainSpec::exterior(zero(2), 1.0, 5.0)}) {
    const Grid g = build_grid(spec, 1.0 / 32);
    for (int i = 0; i < g.node_count(); ++i) {
      const double d = spec.signed_distance(g.position(i));
      if (d > 1e-12) EXPECT_TRUE(g.in_domain(i));
      if (d < -1e-12) EXPECT_FALSE(g.in_domain(i));
    }
  }
}

TEST(BuildGrid, AnnulusComponentTags) {
  const Grid g = build_grid(DomainSpec::annulus(zero(2), 0.5, 1.0), 1.0 / 32);
  std::set<int> tags;
  for (const auto& s : g.samples) {
    tags.insert(s.component);
    const double r = s.x.norm();
    EXPECT_NEAR(r, s.component == 0 ? 0.5 : 1.0, 1e-12);
  }
  EXPECT_EQ(tags, (std::set<int>{0, 1}));
}

TEST(BuildGrid, RejectsUnderResolvedDomains) {
  EXPECT_THROW(build_grid(DomainSpec::box(v2(0, 0), v2(1, 1)), 0.2), PreconditionError);
  EXPECT_THROW(build_grid(DomainSpec::annulus(zero(2), 0.9, 1.0), 1.0 / 32), PreconditionError);
  EXPECT_THROW(build_grid(DomainSpec::ball(zero(2), 1.0), 0.0), PreconditionError);
}

TEST(BuildGrid, ShellsShareLattice) {
  const Grid a = build_grid(DomainSpec::exterior(zero(2), 1.0, 9.0), 0.25);
  const Grid b = build_grid(DomainSpec::exterior(zero(2), 1.0, 11.0), 0.25);
  // node positions coincide up to an integer shift
  const Vec shift = (a.origin - b.origin) / 0.25;
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(shift(k), std::round(shift(k)), 1e-12);
}

TEST(BandNodes, MonotoneInDelta) {
  for (const DomainSpec& spec : {DomainSpec::ball(zero(2), 1.0), DomainSpec::annulus(zero(2), 0.5, 1.0),
                                 DomainSpec::box(v2(0, 0), v2(1, 1))}) {
    const Grid g = build_grid(spec, 1.0 / 32);
    std::vector<int> prev;
    for (double delta : {0.02, 0.05, 0.1, 0.2}) {
      const std::vector<int> band = band_nodes(g, delta);
      EXPECT_TRUE(std::includes(band.begin(), band.end(), prev.begin(), prev.end()));
      for (int i : band) EXPECT_LT(g.distance(g.position(i)), delta);
      prev = band;
    }
  }
}

TEST(Grid, DilationScalesSpacing) {
  const Grid g = build_grid(DomainSpec::ball(zero(2), 1.0), 1.0 / 16);
  const Grid d = g.dilated(v2(0.25, 0.0), 2.0);
  EXPECT_DOUBLE_EQ(d.spacing(0), 2.0 * g.spacing(0));
  for (int i : g.domain_nodes()) EXPECT_LT((d.position(i) - 2.0 * (g.position(i) - v2(0.25, 0.0))).norm(), 1e-12);
}
