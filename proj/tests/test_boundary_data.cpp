#include "mssflow/boundary_data.hpp"
#include "mssflow/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace mssflow;

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec(std::initializer_list<double> l) {
  Vec v(static_cast<int>(l.size()));
  int i = 0;
  for (double x : l) v(i++) = x;
  return v;
}

Vec zero(int n) { return Vec::Zero(n); }

// Central differences of psi: Jacobian and Hessians.
void fd_jet(const BoundaryMap& psi, const Vec& x, double h, Mat& jac, std::vector<Mat>& hess) {
  const int n = psi.n(), m = psi.m();
  jac = Mat::Zero(m, n);
  hess.assign(m, Mat::Zero(n, n));
  const Vec f0 = psi.value(x);
  for (int i = 0; i < n; ++i) {
    Vec e = zero(n);
    e(i) = h;
    const Vec fp = psi.value(x + e), fm = psi.value(x - e);
    for (int a = 0; a < m; ++a) {
      jac(a, i) = (fp(a) - fm(a)) / (2 * h);
      hess[a](i, i) = (fp(a) - 2 * f0(a) + fm(a)) / (h * h);
    }
    for (int j = i + 1; j < n; ++j) {
      Vec f = zero(n);
      f(j) = h;
      const Vec pp = psi.value(x + e + f), pm = psi.value(x + e - f), mp = psi.value(x - e + f),
                mm = psi.value(x - e - f);
      for (int a = 0; a < m; ++a) hess[a](i, j) = hess[a](j, i) = (pp(a) - pm(a) - mp(a) + mm(a)) / (4 * h * h);
    }
  }
}

double jet_error(const BoundaryMap& psi, const Vec& x, double h) {
  Mat jac;
  std::vector<Mat> hess;
  fd_jet(psi, x, h, jac, hess);
  const PointJet jet = psi.jet(x);
  double err = (jac - jet.jac).cwiseAbs().maxCoeff();
  for (int a = 0; a < psi.m(); ++a) err = std::max(err, (hess[a] - jet.hess[a]).cwiseAbs().maxCoeff());
  EXPECT_LT((psi.value(x) - jet.value).norm(), 1e-14);
  return err;
}

std::vector<BoundaryMap> families() {
  std::vector<BoundaryMap> out;
  out.push_back(BoundaryMap::constant(2, vec({0.25, -1.0})));
  Mat a(2, 3);
  a << 0.2, -0.1, 0.4, 0.0, 0.3, -0.2;
  out.push_back(BoundaryMap::linear(vec({0.1, 0.2}), a));
  out.push_back(BoundaryMap::polynomial(2, {{{0.5, {2, 1}}, {-0.3, {0, 3}}}, {{1.0, {4, 0}}, {0.2, {1, 1}}}}));
  out.push_back(BoundaryMap::trigonometric(vec({0.1, 0.05}), {vec({1.0, 0.7}), vec({-2.0, 0.5})}, vec({0.3, 0.0}),
                                           vec({0.0, 1.0})));
  out.push_back(BoundaryMap::lawson_osserman(2, 0.7, 2, vec({0.1, -0.2})));
  out.push_back(BoundaryMap::lawson_osserman(3, 0.4, 3, vec({0.0, 0.0, 0.0})));
  out.push_back(BoundaryMap::lawson_osserman_hopf(0.5, vec({0.1, 0.0, -0.1, 0.2})));
  out.push_back(BoundaryMap::dipole(vec({0.3, 0.2}), {vec({1.0, 0.0}), vec({0.6, 0.8})}, vec({0.0, 0.0})));
  return out;
}

// Oracle for sup_|tau|=1 |D^2 psi(tau, tau)| in n = 2: dense angles plus golden-section polish.
double hessian_norm_oracle_2d(const PointJet& jet) {
  auto value = [&](double th) {
    const double c = std::cos(th), s = std::sin(th);
    double sq = 0.0;
    for (int a = 0; a < jet.m(); ++a) {
      const Mat& h = jet.hess[a];
      const double q = h(0, 0) * c * c + 2 * h(0, 1) * c * s + h(1, 1) * s * s;
      sq += q * q;
    }
    return std::sqrt(sq);
  };
  const int k = 20000;
  double best = 0.0;
  for (int i = 0; i < k; ++i) {
    double lo = kPi * (i - 1) / k, hi = kPi * (i + 1) / k;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 40; ++it) {
      const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
      if (value(a) > value(b)) hi = b; else lo = a;
    }
    best = std::max({best, value(kPi * i / k), value(0.5 * (lo + hi))});
  }
  return best;
}

}  // namespace

TEST(BoundaryMap, JetsMatchFiniteDifferencesAtSecondOrder) {
  for (const BoundaryMap& psi : families()) {
    const int n = psi.n();
    Vec x = zero(n);
    for (int i = 0; i < n; ++i) x(i) = 0.37 + 0.21 * i;
    if (psi.family_name() == "dipole") x = vec({1.3, 0.9});
    const double e1 = jet_error(psi, x, 2e-3);
    const double e2 = jet_error(psi, x, 1e-3);
    if (e1 < 1e-9) continue;  // polynomial of degree <= 2 in each direction, or constant
    EXPECT_GT(e1 / e2, 3.5) << psi.family_name();
    EXPECT_LT(e2, 1e-4) << psi.family_name();
  }
}

TEST(BoundaryMap, ShapeValidation) {
  EXPECT_THROW(BoundaryMap::polynomial(2, {{{1.0, {3, 2}}}}), PreconditionError);
  EXPECT_THROW(BoundaryMap::lawson_osserman_hopf(1.0, zero(3)), PreconditionError);
  EXPECT_THROW(BoundaryMap::lawson_osserman(1, 1.0, 2, zero(1)), PreconditionError);
  EXPECT_EQ(BoundaryMap::lawson_osserman_hopf(1.0, zero(4)).m(), 3);
}

TEST(BoundaryMap, HopfMapsSpheresToSpheres) {
  const BoundaryMap psi = BoundaryMap::lawson_osserman_hopf(1.0, zero(4));
  std::mt19937 gen(1);
  std::normal_distribution<double> d;
  for (int k = 0; k < 50; ++k) {
    Vec x(4);
    for (int i = 0; i < 4; ++i) x(i) = d(gen);
    x /= x.norm();
    EXPECT_NEAR(psi.value(x).norm(), 1.0, 1e-14);
  }
}

TEST(BoundaryMap, ScaledIsLinear) {
  for (const BoundaryMap& psi : families()) {
    const BoundaryMap s = psi.scaled(0.3);
    Vec x = zero(psi.n());
    for (int i = 0; i < psi.n(); ++i) x(i) = 1.1 + 0.1 * i;
    const PointJet a = psi.jet(x), b = s.jet(x);
    EXPECT_LT((b.value - 0.3 * a.value).norm(), 1e-14);
    EXPECT_LT((b.jac - 0.3 * a.jac).norm(), 1e-14);
  }
}

TEST(Oscillation, Examples) {
  const Grid box = build_grid(DomainSpec::box(vec({0, 0}), vec({1, 1})), 1.0 / 16);
  EXPECT_EQ(oscillation(BoundaryMap::constant(2, vec({3.0, -1.0})), box), 0.0);
  Mat a(2, 2);
  a << 0.2, 0.0, 0.0, 0.0;
  EXPECT_NEAR(oscillation(BoundaryMap::linear(zero(2), a), box), 0.2, 1e-15);
  a << 0.1, 0.0, 0.0, 0.3;
  const Vec w = component_oscillation(BoundaryMap::linear(zero(2), a), box);
  EXPECT_NEAR(w(0), 0.1, 1e-15);
  EXPECT_NEAR(w(1), 0.3, 1e-15);
  EXPECT_NEAR(oscillation(BoundaryMap::linear(zero(2), a), box), 0.3, 1e-15);
}

TEST(SupNorms, Examples) {
  const Grid box = build_grid(DomainSpec::box(vec({0, 0}), vec({1, 1})), 1.0 / 64);
  Mat a(2, 2);
  a << 0.3, 0.0, 0.0, 0.1;
  const SupNorms lin = sup_norms(BoundaryMap::linear(zero(2), a), box, Region::All);
  EXPECT_NEAR(lin.dpsi, 0.3, 1e-15);
  EXPECT_EQ(lin.d2psi, 0.0);

  const BoundaryMap sine =
      BoundaryMap::trigonometric(vec({0.1, 0.0}), {vec({kPi, 0.0}), vec({1.0, 0.0})}, zero(2), zero(2));
  const SupNorms s = sup_norms(sine, box, Region::All);
  EXPECT_NEAR(s.dpsi, kPi / 10, 1e-14);
  EXPECT_NEAR(s.d2psi, kPi * kPi / 10, 1e-13);

  const SupNorms c = sup_norms(BoundaryMap::constant(2, vec({1.0})), box, Region::All);
  EXPECT_EQ(c.dpsi, 0.0);
  EXPECT_EQ(c.d2psi, 0.0);
}

TEST(SupNorms, BandIsSubsetOfGlobal) {
  const Grid g = build_grid(DomainSpec::annulus(zero(2), 0.5, 1.0), 1.0 / 32);
  const BoundaryMap psi = families()[3];
  const SupNorms all = sup_norms(psi, g, Region::All);
  const SupNorms band = sup_norms(psi, g, Region::Band, 0.1);
  EXPECT_LE(band.dpsi, all.dpsi);
  EXPECT_LE(band.d2psi, all.d2psi);
  EXPECT_GE(band.gap_dpsi, 0.0);
  EXPECT_THROW(sup_norms(psi, g, Region::Band, 0.0), PreconditionError);
}

TEST(HessianNorm, SingleComponentIsSpectralNorm) {
  PointJet jet = PointJet::zero(3, 1);
  jet.hess[0] << 1.0, 0.5, 0.0, 0.5, -2.0, 0.1, 0.0, 0.1, 0.3;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(jet.hess[0])};
  EXPECT_NEAR(hessian_norm(jet), es.eigenvalues().cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_NEAR(hessian_norm_component(jet.hess[0]), es.eigenvalues().cwiseAbs().maxCoeff(), 1e-13);
}

TEST(HessianNorm, MatchesDenseOracleInTwoDimensions) {
  std::mt19937 gen(21);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int m = 2 + trial % 3;
    PointJet jet = PointJet::zero(2, m);
    for (int a = 0; a < m; ++a) {
      const double p = d(gen), q = d(gen), r = d(gen);
      jet.hess[a] << p, q, q, r;
    }
    const double ref = hessian_norm_oracle_2d(jet);
    EXPECT_NEAR(hessian_norm(jet), ref, 1e-9) << trial;
    EXPECT_LE(hessian_norm_sampled(jet), hessian_norm(jet) + 1e-12);
  }
}

TEST(HessianNorm, DominatesDenseSamplingInHigherDimensions) {
  std::mt19937 gen(22);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + trial % 2, m = 2 + trial % 2;
    PointJet jet = PointJet::zero(n, m);
    for (int a = 0; a < m; ++a) {
      Mat h(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) h(i, j) = d(gen);
      jet.hess[a] = 0.5 * (h + h.transpose());
    }
    const double v = hessian_norm(jet);
    EXPECT_LE(hessian_norm_sampled(jet), v + 1e-6);
    double rnd = 0.0;
    for (int k = 0; k < 20000; ++k) {
      Vec t(n);
      for (int i = 0; i < n; ++i) t(i) = nd(gen);
      t /= t.norm();
      double sq = 0.0;
      for (int a = 0; a < m; ++a) sq += std::pow(t.dot(jet.hess[a] * t), 2);
      rnd = std::max(rnd, std::sqrt(sq));
    }
    EXPECT_LE(rnd, v + 1e-9);
    EXPECT_GT(rnd, v - 0.05 * v);
  }
}

TEST(Delta0, Examples) {
  BoundaryGeometry ball = estimate_c0_eta0(DomainSpec::ball(zero(2), 3.0));
  EXPECT_DOUBLE_EQ(delta0(ball, 1.0), 1.5);
  BoundaryGeometry g;
  g.c0 = 1.0;
  g.eta0 = 10.0;
  EXPECT_NEAR(delta0(g, 1.0), 1.0 / 32, 1e-15);
  double prev = delta0(g, 1.0);
  for (double c0 : {2.0, 10.0, 1e3, 1e9}) {
    g.c0 = c0;
    const double d = delta0(g, 1.0);
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 1e-9);
}

TEST(ConditionA, WorkedExamples) {
  const Grid g = build_grid(DomainSpec::ball(zero(2), 1.0), 1.0 / 32);
  const BoundaryGeometry geom = estimate_c0_eta0(g.spec);

  const HypothesisReport c = check_condition_A(BoundaryMap::constant(2, vec({0.3, 0.1})), g, geom, 0.25);
  EXPECT_EQ(c.lhs_condition, 0.0);
  EXPECT_TRUE(c.pass);
  EXPECT_EQ(c.eps, 1.0);

  Mat a(2, 2);
  a << 0.2, 0.0, 0.0, 0.0;
  const HypothesisReport f = check_condition_A(BoundaryMap::linear(zero(2), a), g, geom, 0.25);
  EXPECT_NEAR(f.w_psi, 0.4, 1e-12);
  EXPECT_NEAR(f.lhs_condition, 1.8, 1e-12);
  EXPECT_FALSE(f.pass);
  EXPECT_EQ(f.eps, 0.0);

  const HypothesisReport p = check_condition_A(BoundaryMap::linear(zero(2), 0.1 * a), g, geom, 0.25);
  EXPECT_NEAR(p.lhs_condition, 0.18, 1e-12);
  EXPECT_TRUE(p.pass);
  EXPECT_NEAR(p.eps, 0.82, 1e-12);

  EXPECT_THROW(check_condition_A(BoundaryMap::linear(zero(2), a), g, geom, 0.5), PreconditionError);
  EXPECT_THROW(check_condition_A(BoundaryMap::linear(zero(2), a), g, geom, 0.0), PreconditionError);
}

TEST(ConditionA, FrozenTrigonometricBall) {
  const Grid g = build_grid(DomainSpec::ball(zero(2), 1.0), 1.0 / 32);
  const BoundaryMap psi = BoundaryMap::trigonometric(vec({0.03}), {vec({1.0, 0.7})}, vec({0.3}), vec({0.0}));
  const HypothesisReport r = check_condition_A(psi, g, estimate_c0_eta0(g.spec), 0.18);
  // analytic oracles for the three norms over the disc and the band |x| > 0.82
  const double k = std::sqrt(1.49);
  const double w = 0.03 * (std::sin(0.3 + k) - std::sin(0.3 - k));
  EXPECT_NEAR(r.w_psi, w, 1e-5);
  EXPECT_LE(r.w_psi, w + 1e-12);
  EXPECT_NEAR(r.sup_dpsi_band, 0.03 * k, 1e-5);
  EXPECT_NEAR(r.sup_d2psi_band, 0.03 * 1.49 * std::sin(0.3 + k), 1e-5);
  const double raw = r.w_psi / 0.18 + r.sup_dpsi_band + 64.0 * 0.18 * r.sup_d2psi_band;
  EXPECT_NEAR(r.lhs_condition - r.sampling_gap, raw, 1e-12);
  EXPECT_NEAR(r.lhs_condition, 0.85002895434001247, 1e-12);
  EXPECT_TRUE(r.pass);
}

TEST(ConditionA, ScalingIsMonotone) {
  const Grid g = build_grid(DomainSpec::ball(zero(2), 1.0), 1.0 / 32);
  const BoundaryGeometry geom = estimate_c0_eta0(g.spec);
  const BoundaryMap psi = families()[3];
  const HypothesisReport full = check_condition_A(psi, g, geom, 0.2);
  for (double s : {0.5, 0.1}) {
    const HypothesisReport r = check_condition_A(psi.scaled(s), g, geom, 0.2);
    EXPECT_NEAR(r.lhs_condition, s * full.lhs_condition, 1e-12);
    if (full.pass) EXPECT_TRUE(r.pass);
  }
}

TEST(ConditionA, ImpliesGradientBoundBelowOne) {
  const Grid g = build_grid(DomainSpec::annulus(zero(2), 0.5, 1.0), 1.0 / 32);
  const BoundaryGeometry geom = estimate_c0_eta0(g.spec);
  const BoundaryMap psi = families()[3].scaled(0.02);
  const double delta = 0.9 * delta0(geom, 1.0);
  const HypothesisReport r = check_condition_A(psi, g, geom, delta);
  ASSERT_TRUE(r.pass);
  const double b = boundary_gradient_bound({r.w_psi, r.sup_dpsi_band, r.sup_d2psi_band}, delta, 1.0, 2);
  EXPECT_LT(b, 1.0);
  EXPECT_LE(b, r.lhs_condition);
}

TEST(ConditionB, Examples) {
  const Grid g = build_grid(DomainSpec::ball(zero(2), 1.0), 1.0 / 32);
  const BoundaryGeometry geom = estimate_c0_eta0(g.spec);

  const HypothesisReport c = check_condition_B(BoundaryMap::constant(2, vec({1.0})), g, geom, 0.2, 0.5);
  EXPECT_EQ(c.lhs_condition, 0.0);
  EXPECT_TRUE(c.pass);
  EXPECT_EQ(c.threshold, 0.5);

  const BoundaryMap trig = BoundaryMap::trigonometric(vec({0.05, 0.02}), {vec({2.0, 1.0}), vec({-1.0, 3.0})},
                                                      vec({0.1, -0.4}), zero(2));
  const HypothesisReport t = check_condition_B(trig, g, geom, 0.2, 0.3);
  const double raw = t.w_psi / 0.2 + t.sup_dpsi_global + 64.0 * 0.2 * t.sup_d2psi_global;
  EXPECT_NEAR(t.lhs_condition - t.sampling_gap, raw, 1e-12);
  EXPECT_NEAR(t.lhs_condition, 3.8127460042222032, 1e-12);
  EXPECT_FALSE(t.pass);

  // lhs = 0.125 / 0.25 + 0.0625 = 0.5625 = 1 - 0.4375 exactly: strict inequality fails
  Mat a(1, 2);
  a << 0.0625, 0.0;
  const HypothesisReport e = check_condition_B(BoundaryMap::linear(zero(1), a), g, geom, 0.25, 0.4375);
  EXPECT_EQ(e.lhs_condition, 0.5625);
  EXPECT_EQ(e.threshold, 0.5625);
  EXPECT_FALSE(e.pass);

  EXPECT_THROW(check_condition_B(trig, g, geom, 0.2, 1.0), PreconditionError);
}

TEST(BoundaryGradientBound, Examples) {
  EXPECT_NEAR(boundary_gradient_bound({0.1, 0.3, 0.05}, 0.2, 1.0, 2), 1.44, 1e-12);
  EXPECT_EQ(boundary_gradient_bound({0.0, 0.0, 0.0}, 0.2, 1.0, 2), 0.0);
  const double t1 = boundary_gradient_bound({0.0, 0.0, 0.05}, 0.2, 1.0, 2);
  const double t3 = boundary_gradient_bound({0.0, 0.0, 0.05}, 0.2, 3.0, 2);
  EXPECT_NEAR(t3 / t1, 2.0, 1e-15);
  EXPECT_NEAR(boundary_gradient_bound({0.0, 0.0, 0.05}, 0.2, 1.0, 2, true), 0.25 * t1, 1e-15);
}

TEST(BarrierNu, Examples) {
  EXPECT_NEAR(barrier_nu(0.7, 0.1, 1.0, 0.0, 2, 0.5), 4 * 2 * 0.01 * 2 * 0.5, 1e-15);
  EXPECT_EQ(barrier_nu(0.7, 0.1, 1.0, 0.0, 2, 0.0), 0.0);
  EXPECT_NEAR(barrier_nu(0.1, 1.0 / 32, 1.0, 1.0, 2, 1.0), 0.0541666666666666667, 1e-15);
  EXPECT_THROW(barrier_nu(0.1, 0.2, 1.0, 1.0, 2, 1.0), PreconditionError);
}

TEST(HypothesisReport, TextListsEveryField) {
  const Grid g = build_grid(DomainSpec::ball(zero(2), 1.0), 1.0 / 16);
  const std::string text =
      check_condition_A(BoundaryMap::constant(2, vec({1.0})), g, estimate_c0_eta0(g.spec), 0.2).to_text();
  for (const char* key : {"w_psi", "sup_dpsi_band", "sup_d2psi_band", "sup_dpsi_global", "delta", "delta0", "lhs",
                          "pass", "eps"})
    EXPECT_NE(text.find(std::string(key) + " = "), std::string::npos) << key;
}
