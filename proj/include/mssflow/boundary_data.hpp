#pragma once

// Analytic boundary data psi : E-bar -> R^m with exact jets, the sup-norms
// entering the smallness hypotheses, and the boundary-gradient machinery
// built on the log-distance barrier.

#include "mssflow/domain.hpp"
#include "mssflow/linalg_jet.hpp"

#include <string>
#include <variant>
#include <vector>

namespace mssflow {

struct ConstantFamily {
  Vec values;
};

/// psi(x) = offset + matrix * x
struct LinearFamily {
  Vec offset;
  Mat matrix;
};

struct Monomial {
  double coeff = 0.0;
  std::vector<int> powers;
};

/// Per-component polynomials of total degree <= 4.
struct PolynomialFamily {
  std::vector<std::vector<Monomial>> components;
};

/// psi^A(x) = offset_A + amplitude_A * sin(<wave_A, x> + phase_A)
struct TrigonometricFamily {
  Vec amplitude;
  Vec phase;
  Vec offset;
  std::vector<Vec> wave;
};

/// scale times a homogeneous extension of a base map between spheres.
/// Power: (Re z^k, Im z^k) with z = (x_0 - c_0) + i (x_1 - c_1), extending
/// theta -> (cos k theta, sin k theta); its graph is a complex curve.
/// Hopf: the quadratic extension of the Hopf map S^3 -> S^2 (n = 4, m = 3).
struct LawsonOssermanFamily {
  enum class Base { Power, Hopf };
  double scale = 1.0;
  int frequency = 2;
  Vec center;
  Base base = Base::Power;
};

/// psi^A(x) = amplitude_A * <p_A, x - c> / |x - c|^n, harmonic off c.
struct DipoleFamily {
  Vec amplitude;
  std::vector<Vec> direction;
  Vec center;
};

class BoundaryMap {
 public:
  using Family = std::variant<ConstantFamily, LinearFamily, PolynomialFamily, TrigonometricFamily,
                              LawsonOssermanFamily, DipoleFamily>;

  BoundaryMap(int n, int m, Family family);

  static BoundaryMap constant(int n, const Vec& values);
  static BoundaryMap linear(const Vec& offset, const Mat& matrix);
  static BoundaryMap polynomial(int n, std::vector<std::vector<Monomial>> components);
  static BoundaryMap trigonometric(const Vec& amplitude, std::vector<Vec> wave, const Vec& phase, const Vec& offset);
  static BoundaryMap lawson_osserman(int n, double scale, int frequency, const Vec& center);
  static BoundaryMap lawson_osserman_hopf(double scale, const Vec& center);
  static BoundaryMap dipole(const Vec& amplitude, std::vector<Vec> direction, const Vec& center);

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int m() const { return m_; }
  [[nodiscard]] const Family& family() const { return family_; }
  [[nodiscard]] std::string family_name() const;

  [[nodiscard]] Vec value(const Vec& x) const;
  [[nodiscard]] PointJet jet(const Vec& x) const;

  /// s * psi
  [[nodiscard]] BoundaryMap scaled(double s) const;

 private:
  int n_;
  int m_;
  Family family_;
};

/// Unit-speed norm sup_{|tau|=1} |D^2 psi(tau, tau)| of the stacked Hessians.
/// m = 1 is an exact eigenvalue problem; m >= 2 uses shifted power iteration
/// from 32 fixed starting directions.
double hessian_norm(const PointJet& jet);
double hessian_norm_component(const Mat& hess);
/// Largest |D^2 psi(tau, tau)| over a fixed dense set of 10^4 unit directions.
double hessian_norm_sampled(const PointJet& jet);

enum class Region { Band, All };

struct SupNorms {
  double dpsi = 0.0;
  double d2psi = 0.0;
  Vec d2psi_component;   // per-component |D^2 psi^A|
  double gap_dpsi = 0.0;  // refinement pass minus grid pass (>= 0)
  double gap_d2psi = 0.0;
};

/// Max over components of sup - inf, over grid nodes, boundary samples and a
/// half-spacing refinement.
double oscillation(const BoundaryMap& psi, const Grid& grid);
/// Per-component oscillation omega^A.
Vec component_oscillation(const BoundaryMap& psi, const Grid& grid);

/// Sup of |D psi| (largest singular value) and |D^2 psi| over the region
/// (band: d < delta). Throws when the dense direction check beats power
/// iteration by more than 1e-6.
SupNorms sup_norms(const BoundaryMap& psi, const Grid& grid, Region region, double delta = 0.0);

/// Largest admissible band width for the barrier argument.
double delta0(const BoundaryGeometry& geom, double mu);

struct HypothesisReport {
  char condition = 'A';
  double w_psi = 0.0;
  double sup_dpsi_band = 0.0;
  double sup_d2psi_band = 0.0;
  Vec d2psi_band_component;  // condition A only
  double sup_dpsi_global = 0.0;
  double sup_d2psi_global = 0.0;
  double delta = 0.0;
  double delta0 = 0.0;
  double c = 0.0;           // condition B only
  double sampling_gap = 0.0;  // conservative increment already included in lhs
  double lhs_condition = 0.0;
  double threshold = 1.0;  // 1 for A, 1 - c for B
  bool pass = false;
  double eps = 0.0;  // 1 - lhs when positive

  [[nodiscard]] std::string to_text() const;
};

HypothesisReport check_condition_A(const BoundaryMap& psi, const Grid& grid, const BoundaryGeometry& geom,
                                   double delta);
HypothesisReport check_condition_B(const BoundaryMap& psi, const Grid& grid, const BoundaryGeometry& geom,
                                   double delta, double c);

struct PsiNorms {
  double w = 0.0;
  double dpsi = 0.0;
  double d2psi = 0.0;
};

/// w/delta + |D psi| + K n (1 + mu) delta |D^2 psi| with K = 16, or K = 4 for
/// the ball-only variant.
double boundary_gradient_bound(const PsiNorms& norms, double delta, double mu, int n, bool ball_variant = false);

/// Coefficient of the log term of the barrier for one component.
double barrier_nu(double omega, double delta, double mu, double c0, int n, double sup_d2psi);

}  // namespace mssflow
