#include "mssflow/boundary_data.hpp"

#include "mssflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace mssflow {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int family_m(const BoundaryMap::Family& f) {
  return std::visit(overloaded{
                        [](const ConstantFamily& c) { return static_cast<int>(c.values.size()); },
                        [](const LinearFamily& l) { return static_cast<int>(l.matrix.rows()); },
                        [](const PolynomialFamily& p) { return static_cast<int>(p.components.size()); },
                        [](const TrigonometricFamily& t) { return static_cast<int>(t.amplitude.size()); },
                        [](const LawsonOssermanFamily& lo) { return lo.base == LawsonOssermanFamily::Base::Hopf ? 3 : 2; },
                        [](const DipoleFamily& d) { return static_cast<int>(d.amplitude.size()); },
                    },
                    f);
}

double ipow(double x, int p) {
  double r = 1.0;
  for (int k = 0; k < p; ++k) r *= x;
  return r;
}

// Fixed unit directions: starting points for power iteration and the dense check.
std::vector<Vec> fixed_directions(int n, int count, bool dense) {
  std::vector<Vec> dirs;
  dirs.reserve(count);
  if (n == 1) {
    Vec v(1);
    v(0) = 1.0;
    dirs.push_back(v);
    return dirs;
  }
  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double t = std::numbers::pi * k / count;
      Vec v(2);
      v << std::cos(t), std::sin(t);
      dirs.push_back(v);
    }
    return dirs;
  }
  if (n == 3 && dense) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - (k + 0.5) * 2.0 / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vec v(3);
      v << r * std::cos(golden * k), r * std::sin(golden * k), z;
      dirs.push_back(v);
    }
    return dirs;
  }
  for (int a = 0; a < n && static_cast<int>(dirs.size()) < count; ++a) {
    Vec v = Vec::Zero(n);
    v(a) = 1.0;
    dirs.push_back(v);
  }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  while (static_cast<int>(dirs.size()) < count) {
    Vec v(n);
    for (int a = 0; a < n; ++a) v(a) = normal(rng);
    dirs.push_back(v.normalized());
  }
  return dirs;
}

const std::vector<Vec>& start_directions(int n) {
  static thread_local std::vector<std::vector<Vec>> cache(kMaxDim + 1);
  if (cache[n].empty()) cache[n] = fixed_directions(n, 32, false);
  return cache[n];
}

const std::vector<Vec>& dense_directions(int n) {
  static thread_local std::vector<std::vector<Vec>> cache(kMaxDim + 1);
  if (cache[n].empty()) cache[n] = fixed_directions(n, 10000, true);
  return cache[n];
}

double stacked_value(const PointJet& jet, const Vec& tau) {
  double s = 0.0;
  for (int a = 0; a < jet.m(); ++a) {
    const double q = tau.dot(jet.hess[a] * tau);
    s += q * q;
  }
  return s;
}

// Sample positions: in-domain lattice nodes plus boundary samples, or the
// half-spacing refinement of the lattice plus boundary samples.
std::vector<Vec> sample_points(const Grid& grid, bool refined) {
  std::vector<Vec> pts;
  if (!refined) {
    for (int i = 0; i < grid.node_count(); ++i)
      if (grid.in_domain(i)) pts.push_back(grid.position(i));
  } else {
    const int n = grid.n;
    std::vector<int> fdims(n);
    long total = 1;
    for (int a = 0; a < n; ++a) {
      fdims[a] = 2 * grid.dims[a] - 1;
      total *= fdims[a];
    }
    for (long idx = 0; idx < total; ++idx) {
      long rest = idx;
      Vec x(n);
      for (int a = 0; a < n; ++a) {
        x(a) = grid.origin(a) + (rest % fdims[a]) * 0.5 * grid.spacing(a);
        rest /= fdims[a];
      }
      if (grid.spec.signed_distance(x) >= -1e-12) pts.push_back(x);
    }
  }
  for (const auto& s : grid.samples) pts.push_back(s.x);
  return pts;
}

struct Extremes {
  Vec lo;
  Vec hi;
};

Extremes value_extremes(const BoundaryMap& psi, const std::vector<Vec>& pts) {
  Extremes e;
  e.lo = Vec::Constant(psi.m(), std::numeric_limits<double>::infinity());
  e.hi = Vec::Constant(psi.m(), -std::numeric_limits<double>::infinity());
  for (const auto& x : pts) {
    const Vec v = psi.value(x);
    e.lo = e.lo.cwiseMin(v);
    e.hi = e.hi.cwiseMax(v);
  }
  return e;
}

struct RegionSup {
  double dpsi = 0.0;
  double d2psi = 0.0;
  Vec d2comp;
  Vec argmax_d2;
  bool any = false;
};

void accumulate(RegionSup& r, const Vec& x, double dpsi, double d2, const Vec& comp) {
  r.any = true;
  r.dpsi = std::max(r.dpsi, dpsi);
  if (d2 > r.d2psi || r.argmax_d2.size() == 0) {
    if (d2 >= r.d2psi) r.argmax_d2 = x;
    r.d2psi = std::max(r.d2psi, d2);
  }
  r.d2comp = r.d2comp.cwiseMax(comp);
}

// Global and band sups in one sweep over the points.
std::pair<RegionSup, RegionSup> region_sup(const BoundaryMap& psi, const Grid& grid, const std::vector<Vec>& pts,
                                           bool want_all, double delta) {
  RegionSup all, band;
  all.d2comp = band.d2comp = Vec::Zero(psi.m());
  Vec comp(psi.m());
  for (const auto& x : pts) {
    const bool in_band = delta > 0.0 && grid.spec.signed_distance(x) < delta;
    if (!want_all && !in_band) continue;
    const PointJet jet = psi.jet(x);
    const double dpsi = singular_values(jet.jac).lambdas(0);
    const double d2 = hessian_norm(jet);
    for (int a = 0; a < psi.m(); ++a) comp(a) = hessian_norm_component(jet.hess[a]);
    if (want_all) accumulate(all, x, dpsi, d2, comp);
    if (in_band) accumulate(band, x, dpsi, d2, comp);
  }
  return {all, band};
}

struct OscillationParts {
  Vec coarse;
  Vec combined;
};

OscillationParts oscillation_parts(const BoundaryMap& psi, const Grid& grid) {
  const Extremes c = value_extremes(psi, sample_points(grid, false));
  const Extremes f = value_extremes(psi, sample_points(grid, true));
  OscillationParts o;
  o.coarse = c.hi - c.lo;
  o.combined = c.hi.cwiseMax(f.hi) - c.lo.cwiseMin(f.lo);
  return o;
}

}  // namespace

BoundaryMap::BoundaryMap(int n, int m, Family family) : n_(n), m_(m), family_(std::move(family)) {
  if (n_ < 1 || n_ > kMaxDim || m_ < 1 || m_ > kMaxDim) throw PreconditionError("boundary map needs 1 <= n, m <= 8");
  if (family_m(family_) != m_) throw PreconditionError("boundary map component count mismatch");
  std::visit(overloaded{
                 [](const ConstantFamily&) {},
                 [&](const LinearFamily& l) {
                   if (l.matrix.cols() != n_ || l.offset.size() != m_)
                     throw PreconditionError("linear map has wrong shape");
                 },
                 [&](const PolynomialFamily& p) {
                   for (const auto& comp : p.components)
                     for (const auto& mono : comp) {
                       if (static_cast<int>(mono.powers.size()) != n_)
                         throw PreconditionError("monomial needs one exponent per coordinate");
                       int deg = 0;
                       for (int e : mono.powers) {
                         if (e < 0) throw PreconditionError("negative monomial exponent");
                         deg += e;
                       }
                       if (deg > 4) throw PreconditionError("polynomial degree exceeds 4");
                     }
                 },
                 [&](const TrigonometricFamily& t) {
                   if (static_cast<int>(t.wave.size()) != m_ || t.phase.size() != m_ || t.offset.size() != m_)
                     throw PreconditionError("trigonometric map has wrong shape");
                   for (const auto& k : t.wave)
                     if (k.size() != n_) throw PreconditionError("wave vector needs dimension n");
                 },
                 [&](const LawsonOssermanFamily& lo) {
                   if (n_ < 2) throw PreconditionError("Lawson-Osserman data needs n >= 2");
                   if (lo.center.size() != n_) throw PreconditionError("center needs dimension n");
                   if (lo.frequency < 1) throw PreconditionError("frequency must be positive");
                   if (lo.base == LawsonOssermanFamily::Base::Hopf && n_ != 4)
                     throw PreconditionError("the Hopf base map needs n = 4");
                 },
                 [&](const DipoleFamily& d) {
                   if (static_cast<int>(d.direction.size()) != m_ || d.center.size() != n_)
                     throw PreconditionError("dipole map has wrong shape");
                   for (const auto& p : d.direction)
                     if (p.size() != n_) throw PreconditionError("dipole direction needs dimension n");
                 },
             },
             family_);
}

BoundaryMap BoundaryMap::constant(int n, const Vec& values) {
  return BoundaryMap(n, static_cast<int>(values.size()), ConstantFamily{values});
}

BoundaryMap BoundaryMap::linear(const Vec& offset, const Mat& matrix) {
  return BoundaryMap(static_cast<int>(matrix.cols()), static_cast<int>(matrix.rows()), LinearFamily{offset, matrix});
}

BoundaryMap BoundaryMap::polynomial(int n, std::vector<std::vector<Monomial>> components) {
  const int m = static_cast<int>(components.size());
  return BoundaryMap(n, m, PolynomialFamily{std::move(components)});
}

BoundaryMap BoundaryMap::trigonometric(const Vec& amplitude, std::vector<Vec> wave, const Vec& phase,
                                       const Vec& offset) {
  const int n = wave.empty() ? 0 : static_cast<int>(wave.front().size());
  return BoundaryMap(n, static_cast<int>(amplitude.size()), TrigonometricFamily{amplitude, phase, offset, std::move(wave)});
}

BoundaryMap BoundaryMap::lawson_osserman(int n, double scale, int frequency, const Vec& center) {
  return BoundaryMap(n, 2, LawsonOssermanFamily{scale, frequency, center, LawsonOssermanFamily::Base::Power});
}

BoundaryMap BoundaryMap::lawson_osserman_hopf(double scale, const Vec& center) {
  return BoundaryMap(4, 3, LawsonOssermanFamily{scale, 2, center, LawsonOssermanFamily::Base::Hopf});
}

BoundaryMap BoundaryMap::dipole(const Vec& amplitude, std::vector<Vec> direction, const Vec& center) {
  return BoundaryMap(static_cast<int>(center.size()), static_cast<int>(amplitude.size()),
                     DipoleFamily{amplitude, std::move(direction), center});
}

std::string BoundaryMap::family_name() const {
  return std::visit(overloaded{
                        [](const ConstantFamily&) { return std::string("constant"); },
                        [](const LinearFamily&) { return std::string("linear"); },
                        [](const PolynomialFamily&) { return std::string("polynomial"); },
                        [](const TrigonometricFamily&) { return std::string("trigonometric"); },
                        [](const LawsonOssermanFamily&) { return std::string("lawson_osserman_scaled"); },
                        [](const DipoleFamily&) { return std::string("dipole"); },
                    },
                    family_);
}

Vec BoundaryMap::value(const Vec& x) const { return jet(x).value; }

PointJet BoundaryMap::jet(const Vec& x) const {
  PointJet jet = PointJet::zero(n_, m_);
  jet.x = x;
  const int n = n_;
  std::visit(
      overloaded{
          [&](const ConstantFamily& c) { jet.value = c.values; },
          [&](const LinearFamily& l) {
            jet.value = l.offset + l.matrix * x;
            jet.jac = l.matrix;
          },
          [&](const PolynomialFamily& p) {
            for (int a = 0; a < m_; ++a) {
              for (const auto& mono : p.components[a]) {
                double v = mono.coeff;
                for (int i = 0; i < n; ++i) v *= ipow(x(i), mono.powers[i]);
                jet.value(a) += v;
                for (int i = 0; i < n; ++i) {
                  if (mono.powers[i] == 0) continue;
                  double d = mono.coeff * mono.powers[i];
                  for (int k = 0; k < n; ++k) d *= ipow(x(k), k == i ? mono.powers[k] - 1 : mono.powers[k]);
                  jet.jac(a, i) += d;
                  for (int j = 0; j < n; ++j) {
                    std::vector<int> pw = mono.powers;
                    double c2 = mono.coeff * pw[i];
                    --pw[i];
                    if (pw[j] == 0) continue;
                    c2 *= pw[j];
                    --pw[j];
                    for (int k = 0; k < n; ++k) c2 *= ipow(x(k), pw[k]);
                    jet.hess[a](i, j) += c2;
                  }
                }
              }
            }
          },
          [&](const TrigonometricFamily& t) {
            for (int a = 0; a < m_; ++a) {
              const double arg = t.wave[a].dot(x) + t.phase(a);
              const double s = std::sin(arg);
              const double c = std::cos(arg);
              jet.value(a) = t.offset(a) + t.amplitude(a) * s;
              jet.jac.row(a) = t.amplitude(a) * c * t.wave[a].transpose();
              jet.hess[a] = -t.amplitude(a) * s * (t.wave[a] * t.wave[a].transpose());
            }
          },
          [&](const LawsonOssermanFamily& lo) {
            if (lo.base == LawsonOssermanFamily::Base::Hopf) {
              // psi^A = scale * y^T Q_A y
              const Vec y = x - lo.center;
              Mat q[3];
              for (auto& qa : q) qa = Mat::Zero(4, 4);
              q[0].diagonal() << 1.0, 1.0, -1.0, -1.0;
              q[1](0, 2) = q[1](2, 0) = q[1](1, 3) = q[1](3, 1) = 1.0;
              q[2](1, 2) = q[2](2, 1) = 1.0;
              q[2](0, 3) = q[2](3, 0) = -1.0;
              for (int a = 0; a < 3; ++a) {
                const Vec qy = q[a] * y;
                jet.value(a) = lo.scale * y.dot(qy);
                jet.jac.row(a) = 2.0 * lo.scale * qy.transpose();
                jet.hess[a] = 2.0 * lo.scale * q[a];
              }
              return;
            }
            using C = std::complex<double>;
            const C z(x(0) - lo.center(0), x(1) - lo.center(1));
            const int k = lo.frequency;
            const C zk = std::pow(z, k);
            const C d1 = static_cast<double>(k) * (k >= 1 ? std::pow(z, k - 1) : C(0.0));
            const C d2 = static_cast<double>(k * (k - 1)) * (k >= 2 ? std::pow(z, k - 2) : C(0.0));
            const C I(0.0, 1.0);
            const C dx = d1, dy = I * d1;
            const C dxx = d2, dxy = I * d2, dyy = -d2;
            const double s = lo.scale;
            jet.value << s * zk.real(), s * zk.imag();
            jet.jac(0, 0) = s * dx.real();
            jet.jac(0, 1) = s * dy.real();
            jet.jac(1, 0) = s * dx.imag();
            jet.jac(1, 1) = s * dy.imag();
            jet.hess[0](0, 0) = s * dxx.real();
            jet.hess[0](0, 1) = jet.hess[0](1, 0) = s * dxy.real();
            jet.hess[0](1, 1) = s * dyy.real();
            jet.hess[1](0, 0) = s * dxx.imag();
            jet.hess[1](0, 1) = jet.hess[1](1, 0) = s * dxy.imag();
            jet.hess[1](1, 1) = s * dyy.imag();
          },
          [&](const DipoleFamily& d) {
            const Vec y = x - d.center;
            const double r2 = y.squaredNorm();
            const double r = std::sqrt(r2);
            const double rn = std::pow(r, n);
            for (int a = 0; a < m_; ++a) {
              const Vec& p = d.direction[a];
              const double amp = d.amplitude(a);
              const double py = p.dot(y);
              jet.value(a) = amp * py / rn;
              for (int i = 0; i < n; ++i) {
                jet.jac(a, i) = amp * (p(i) / rn - n * py * y(i) / (rn * r2));
                for (int j = 0; j < n; ++j) {
                  double v = -n * (p(i) * y(j) + p(j) * y(i)) / (rn * r2);
                  if (i == j) v -= n * py / (rn * r2);
                  v += n * (n + 2.0) * py * y(i) * y(j) / (rn * r2 * r2);
                  jet.hess[a](i, j) = amp * v;
                }
              }
            }
          },
      },
      family_);
  return jet;
}

BoundaryMap BoundaryMap::scaled(double s) const {
  Family f = family_;
  std::visit(overloaded{
                 [&](ConstantFamily& c) { c.values *= s; },
                 [&](LinearFamily& l) {
                   l.offset *= s;
                   l.matrix *= s;
                 },
                 [&](PolynomialFamily& p) {
                   for (auto& comp : p.components)
                     for (auto& mono : comp) mono.coeff *= s;
                 },
                 [&](TrigonometricFamily& t) {
                   t.amplitude *= s;
                   t.offset *= s;
                 },
                 [&](LawsonOssermanFamily& lo) { lo.scale *= s; },
                 [&](DipoleFamily& d) { d.amplitude *= s; },
             },
             f);
  return BoundaryMap(n_, m_, std::move(f));
}

double hessian_norm_component(const Mat& hess) {
  const SymmetricEigen e = symmetric_eigen(hess);
  return std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
}

double hessian_norm(const PointJet& jet) {
  const int m = jet.m();
  const int n = jet.n();
  if (m == 1) return hessian_norm_component(jet.hess[0]);
  double scale = 0.0;
  for (int a = 0; a < m; ++a) scale += jet.hess[a].squaredNorm();
  if (scale == 0.0) return 0.0;
  // Power iteration tau <- normalize(sum_A q_A H_A tau + alpha tau). The shift
  // alpha is zero unless the objective drops, then set from the local curvature
  // and doubled until it rises again.
  const auto& starts = start_directions(n);
  const int count = static_cast<int>(starts.size());
  std::vector<double> initial(count);
  for (int k = 0; k < count; ++k) initial[k] = stacked_value(jet, starts[k]);
  double best = 0.0;
  for (int k = 0; k < count; ++k) {
    // On the circle the starts are ordered by angle; only local maxima can lead uphill to new peaks.
    if (n == 2 && (initial[k] < initial[(k + count - 1) % count] || initial[k] < initial[(k + 1) % count])) continue;
    Vec tau = starts[k];
    double value = initial[k];
    for (int it = 0; it < 500; ++it) {
      Vec grad = Vec::Zero(n);
      for (int a = 0; a < m; ++a) {
        const Vec ht = jet.hess[a] * tau;
        grad += tau.dot(ht) * ht;
      }
      Vec next = grad.normalized();
      double nv = stacked_value(jet, next);
      if (nv < value) {
        Mat curv = Mat::Zero(n, n);
        for (int a = 0; a < m; ++a) {
          const Vec ht = jet.hess[a] * tau;
          curv += 2.0 * ht * ht.transpose() + tau.dot(ht) * jet.hess[a];
        }
        double alpha = std::max(0.0, -symmetric_eigen(curv).values(n - 1)) + 1e-3 * scale;
        for (int tries = 0; tries < 60; ++tries) {
          next = (grad + alpha * tau).normalized();
          nv = stacked_value(jet, next);
          if (nv >= value) break;
          alpha *= 2.0;
        }
        if (nv < value) break;
      }
      const double change = (next - tau).norm();
      tau = next;
      const double gain = nv - value;
      value = nv;
      if (change < 1e-9 || gain <= 1e-16 * value) break;
    }
    best = std::max(best, value);
  }
  return std::sqrt(best);
}

double hessian_norm_sampled(const PointJet& jet) {
  double best = 0.0;
  for (const Vec& tau : dense_directions(jet.n())) best = std::max(best, stacked_value(jet, tau));
  return std::sqrt(best);
}

Vec component_oscillation(const BoundaryMap& psi, const Grid& grid) { return oscillation_parts(psi, grid).combined; }

double oscillation(const BoundaryMap& psi, const Grid& grid) { return component_oscillation(psi, grid).maxCoeff(); }

namespace {

SupNorms combine(const BoundaryMap& psi, const RegionSup& coarse, const RegionSup& fine) {
  SupNorms out;
  out.dpsi = std::max(coarse.dpsi, fine.dpsi);
  out.d2psi = std::max(coarse.d2psi, fine.d2psi);
  out.d2psi_component = coarse.d2comp.cwiseMax(fine.d2comp);
  out.gap_dpsi = std::max(0.0, fine.dpsi - coarse.dpsi);
  out.gap_d2psi = std::max(0.0, fine.d2psi - coarse.d2psi);
  const Vec& where = fine.d2psi >= coarse.d2psi ? fine.argmax_d2 : coarse.argmax_d2;
  if (where.size() > 0 && psi.m() > 1) {
    const double dense = hessian_norm_sampled(psi.jet(where));
    if (dense - out.d2psi > 1e-6)
      throw Error("|D^2 psi| power iteration disagrees with dense direction sampling");
  }
  return out;
}

// (global, band) norms; the band part is empty when delta is 0.
std::pair<SupNorms, SupNorms> sup_norms_both(const BoundaryMap& psi, const Grid& grid, bool want_all, double delta) {
  if (psi.n() != grid.n) throw PreconditionError("boundary map and grid dimensions differ");
  const auto coarse = region_sup(psi, grid, sample_points(grid, false), want_all, delta);
  const auto fine = region_sup(psi, grid, sample_points(grid, true), want_all, delta);
  std::pair<SupNorms, SupNorms> out;
  if (want_all) out.first = combine(psi, coarse.first, fine.first);
  if (delta > 0.0) out.second = combine(psi, coarse.second, fine.second);
  return out;
}

}  // namespace

SupNorms sup_norms(const BoundaryMap& psi, const Grid& grid, Region region, double delta) {
  if (region == Region::All) return sup_norms_both(psi, grid, true, 0.0).first;
  if (!(delta > 0.0)) throw PreconditionError("band sup needs delta > 0");
  return sup_norms_both(psi, grid, false, delta).second;
}

double delta0(const BoundaryGeometry& geom, double mu) {
  if (!(mu >= 0.0)) throw PreconditionError("mu must be non-negative");
  if (geom.c0 == 0.0) return geom.eta0;
  return 0.5 * std::min(1.0 / (8.0 * geom.c0 * (1.0 + mu)), geom.eta0);
}

namespace {

HypothesisReport check_condition(const BoundaryMap& psi, const Grid& grid, const BoundaryGeometry& geom,
                                 double delta, char which, double c) {
  HypothesisReport rep;
  rep.condition = which;
  rep.delta = delta;
  rep.c = c;
  rep.delta0 = delta0(geom, 1.0);
  if (!(delta > 0.0 && delta < rep.delta0))
    throw PreconditionError("delta must lie in (0, delta0) = (0, " + std::to_string(rep.delta0) + ")");
  const int n = grid.n;
  const OscillationParts osc = oscillation_parts(psi, grid);
  const double w_coarse = osc.coarse.maxCoeff();
  rep.w_psi = osc.combined.maxCoeff();
  const double gap_w = std::max(0.0, rep.w_psi - w_coarse);

  const auto [global, band] = sup_norms_both(psi, grid, true, which == 'A' ? delta : 0.0);
  rep.sup_dpsi_global = global.dpsi;
  rep.sup_d2psi_global = global.d2psi;

  double raw = 0.0;
  double conservative = 0.0;
  if (which == 'A') {
    rep.sup_dpsi_band = band.dpsi;
    rep.sup_d2psi_band = band.d2psi;
    rep.d2psi_band_component = band.d2psi_component;
    raw = std::max(rep.w_psi / delta + band.dpsi + 32.0 * n * delta * band.d2psi, global.dpsi);
    conservative = std::max((rep.w_psi + gap_w) / delta + band.dpsi + band.gap_dpsi +
                                32.0 * n * delta * (band.d2psi + band.gap_d2psi),
                            global.dpsi + global.gap_dpsi);
    rep.threshold = 1.0;
  } else {
    rep.sup_dpsi_band = global.dpsi;
    rep.sup_d2psi_band = global.d2psi;
    raw = rep.w_psi / delta + global.dpsi + 32.0 * n * delta * global.d2psi;
    conservative = (rep.w_psi + gap_w) / delta + global.dpsi + global.gap_dpsi +
                   32.0 * n * delta * (global.d2psi + global.gap_d2psi);
    rep.threshold = 1.0 - c;
  }
  rep.lhs_condition = conservative;
  rep.sampling_gap = conservative - raw;
  rep.pass = rep.lhs_condition < rep.threshold;
  rep.eps = std::max(0.0, 1.0 - rep.lhs_condition);
  return rep;
}

}  // namespace

HypothesisReport check_condition_A(const BoundaryMap& psi, const Grid& grid, const BoundaryGeometry& geom,
                                   double delta) {
  return check_condition(psi, grid, geom, delta, 'A', 0.0);
}

HypothesisReport check_condition_B(const BoundaryMap& psi, const Grid& grid, const BoundaryGeometry& geom,
                                   double delta, double c) {
  if (!(c > 0.0 && c < 1.0)) throw PreconditionError("condition B needs c in (0, 1)");
  return check_condition(psi, grid, geom, delta, 'B', c);
}

std::string HypothesisReport::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "condition = " << condition << "\n"
     << "w_psi = " << w_psi << "\n"
     << "sup_dpsi_band = " << sup_dpsi_band << "\n"
     << "sup_d2psi_band = " << sup_d2psi_band << "\n"
     << "sup_dpsi_global = " << sup_dpsi_global << "\n"
     << "sup_d2psi_global = " << sup_d2psi_global << "\n"
     << "delta = " << delta << "\n"
     << "delta0 = " << delta0 << "\n";
  if (condition == 'B') os << "c = " << c << "\n";
  os << "sampling_gap = " << sampling_gap << "\n"
     << "lhs = " << lhs_condition << "\n"
     << "threshold = " << threshold << "\n"
     << "pass = " << (pass ? "true" : "false") << "\n"
     << "eps = " << eps << "\n";
  return os.str();
}

double boundary_gradient_bound(const PsiNorms& norms, double delta, double mu, int n, bool ball_variant) {
  if (!(delta > 0.0)) throw PreconditionError("delta must be positive");
  const double k = ball_variant ? 4.0 : 16.0;
  return norms.w / delta + norms.dpsi + k * n * (1.0 + mu) * delta * norms.d2psi;
}

double barrier_nu(double omega, double delta, double mu, double c0, int n, double sup_d2psi) {
  const double denom = 1.0 - 4.0 * c0 * (1.0 + mu) * delta;
  if (!(denom > 0.0)) throw PreconditionError("barrier needs 1 - 4 c0 (1 + mu) delta > 0");
  return 4.0 * (1.0 + mu) * delta * delta / denom * (c0 * omega / delta + n * sup_d2psi);
}

}  // namespace mssflow
