#pragma once

// F-functional, backward heat kernel and Gaussian density quadrature on
// discrete graphs, parabolic dilation and the half-space reflection.

#include "mssflow/flow.hpp"

#include <functional>

namespace mssflow {

struct DensityQuery {
  Vec center;  // Y in R^{n+m}
  double time_gap = 0.0;
  double cutoff = 1.0;       // support radius of phi
  double truncation = 0.0;   // quadrature radius; 0 selects 10 sqrt(time_gap)

  /// Throws PreconditionError unless time_gap > 0 and truncation >= 6 sqrt(time_gap).
  void validate() const;
  [[nodiscard]] double effective_truncation() const;
};

/// Quintic smoothstep: 1 on [0, 1/2], 0 from 1 on, non-increasing.
double phi_profile(double r);

/// (4 pi gap)^{-n/2} exp(-|y - Y|^2 / (4 gap)) for an n-dimensional surface.
double backward_kernel(const Vec& y, const DensityQuery& q, int n);

/// sum exp(-c |z|^2 / 4) sqrt(det g) w over in-domain nodes, z = (x, f(x)).
/// c = 0 reproduces the area monitor bit for bit.
double f_functional(const GraphState& state, double c);

/// Tail mass of the kernel that falls outside the sampled region through
/// artificial cuts (open box faces, the truncation sphere of an exterior domain).
double coverage_leak(const GraphState& state, const DensityQuery& q);

/// sum phi(|y - Y| / cutoff) rho(y) sqrt(det g) w over in-domain nodes with
/// |y - Y| within the truncation radius. Throws UndercoverageError when the
/// coverage leak exceeds 1e-8.
double gaussian_density(const GraphState& state, const DensityQuery& q,
                        const std::function<double(double)>& phi = phi_profile);

/// sup over interior nodes of |H + (c/2) F^perp|
double shrinker_residual_sup(const GraphState& state, double c);

/// x -> iota (x - Y_base), f -> iota (f - Y_fiber), t -> iota^2 (t - T).
GraphState parabolic_dilate(const GraphState& state, const Vec& y, double big_t, double iota);

struct ReflectResult {
  GraphState state;
  double trace_max = 0.0;               // sup |f| on the mirror hyperplane
  double second_derivative_jump = 0.0;  // sup |[d^2 f / dx_n^2]| across it
};

/// Odd extension across {x_n = 0} of a state on a box with lower x_n = 0:
/// (x', -x_n) -> -f(x', x_n). Throws when the trace exceeds 1e-10.
ReflectResult reflect_halfspace(const GraphState& state);

}  // namespace mssflow
