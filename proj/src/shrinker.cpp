#include "mssflow/shrinker.hpp"

#include "mssflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mssflow {

void DensityQuery::validate() const {
  if (!(time_gap > 0.0)) throw PreconditionError("density time gap must be positive");
  if (!(cutoff > 0.0)) throw PreconditionError("density cutoff must be positive");
  if (effective_truncation() < 6.0 * std::sqrt(time_gap))
    throw PreconditionError("truncation radius must be at least 6 sqrt(time_gap)");
}

double DensityQuery::effective_truncation() const {
  return truncation > 0.0 ? truncation : 10.0 * std::sqrt(time_gap);
}

double phi_profile(double r) {
  const double s = std::clamp(2.0 * r - 1.0, 0.0, 1.0);
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double backward_kernel(const Vec& y, const DensityQuery& q, int n) {
  q.validate();
  const double gap = q.time_gap;
  return std::pow(4.0 * std::numbers::pi * gap, -0.5 * n) * std::exp(-(y - q.center).squaredNorm() / (4.0 * gap));
}

namespace {

Vec lift(const GraphState& s, int node) {
  const int n = s.n();
  Vec z(n + s.m);
  z.head(n) = s.grid->position(node);
  for (int a = 0; a < s.m; ++a) z(n + a) = s.f[static_cast<std::size_t>(node) * s.m + a];
  return z;
}

// Chunked sum of weight(node) * sqrt(det g) * w in the same order as the area monitor.
double graph_sum(const GraphState& s, const std::function<double(int, const Vec&)>& weight) {
  const Grid& g = *s.grid;
  const auto nodes = g.domain_nodes();
  std::vector<double> part(kChunks, 0.0);
  parallel_chunks(static_cast<int>(nodes.size()), [&](int c, int b, int e) {
    for (int k = b; k < e; ++k) {
      const int node = nodes[k];
      const Vec z = lift(s, node);
      const double wgt = weight(node, z);
      if (wgt == 0.0) continue;
      const PointJet jet = jet_at(s, node);
      part[c] += wgt * area_element(singular_values(jet.jac).lambdas) * g.weight[node];
    }
  });
  double total = 0.0;
  for (double p : part) total += p;
  return total;
}

}  // namespace

double f_functional(const GraphState& state, double c) {
  if (!(c >= 0.0)) throw PreconditionError("F-functional needs c >= 0");
  return graph_sum(state, [c](int, const Vec& z) { return std::exp(-c * z.squaredNorm() / 4.0); });
}

double coverage_leak(const GraphState& state, const DensityQuery& q) {
  const DomainSpec& spec = state.grid->spec;
  const int n = state.n();
  const double r_eff = std::min(q.cutoff, q.effective_truncation());
  const double scale = 2.0 * std::sqrt(q.time_gap);
  const Vec base = q.center.head(n);
  double leak = 0.0;
  auto add = [&](double a) {
    if (a < r_eff) leak += 0.5 * std::erfc(a / scale);
  };
  if (spec.kind == DomainKind::Box) {
    for (int axis = 0; axis < n; ++axis)
      for (int side = 0; side < 2; ++side) {
        if (!spec.box_face_open(axis, side)) continue;
        add(side ? spec.upper(axis) - base(axis) : base(axis) - spec.lower(axis));
      }
  } else if (spec.kind == DomainKind::Exterior) {
    add(spec.radius - (base - spec.center).norm());
  }
  return leak;
}

double gaussian_density(const GraphState& state, const DensityQuery& q, const std::function<double(double)>& phi) {
  q.validate();
  if (q.center.size() != state.n() + state.m) throw PreconditionError("density center must lie in R^{n+m}");
  const double leak = coverage_leak(state, q);
  if (leak > 1e-8)
    throw UndercoverageError("kernel support leaves the sampled region (tail " + std::to_string(leak) + ")");
  const int n = state.n();
  const double trunc = q.effective_truncation();
  const double norm = std::pow(4.0 * std::numbers::pi * q.time_gap, -0.5 * n);
  return graph_sum(state, [&](int, const Vec& z) {
    const double r2 = (z - q.center).squaredNorm();
    const double r = std::sqrt(r2);
    if (r > trunc) return 0.0;
    return phi(r / q.cutoff) * norm * std::exp(-r2 / (4.0 * q.time_gap));
  });
}

double shrinker_residual_sup(const GraphState& state, double c) {
  double worst = 0.0;
  for (int node : state.grid->interior)
    worst = std::max(worst, shrinker_residual(jet_at(state, node), c).norm());
  return worst;
}

GraphState parabolic_dilate(const GraphState& state, const Vec& y, double big_t, double iota) {
  if (!(iota > 0.0)) throw PreconditionError("dilation factor must be positive");
  const int n = state.n();
  const int m = state.m;
  if (y.size() != n + m) throw PreconditionError("dilation center must lie in R^{n+m}");
  GraphState out = state;
  out.grid = std::make_shared<const Grid>(state.grid->dilated(y.head(n), iota));
  for (std::size_t k = 0; k < out.f.size(); ++k) {
    const int node = static_cast<int>(k / m);
    if (state.grid->in_domain(node)) out.f[k] = iota * (state.f[k] - y(n + static_cast<int>(k % m)));
  }
  for (std::size_t k = 0; k < out.trace.size(); ++k) out.trace[k] = iota * (state.trace[k] - y(n + static_cast<int>(k % m)));
  out.t = iota * iota * (state.t - big_t);
  return out;
}

ReflectResult reflect_halfspace(const GraphState& state) {
  const Grid& g = *state.grid;
  const int n = g.n;
  const int m = state.m;
  const int last = n - 1;
  if (g.spec.kind != DomainKind::Box || g.spec.lower(last) != 0.0)
    throw PreconditionError("reflection needs a box with lower x_n = 0");
  const double h = g.spacing(last);
  const int cells = g.dims[last] - 1;

  ReflectResult res;
  int offset[kMaxDim];
  for (int i = 0; i < g.node_count(); ++i) {
    const auto c = g.coords(i);
    if (c[last] != 0) continue;
    for (int a = 0; a < m; ++a) res.trace_max = std::max(res.trace_max, std::abs(state.f[static_cast<std::size_t>(i) * m + a]));
    if (cells >= 2) {
      for (int k = 0; k < n; ++k) offset[k] = 0;
      offset[last] = 1;
      const int i1 = g.shifted(i, offset);
      offset[last] = 2;
      const int i2 = g.shifted(i, offset);
      for (int a = 0; a < m; ++a) {
        const double f0 = state.f[static_cast<std::size_t>(i) * m + a];
        const double f1 = state.f[static_cast<std::size_t>(i1) * m + a];
        const double f2 = state.f[static_cast<std::size_t>(i2) * m + a];
        res.second_derivative_jump = std::max(res.second_derivative_jump, 2.0 * std::abs(f2 - 2.0 * f1 + f0) / (h * h));
      }
    }
  }
  if (res.trace_max > 1e-10) throw PreconditionError("trace on the mirror hyperplane is not zero");

  DomainSpec spec = g.spec;
  spec.lower(last) = -g.spec.upper(last);
  if (!spec.open_faces.empty()) spec.open_faces[2 * last] = spec.open_faces[2 * last + 1];
  auto doubled = std::make_shared<Grid>(build_grid(spec, h, GridOptions{g.snap_fraction}));
  for (int a = 0; a < n; ++a)
    if (doubled->dims[a] != (a == last ? 2 * cells + 1 : g.dims[a]) ||
        std::abs(doubled->spacing(a) - g.spacing(a)) > 1e-12 * g.spacing(a))
      throw PreconditionError("reflection needs equal spacing on every axis");

  GraphState out;
  out.m = m;
  out.t = state.t;
  out.f.assign(static_cast<std::size_t>(doubled->node_count()) * m, 0.0);
  for (int i = 0; i < doubled->node_count(); ++i) {
    const auto c = doubled->coords(i);
    const int k = c[last] - cells;
    const double sign = k >= 0 ? 1.0 : -1.0;
    int src = 0;
    for (int a = n - 1; a >= 0; --a) src = src * g.dims[a] + (a == last ? std::abs(k) : c[a]);
    for (int a = 0; a < m; ++a) out.f[static_cast<std::size_t>(i) * m + a] = sign * state.f[static_cast<std::size_t>(src) * m + a];
  }
  out.trace.assign(doubled->samples.size() * m, 0.0);
  out.grid = std::move(doubled);
  res.state = std::move(out);
  return res;
}

}  // namespace mssflow
