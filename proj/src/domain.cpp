#include "mssflow/domain.hpp"

#include "mssflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mssflow {

namespace {

std::string join(const Vec& v) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v(i);
  return os.str();
}

// Largest s in [0, h] with the segment x + [0, s] e_axis inside the closed domain.
double exit_distance(const DomainSpec& spec, Vec x, int axis, double dir, double h) {
  double lo = 0.0;
  double hi = h;
  const double x0 = x(axis);
  for (int it = 0; it < 200 && hi - lo > 1e-16 * h; ++it) {
    const double mid = 0.5 * (lo + hi);
    x(axis) = x0 + dir * mid;
    if (spec.signed_distance(x) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::Box: return "box";
    case DomainKind::Ball: return "ball";
    case DomainKind::Annulus: return "annulus";
    case DomainKind::Exterior: return "exterior";
  }
  return "?";
}

DomainKind domain_kind_from_string(const std::string& s) {
  if (s == "box") return DomainKind::Box;
  if (s == "ball") return DomainKind::Ball;
  if (s == "annulus") return DomainKind::Annulus;
  if (s == "exterior") return DomainKind::Exterior;
  throw ConfigError("unknown domain kind '" + s + "'");
}

DomainSpec DomainSpec::box(const Vec& lower, const Vec& upper) {
  DomainSpec s;
  s.kind = DomainKind::Box;
  s.dim = static_cast<int>(lower.size());
  s.lower = lower;
  s.upper = upper;
  s.center = 0.5 * (lower + upper);
  s.open_faces.assign(2 * s.dim, false);
  s.validate();
  return s;
}

DomainSpec DomainSpec::ball(const Vec& center, double radius) {
  DomainSpec s;
  s.kind = DomainKind::Ball;
  s.dim = static_cast<int>(center.size());
  s.center = center;
  s.radius = radius;
  s.validate();
  return s;
}

DomainSpec DomainSpec::annulus(const Vec& center, double inner_radius, double outer_radius) {
  DomainSpec s;
  s.kind = DomainKind::Annulus;
  s.dim = static_cast<int>(center.size());
  s.center = center;
  s.inner_radius = inner_radius;
  s.radius = outer_radius;
  s.validate();
  return s;
}

DomainSpec DomainSpec::exterior(const Vec& center, double inner_radius, double truncation) {
  DomainSpec s;
  s.kind = DomainKind::Exterior;
  s.dim = static_cast<int>(center.size());
  s.center = center;
  s.inner_radius = inner_radius;
  s.radius = truncation;
  s.validate();
  return s;
}

void DomainSpec::validate() const {
  if (dim < 1 || dim > kMaxDim) throw PreconditionError("domain dimension must be in [1, 8]");
  switch (kind) {
    case DomainKind::Box:
      if (lower.size() != dim || upper.size() != dim) throw PreconditionError("box corners must have dimension n");
      for (int i = 0; i < dim; ++i)
        if (!(upper(i) > lower(i))) throw PreconditionError("box upper corner must exceed lower corner");
      if (!open_faces.empty() && static_cast<int>(open_faces.size()) != 2 * dim)
        throw PreconditionError("open_faces needs 2n entries");
      break;
    case DomainKind::Ball:
      if (center.size() != dim) throw PreconditionError("ball center must have dimension n");
      if (!(radius > 0.0)) throw PreconditionError("ball radius must be positive");
      break;
    case DomainKind::Annulus:
      if (center.size() != dim) throw PreconditionError("annulus center must have dimension n");
      if (!(inner_radius > 0.0) || !(inner_radius < radius))
        throw PreconditionError("annulus needs 0 < inner radius < outer radius");
      break;
    case DomainKind::Exterior:
      if (center.size() != dim) throw PreconditionError("exterior center must have dimension n");
      if (!(inner_radius > 0.0)) throw PreconditionError("excluded ball radius must be positive");
      if (!(radius > 2.0 * inner_radius))
        throw PreconditionError("truncation radius must exceed the diameter of the excluded ball");
      break;
  }
}

double DomainSpec::signed_distance(const Vec& x) const {
  switch (kind) {
    case DomainKind::Box: {
      double d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < dim; ++i) d = std::min({d, x(i) - lower(i), upper(i) - x(i)});
      return d;
    }
    case DomainKind::Ball: return radius - (x - center).norm();
    case DomainKind::Annulus:
    case DomainKind::Exterior: {
      const double rho = (x - center).norm();
      return std::min(radius - rho, rho - inner_radius);
    }
  }
  return 0.0;
}

int DomainSpec::boundary_component(const Vec& x) const {
  switch (kind) {
    case DomainKind::Box: {
      double best = std::numeric_limits<double>::infinity();
      int tag = 0;
      for (int i = 0; i < dim; ++i) {
        if (x(i) - lower(i) < best) {
          best = x(i) - lower(i);
          tag = 2 * i;
        }
        if (upper(i) - x(i) < best) {
          best = upper(i) - x(i);
          tag = 2 * i + 1;
        }
      }
      return tag;
    }
    case DomainKind::Ball: return 0;
    case DomainKind::Annulus:
    case DomainKind::Exterior: {
      const double rho = (x - center).norm();
      return (rho - inner_radius) <= (radius - rho) ? 0 : 1;
    }
  }
  return 0;
}

bool DomainSpec::box_face_open(int axis, int side) const {
  if (kind != DomainKind::Box || open_faces.empty()) return false;
  return open_faces[2 * axis + side];
}

DomainSpec DomainSpec::dilated(const Vec& base_point, double iota) const {
  DomainSpec s = *this;
  if (kind == DomainKind::Box) {
    s.lower = iota * (lower - base_point);
    s.upper = iota * (upper - base_point);
  }
  s.center = iota * (center - base_point);
  s.radius = iota * radius;
  s.inner_radius = iota * inner_radius;
  return s;
}

std::string DomainSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "kind=" << to_string(kind) << " dim=" << dim;
  if (kind == DomainKind::Box) {
    os << " lower=" << join(lower) << " upper=" << join(upper);
  } else {
    os << " center=" << join(center) << " radius=" << radius;
    if (kind != DomainKind::Ball) os << " inner_radius=" << inner_radius;
  }
  return os.str();
}

BoundaryGeometry estimate_c0_eta0(const DomainSpec& spec) {
  spec.validate();
  const int n = spec.dim;
  BoundaryGeometry geom;
  switch (spec.kind) {
    case DomainKind::Box: {
      double half = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) half = std::min(half, 0.5 * (spec.upper(i) - spec.lower(i)));
      geom.eta0 = 0.45 * half;
      geom.hess_d_bound = 0.0;
      geom.c0 = 0.0;
      geom.rule = "box: eta0 = 0.45 * shortest half-edge, corner bands excluded, flat faces";
      break;
    }
    case DomainKind::Ball: {
      geom.eta0 = 0.5 * spec.radius;
      geom.hess_d_bound = n > 1 ? 1.0 / (spec.radius - geom.eta0) : 0.0;
      geom.strictly_convex = true;
      geom.c0 = 0.0;
      geom.rule = "ball: eta0 = r/2, strictly convex so c0 = 0";
      break;
    }
    case DomainKind::Annulus: {
      const double r_in = spec.inner_radius;
      const double r = spec.radius;
      geom.eta0 = std::min({0.5 * r_in, 0.5 * r, 0.5 * (r - r_in)});
      // inner sphere seen from outside: 1/(r_in + s); outer sphere from inside: 1/(r - s)
      geom.hess_d_bound = n > 1 ? std::max(1.0 / r_in, 1.0 / (r - geom.eta0)) : 0.0;
      geom.c0 = n * geom.hess_d_bound;
      geom.rule = "annulus: eta0 = min(reach/2 per sphere, half gap), c0 = n * max |Hess d|";
      break;
    }
    case DomainKind::Exterior: {
      // Only the excluded ball counts; the truncation sphere is strictly convex
      // and contributes a non-negative -Laplacian of d for every radius.
      geom.eta0 = 0.5 * spec.inner_radius;
      geom.hess_d_bound = n > 1 ? 1.0 / spec.inner_radius : 0.0;
      geom.c0 = n * geom.hess_d_bound;
      geom.rule = "exterior: eta0 = r_in/2 and c0 = n/r_in from the excluded ball only";
      break;
    }
  }
  return geom;
}

DistanceJet distance_jet(const DomainSpec& spec, const Vec& x) {
  const BoundaryGeometry geom = estimate_c0_eta0(spec);
  const int n = spec.dim;
  DistanceJet out;
  out.d = spec.signed_distance(x);
  if (out.d < -1e-12) throw PreconditionError("distance_jet: point outside the domain");
  if (out.d >= geom.eta0) throw PreconditionError("distance_jet: point outside the C2 band d < eta0");
  out.grad = Vec::Zero(n);
  out.hess = Mat::Zero(n, n);
  switch (spec.kind) {
    case DomainKind::Box: {
      int close = 0;
      for (int i = 0; i < n; ++i) {
        const double lo = x(i) - spec.lower(i);
        const double hi = spec.upper(i) - x(i);
        if (lo < geom.eta0) ++close;
        if (hi < geom.eta0) ++close;
      }
      if (close > 1) throw PreconditionError("distance_jet: point in a corner band of the box");
      const int face = spec.boundary_component(x);
      out.grad(face / 2) = (face % 2 == 0) ? 1.0 : -1.0;
      break;
    }
    case DomainKind::Ball: {
      const Vec y = x - spec.center;
      const double rho = y.norm();
      const Vec yhat = y / rho;
      out.grad = -yhat;
      out.hess = -(Mat::Identity(n, n) - yhat * yhat.transpose()) / rho;
      break;
    }
    case DomainKind::Annulus:
    case DomainKind::Exterior: {
      const Vec y = x - spec.center;
      const double rho = y.norm();
      const Vec yhat = y / rho;
      const Mat tangential = Mat::Identity(n, n) - yhat * yhat.transpose();
      if (rho - spec.inner_radius <= spec.radius - rho) {
        out.grad = yhat;
        out.hess = tangential / rho;
      } else {
        out.grad = -yhat;
        out.hess = -tangential / rho;
      }
      break;
    }
  }
  return out;
}

Vec Grid::position(int node) const {
  Vec x(n);
  for (int a = 0; a < n; ++a) {
    const int c = node % dims[a];
    node /= dims[a];
    x(a) = origin(a) + c * spacing(a);
  }
  return x;
}

std::vector<int> Grid::coords(int node) const {
  std::vector<int> c(n);
  for (int a = 0; a < n; ++a) {
    c[a] = node % dims[a];
    node /= dims[a];
  }
  return c;
}

int Grid::shifted(int node, const int* offset) const {
  int idx = 0;
  int stride = 1;
  for (int a = 0; a < n; ++a) {
    const int c = node % dims[a] + offset[a];
    node /= dims[a];
    if (c < 0 || c >= dims[a]) return -1;
    idx += c * stride;
    stride *= dims[a];
  }
  return idx;
}

int Grid::neighbour(int node, int axis, int step) const {
  int offset[kMaxDim] = {0};
  offset[axis] = step;
  return shifted(node, offset);
}

double Grid::cell_volume() const { return spacing.prod(); }

std::vector<int> Grid::domain_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < node_count(); ++i)
    if (kind[i] != NodeKind::Outside) out.push_back(i);
  return out;
}

Grid Grid::dilated(const Vec& base_point, double iota) const {
  if (!(iota > 0.0)) throw PreconditionError("dilation factor must be positive");
  Grid g = *this;
  g.spec = spec.dilated(base_point, iota);
  g.origin = iota * (origin - base_point);
  g.spacing = iota * spacing;
  for (auto& s : g.samples) s.x = iota * (s.x - base_point);
  for (auto& a : g.arms) a.length *= iota;
  const double vol = std::pow(iota, n);
  for (auto& w : g.weight) w *= vol;
  g.h_min *= iota;
  return g;
}

Grid build_grid(const DomainSpec& spec, double target_h, const GridOptions& options) {
  spec.validate();
  if (!(target_h > 0.0)) throw PreconditionError("grid spacing must be positive");
  const int n = spec.dim;
  Grid g;
  g.spec = spec;
  g.n = n;
  g.dims.resize(n);
  g.origin = Vec(n);
  g.spacing = Vec(n);
  g.snap_fraction = options.snap_fraction;

  double thickness = 0.0;
  if (spec.kind == DomainKind::Box) {
    thickness = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a) {
      const double len = spec.upper(a) - spec.lower(a);
      const int cells = std::max(1, static_cast<int>(std::ceil(len / target_h - 1e-9)));
      g.dims[a] = cells + 1;
      g.spacing(a) = len / cells;
      g.origin(a) = spec.lower(a);
      thickness = std::min(thickness, static_cast<double>(cells - 1));
    }
  } else {
    const int k = static_cast<int>(std::ceil(spec.radius / target_h - 1e-9));
    for (int a = 0; a < n; ++a) {
      g.dims[a] = 2 * k + 1;
      g.spacing(a) = target_h;
      g.origin(a) = spec.center(a) - k * target_h;
    }
    thickness = spec.kind == DomainKind::Ball ? 2.0 * spec.radius / target_h - 1.0
                                              : (spec.radius - spec.inner_radius) / target_h - 1.0;
  }
  if (thickness < 8.0 - 1e-9)
    throw PreconditionError("domain under-resolved: fewer than 8 interior nodes across its thinnest part");

  long total = 1;
  for (int a = 0; a < n; ++a) total *= g.dims[a];
  if (total > 50'000'000) throw PreconditionError("grid too large");
  const int count = static_cast<int>(total);

  double scale = 1.0;
  for (int a = 0; a < n; ++a) scale = std::max(scale, std::abs(g.origin(a)) + g.dims[a] * g.spacing(a));
  const double on_tol = 1e-12 * scale;

  std::vector<double> sd(count);
  g.kind.assign(count, NodeKind::Outside);
  for (int i = 0; i < count; ++i) {
    sd[i] = spec.signed_distance(g.position(i));
    if (sd[i] > on_tol)
      g.kind[i] = NodeKind::Interior;
    else if (sd[i] >= -on_tol)
      g.kind[i] = NodeKind::Boundary;
  }

  // Pin nodes whose cut arm would be shorter than snap_fraction * h.
  std::vector<NodeKind> snapped = g.kind;
  for (int i = 0; i < count; ++i) {
    if (g.kind[i] != NodeKind::Interior) continue;
    const Vec x = g.position(i);
    for (int a = 0; a < n && snapped[i] == NodeKind::Interior; ++a) {
      for (int side = 0; side < 2; ++side) {
        const int nb = g.neighbour(i, a, side ? 1 : -1);
        if (nb >= 0 && g.kind[nb] != NodeKind::Outside) continue;
        const double h = g.spacing(a);
        const double t = exit_distance(spec, x, a, side ? 1.0 : -1.0, h);
        if (t < options.snap_fraction * h) {
          snapped[i] = NodeKind::Boundary;
          break;
        }
      }
    }
  }
  g.kind = std::move(snapped);

  g.arms.assign(static_cast<std::size_t>(count) * n * 2, Arm{});
  g.weight.assign(count, 0.0);
  g.near_boundary.assign(count, 0);
  g.h_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    if (g.kind[i] == NodeKind::Outside) continue;
    if (g.kind[i] == NodeKind::Interior)
      g.interior.push_back(i);
    else
      g.boundary_nodes.push_back(i);
    const Vec x = g.position(i);
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      const double h = g.spacing(a);
      double wa = 0.0;
      for (int side = 0; side < 2; ++side) {
        Arm& arm = g.arms[(static_cast<std::size_t>(i) * n + a) * 2 + side];
        const int nb = g.neighbour(i, a, side ? 1 : -1);
        if (nb >= 0 && g.kind[nb] != NodeKind::Outside) {
          arm = Arm{nb, false, h};
          wa += 0.5 * h;
        } else {
          const double t = exit_distance(spec, x, a, side ? 1.0 : -1.0, h);
          if (t > on_tol) {
            BoundarySample s;
            s.x = x;
            s.x(a) += (side ? 1.0 : -1.0) * t;
            s.owner = i;
            s.axis = a;
            s.side = side;
            s.component = spec.boundary_component(s.x);
            s.theta = t / h;
            arm = Arm{static_cast<std::int32_t>(g.samples.size()), true, t};
            g.samples.push_back(std::move(s));
            wa += t;
          }
        }
        if (g.kind[i] == NodeKind::Interior) {
          if (arm.present()) g.h_min = std::min(g.h_min, arm.length);
          if (arm.sample || (arm.present() && g.kind[arm.index] == NodeKind::Boundary)) g.near_boundary[i] = 1;
        }
      }
      w *= wa;
    }
    g.weight[i] = w;
  }
  if (g.interior.empty()) throw PreconditionError("grid has no interior nodes");
  return g;
}

std::vector<int> band_nodes(const Grid& grid, double delta) {
  std::vector<int> out;
  for (int i = 0; i < grid.node_count(); ++i)
    if (grid.in_domain(i) && grid.distance(grid.position(i)) < delta) out.push_back(i);
  return out;
}

}  // namespace mssflow
