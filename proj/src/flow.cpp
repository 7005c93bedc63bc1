#include "mssflow/flow.hpp"

#include "mssflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace mssflow {

int worker_count() {
  int w = static_cast<int>(std::thread::hardware_concurrency());
  if (w < 1) w = 1;
  if (const char* env = std::getenv("MSSFLOW_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) w = std::min(w, cap);
  }
  return std::min(w, kChunks);
}

void parallel_chunks(int count, const std::function<void(int, int, int)>& body) {
  auto range = [count](int c) {
    const long b = static_cast<long>(count) * c / kChunks;
    const long e = static_cast<long>(count) * (c + 1) / kChunks;
    return std::pair<int, int>(static_cast<int>(b), static_cast<int>(e));
  };
  const int workers = worker_count();
  if (workers <= 1 || count < 4 * kChunks) {
    for (int c = 0; c < kChunks; ++c) {
      const auto [b, e] = range(c);
      body(c, b, e);
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int c = w; c < kChunks; c += workers) {
        const auto [b, e] = range(c);
        body(c, b, e);
      }
    });
  }
  for (auto& t : pool) t.join();
}

Vec GraphState::value(int node) const {
  Vec v(m);
  for (int a = 0; a < m; ++a) v(a) = f[static_cast<std::size_t>(node) * m + a];
  return v;
}

Vec GraphState::sample_value(int sample) const {
  Vec v(m);
  for (int a = 0; a < m; ++a) v(a) = trace[static_cast<std::size_t>(sample) * m + a];
  return v;
}

GraphState sampled_state(std::shared_ptr<const Grid> grid, int m, const std::function<Vec(const Vec&)>& fn) {
  if (m < 1 || m > kMaxDim) throw PreconditionError("target dimension must lie in [1, 8]");
  GraphState s;
  s.m = m;
  s.f.assign(static_cast<std::size_t>(grid->node_count()) * m, 0.0);
  s.trace.assign(grid->samples.size() * m, 0.0);
  for (int i = 0; i < grid->node_count(); ++i) {
    if (!grid->in_domain(i)) continue;
    const Vec v = fn(grid->position(i));
    for (int a = 0; a < m; ++a) s.f[static_cast<std::size_t>(i) * m + a] = v(a);
  }
  for (std::size_t k = 0; k < grid->samples.size(); ++k) {
    const Vec v = fn(grid->samples[k].x);
    for (int a = 0; a < m; ++a) s.trace[k * m + a] = v(a);
  }
  s.grid = std::move(grid);
  return s;
}

GraphState initial_state(std::shared_ptr<const Grid> grid, const BoundaryMap& psi) {
  if (psi.n() != grid->n) throw PreconditionError("boundary map and grid dimensions differ");
  return sampled_state(std::move(grid), psi.m(), [&psi](const Vec& x) { return psi.value(x); });
}

namespace {

double arm_value(const GraphState& s, const Arm& arm, int comp) {
  const auto idx = static_cast<std::size_t>(arm.index) * s.m + comp;
  return arm.sample ? s.trace[idx] : s.f[idx];
}

double node_value(const GraphState& s, int node, int comp) { return s.f[static_cast<std::size_t>(node) * s.m + comp]; }

// Quadratic through (0, f0), (a, fa), (b, fb), 0 < a < b: derivatives at 0.
void one_sided(double f0, double a, double fa, double b, double fb, double& d1, double& d2) {
  d1 = ((fa - f0) * b * b - (fb - f0) * a * a) / (a * b * (b - a));
  d2 = 2.0 * ((fb - f0) * a - (fa - f0) * b) / (a * b * (b - a));
}

// First and second derivative along one axis for every component.
void axis_derivatives(const GraphState& s, int node, int axis, double* d1, double* d2) {
  const Grid& g = *s.grid;
  const Arm& left = g.arm(node, axis, 0);
  const Arm& right = g.arm(node, axis, 1);
  const int m = s.m;
  if (left.present() && right.present()) {
    const double hl = left.length;
    const double hr = right.length;
    for (int a = 0; a < m; ++a) {
      const double fc = node_value(s, node, a);
      const double fl = arm_value(s, left, a);
      const double fr = arm_value(s, right, a);
      d1[a] = hl / (hr * (hl + hr)) * fr - hr / (hl * (hl + hr)) * fl + (hr - hl) / (hl * hr) * fc;
      d2[a] = 2.0 * (fr / (hr * (hl + hr)) + fl / (hl * (hl + hr)) - fc / (hl * hr));
    }
    return;
  }
  const int side = right.present() ? 1 : (left.present() ? 0 : -1);
  if (side < 0) {
    for (int a = 0; a < m; ++a) d1[a] = d2[a] = 0.0;
    return;
  }
  const Arm& first = g.arm(node, axis, side);
  const double sign = side ? 1.0 : -1.0;
  const Arm* second = nullptr;
  if (!first.sample) {
    const Arm& next = g.arm(first.index, axis, side);
    if (next.present()) second = &next;
  }
  for (int a = 0; a < m; ++a) {
    const double fc = node_value(s, node, a);
    const double fa = arm_value(s, first, a);
    if (second) {
      double e1 = 0.0, e2 = 0.0;
      one_sided(fc, first.length, fa, first.length + second->length, arm_value(s, *second, a), e1, e2);
      d1[a] = sign * e1;
      d2[a] = e2;
    } else {
      d1[a] = sign * (fa - fc) / first.length;
      d2[a] = 0.0;
    }
  }
}

bool lattice_arm(const Grid& g, int node, int axis, int side) {
  const Arm& a = g.arm(node, axis, side);
  return a.present() && !a.sample;
}

// Mixed derivative f_ij for all components. The seven-point stencil is
// oriented by the sign of g^{ij} so that its off-centre weights stay positive.
bool mixed_derivative(const GraphState& s, int node, int i, int j, double gij, double* out) {
  const Grid& g = *s.grid;
  const int m = s.m;
  const double hi = g.spacing(i);
  const double hj = g.spacing(j);
  int off[kMaxDim] = {0};
  auto diag = [&](int si, int sj) {
    off[i] = si;
    off[j] = sj;
    const int d = g.shifted(node, off);
    off[i] = off[j] = 0;
    return g.in_domain(d) ? d : -1;
  };
  const bool axes = lattice_arm(g, node, i, 0) && lattice_arm(g, node, i, 1) && lattice_arm(g, node, j, 0) &&
                    lattice_arm(g, node, j, 1);
  if (axes) {
    const int ip = g.arm(node, i, 1).index, im = g.arm(node, i, 0).index;
    const int jp = g.arm(node, j, 1).index, jm = g.arm(node, j, 0).index;
    const double sign = gij >= 0.0 ? 1.0 : -1.0;
    const int d1 = gij >= 0.0 ? diag(1, 1) : diag(1, -1);
    const int d2 = gij >= 0.0 ? diag(-1, -1) : diag(-1, 1);
    if (d1 >= 0 && d2 >= 0) {
      for (int a = 0; a < m; ++a) {
        const double fc = node_value(s, node, a);
        const double sum = node_value(s, d1, a) + node_value(s, d2, a) + 2.0 * fc - node_value(s, ip, a) -
                           node_value(s, im, a) - node_value(s, jp, a) - node_value(s, jm, a);
        out[a] = sign * sum / (2.0 * hi * hj);
      }
      return true;
    }
  }
  const int pref = gij >= 0.0 ? 1 : -1;
  const int quadrants[4][2] = {{1, pref}, {-1, -pref}, {1, -pref}, {-1, pref}};
  for (const auto& q : quadrants) {
    const int si = q[0], sj = q[1];
    if (!lattice_arm(g, node, i, si > 0) || !lattice_arm(g, node, j, sj > 0)) continue;
    const int d = diag(si, sj);
    if (d < 0) continue;
    const int ai = g.arm(node, i, si > 0).index;
    const int aj = g.arm(node, j, sj > 0).index;
    for (int a = 0; a < m; ++a)
      out[a] = si * sj *
               (node_value(s, d, a) - node_value(s, ai, a) - node_value(s, aj, a) + node_value(s, node, a)) /
               (hi * hj);
    return true;
  }
  for (int a = 0; a < m; ++a) out[a] = 0.0;
  return false;
}

// Jet at a node plus g^{-1}; returns false when a mixed derivative was dropped.
bool node_jet(const GraphState& s, int node, PointJet& jet, Mat& ginv) {
  const Grid& g = *s.grid;
  const int n = g.n;
  const int m = s.m;
  jet = PointJet::zero(n, m);
  jet.x = g.position(node);
  for (int a = 0; a < m; ++a) jet.value(a) = node_value(s, node, a);
  double d1[kMaxDim], d2[kMaxDim];
  for (int i = 0; i < n; ++i) {
    axis_derivatives(s, node, i, d1, d2);
    for (int a = 0; a < m; ++a) {
      jet.jac(a, i) = d1[a];
      jet.hess[a](i, i) = d2[a];
    }
  }
  ginv = spd_inverse(Mat::Identity(n, n) + jet.jac.transpose() * jet.jac);
  if (g.kind[node] != NodeKind::Interior) {
    for (int a = 0; a < m; ++a) jet.hess[a].setZero();
    return true;
  }
  bool complete = true;
  double mixed[kMaxDim];
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      complete = mixed_derivative(s, node, i, j, ginv(i, j), mixed) && complete;
      for (int a = 0; a < m; ++a) jet.hess[a](i, j) = jet.hess[a](j, i) = mixed[a];
    }
  return complete;
}

}  // namespace

PointJet jet_at(const GraphState& state, int node) {
  if (!state.grid->in_domain(node)) throw PreconditionError("jet_at needs an in-domain node");
  PointJet jet;
  Mat ginv;
  node_jet(state, node, jet, ginv);
  return jet;
}

double area_element(const Vec& lambdas) {
  double prod = 1.0;
  for (int i = 0; i < lambdas.size(); ++i) prod *= 1.0 + lambdas(i) * lambdas(i);
  return std::sqrt(prod);
}

double residual_sup(const GraphState& state) {
  const auto& interior = state.grid->interior;
  std::vector<double> part(kChunks, 0.0);
  parallel_chunks(static_cast<int>(interior.size()), [&](int c, int b, int e) {
    PointJet jet;
    Mat ginv;
    for (int k = b; k < e; ++k) {
      node_jet(state, interior[k], jet, ginv);
      part[c] = std::max(part[c], mss_residual(jet, ginv).cwiseAbs().maxCoeff());
    }
  });
  return *std::max_element(part.begin(), part.end());
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Converged: return "converged";
    case Outcome::MaxSteps: return "max_steps";
    case Outcome::BlowUp: return "blow_up";
  }
  return "unknown";
}

FlowSolver::FlowSolver(std::shared_ptr<const Grid> grid, BoundaryMap psi, FlowOptions options)
    : grid_(std::move(grid)), psi_(std::move(psi)), options_(std::move(options)) {
  if (psi_.n() != grid_->n) throw PreconditionError("boundary map and grid dimensions differ");
  if (!(options_.cfl > 0.0 && options_.cfl < 1.0)) throw PreconditionError("cfl must lie in (0, 1)");
  if (!(options_.tol_residual > 0.0)) throw PreconditionError("tol_residual must be positive");
  if (options_.max_steps < 0 || options_.monitor_every < 1) throw PreconditionError("invalid step limits");
  dt_ = options_.cfl * grid_->h_min * grid_->h_min / (2.0 * grid_->n);
  if (options_.barrier) {
    const double delta = options_.barrier->delta;
    const double mu = options_.barrier->mu;
    const BoundaryGeometry geom = estimate_c0_eta0(grid_->spec);
    if (!(delta > 0.0 && delta <= delta0(geom, mu))) throw PreconditionError("barrier delta must lie in (0, delta0]");
    omega_ = component_oscillation(psi_, *grid_);
    Vec d2 = options_.barrier->d2psi_band;
    if (d2.size() != psi_.m()) d2 = sup_norms(psi_, *grid_, Region::Band, delta).d2psi_component;
    for (int a = 0; a < psi_.m(); ++a) nu_.push_back(barrier_nu(omega_(a), delta, mu, geom.c0, grid_->n, d2(a)));
    for (int i : band_nodes(*grid_, delta)) {
      const Vec x = grid_->position(i);
      if (grid_->spec.kind == DomainKind::Box) {
        int close = 0;
        for (int a = 0; a < grid_->n; ++a)
          close += (x(a) - grid_->spec.lower(a) < delta) + (grid_->spec.upper(a) - x(a) < delta);
        if (close > 1) continue;
      }
      band_.push_back(i);
      band_d_.push_back(std::max(0.0, grid_->distance(x)));
    }
  }
}

GraphState FlowSolver::initial_state() const { return mssflow::initial_state(grid_, psi_); }

FlowSolver::Rates FlowSolver::rates(const GraphState& state) const {
  const auto& interior = grid_->interior;
  const int m = state.m;
  Rates r;
  r.rate.assign(interior.size() * m, 0.0);
  std::vector<double> res(kChunks, 0.0), lam(kChunks, 0.0);
  const double guard2 = options_.blowup_lambda * options_.blowup_lambda;
  std::vector<long> fb(kChunks, 0);
  parallel_chunks(static_cast<int>(interior.size()), [&](int c, int b, int e) {
    PointJet jet;
    Mat ginv;
    for (int k = b; k < e; ++k) {
      if (!node_jet(state, interior[k], jet, ginv)) ++fb[c];
      const Vec v = mss_residual(jet, ginv);
      for (int a = 0; a < m; ++a) {
        r.rate[static_cast<std::size_t>(k) * m + a] = v(a);
        const double av = std::abs(v(a));
        res[c] = (av > res[c] || std::isnan(av)) ? av : res[c];
      }
      const double fro2 = jet.jac.squaredNorm();
      const double l = fro2 > guard2 ? singular_values(jet.jac).lambdas(0) : std::sqrt(fro2);
      lam[c] = std::max(lam[c], l);
    }
  });
  for (int c = 0; c < kChunks; ++c) {
    r.residual = (res[c] > r.residual || std::isnan(res[c])) ? res[c] : r.residual;
    r.lambda_sup = std::max(r.lambda_sup, lam[c]);
    r.fallbacks += fb[c];
  }
  return r;
}

void FlowSolver::apply(GraphState& state, const Rates& r) const {
  const auto& interior = grid_->interior;
  const int m = state.m;
  for (std::size_t k = 0; k < interior.size(); ++k)
    for (int a = 0; a < m; ++a) {
      double& v = state.f[static_cast<std::size_t>(interior[k]) * m + a];
      v += dt_ * r.rate[k * m + a];
      if (!std::isfinite(v)) throw NonFiniteError("non-finite value at node " + std::to_string(interior[k]));
    }
  state.t += dt_;
}

MonitorRecord FlowSolver::monitors(const GraphState& state) const {
  const Grid& g = *grid_;
  const int m = state.m;
  const auto nodes = g.domain_nodes();
  struct Part {
    double max_lambda = 0.0, min_omega = std::numeric_limits<double>::infinity(),
           min_p = std::numeric_limits<double>::infinity(), area = 0.0, diss = 0.0, res = 0.0, bgrad = 0.0;
    Vec fmin, fmax;
    long fallbacks = 0;
  };
  std::vector<Part> parts(kChunks);
  parallel_chunks(static_cast<int>(nodes.size()), [&](int c, int b, int e) {
    Part& p = parts[c];
    p.fmin = Vec::Constant(m, std::numeric_limits<double>::infinity());
    p.fmax = Vec::Constant(m, -std::numeric_limits<double>::infinity());
    PointJet jet;
    Mat ginv;
    for (int k = b; k < e; ++k) {
      const int node = nodes[k];
      if (!node_jet(state, node, jet, ginv)) ++p.fallbacks;
      p.fmin = p.fmin.cwiseMin(jet.value);
      p.fmax = p.fmax.cwiseMax(jet.value);
      const SingularData sv = singular_values(jet.jac);
      const double sqrtg = area_element(sv.lambdas);
      p.area += sqrtg * g.weight[node];
      if (g.kind[node] == NodeKind::Interior) {
        p.max_lambda = std::max(p.max_lambda, sv.lambdas(0));
        p.min_omega = std::min(p.min_omega, star_omega(sv.lambdas));
        p.min_p = std::min(p.min_p, p_tensor_min_eig(sv.lambdas, options_.eps));
        const Vec r = mss_residual(jet, ginv);
        p.res = std::max(p.res, r.cwiseAbs().maxCoeff());
        p.diss += std::max(0.0, mean_curvature_normsq(jet.jac, ginv, r)) * sqrtg * g.weight[node];
      } else {
        p.bgrad = std::max(p.bgrad, sv.lambdas(0));
      }
    }
  });
  MonitorRecord rec;
  rec.t = state.t;
  rec.dt = dt_;
  rec.min_star_omega = std::numeric_limits<double>::infinity();
  rec.min_p_eig = std::numeric_limits<double>::infinity();
  rec.f_min = Vec::Constant(m, std::numeric_limits<double>::infinity());
  rec.f_max = Vec::Constant(m, -std::numeric_limits<double>::infinity());
  for (const Part& p : parts) {
    rec.max_lambda = std::max(rec.max_lambda, p.max_lambda);
    rec.min_star_omega = std::min(rec.min_star_omega, p.min_omega);
    rec.min_p_eig = std::min(rec.min_p_eig, p.min_p);
    rec.area += p.area;
    rec.dissipation += p.diss;
    rec.residual_sup = std::max(rec.residual_sup, p.res);
    rec.boundary_grad_sup = std::max(rec.boundary_grad_sup, p.bgrad);
    rec.cross_fallbacks += p.fallbacks;
    if (p.fmin.size() == m) {
      rec.f_min = rec.f_min.cwiseMin(p.fmin);
      rec.f_max = rec.f_max.cwiseMax(p.fmax);
    }
  }
  if (options_.barrier) {
    const BarrierField b = barrier_values(state);
    rec.barrier_min = std::min(b.min_s, b.min_s_tilde);
  }
  return rec;
}

std::pair<GraphState, MonitorRecord> FlowSolver::step(const GraphState& state) const {
  const Rates r = rates(state);
  if (r.lambda_sup > options_.blowup_lambda)
    throw BlowUpError("max_lambda " + std::to_string(r.lambda_sup) + " exceeds the blow-up guard");
  GraphState next = state;
  apply(next, r);
  MonitorRecord rec = monitors(next);
  return {std::move(next), rec};
}

RunResult FlowSolver::run_to_steady(const GraphState& state0) const {
  RunResult out;
  out.state = state0;
  GraphState& state = out.state;
  long step = 0;
  auto record = [&](double residual) {
    MonitorRecord rec = monitors(state);
    rec.residual_sup = residual;
    rec.step = step;
    out.series.push_back(rec);
    return rec;
  };
  while (true) {
    const Rates r = rates(state);
    const bool converged = r.residual < options_.tol_residual;
    const bool exhausted = step >= options_.max_steps;
    if (step % options_.monitor_every == 0 || converged || exhausted) {
      const MonitorRecord rec = record(r.residual);
      if (rec.max_lambda > options_.blowup_lambda) {
        out.outcome = Outcome::BlowUp;
        out.message = "max_lambda exceeds the blow-up guard";
        break;
      }
    }
    if (converged) {
      out.outcome = Outcome::Converged;
      break;
    }
    if (exhausted) {
      out.outcome = Outcome::MaxSteps;
      break;
    }
    if (std::isnan(r.residual)) {
      out.outcome = Outcome::BlowUp;
      out.message = "non-finite residual";
      break;
    }
    if (r.lambda_sup > options_.blowup_lambda) {
      record(r.residual);
      out.outcome = Outcome::BlowUp;
      out.message = "max_lambda exceeds the blow-up guard";
      break;
    }
    try {
      apply(state, r);
    } catch (const NonFiniteError& e) {
      out.outcome = Outcome::BlowUp;
      out.message = e.what();
      break;
    }
    ++step;
  }
  out.steps = step;
  return out;
}

BarrierField FlowSolver::barrier_values(const GraphState& state) const {
  if (!options_.barrier) throw PreconditionError("barrier options not set");
  const int m = state.m;
  const double delta = options_.barrier->delta;
  BarrierField b;
  b.min_s = b.min_s_tilde = std::numeric_limits<double>::infinity();
  auto push = [&](int tag, double d, const Vec& psi, const Vec& f) {
    b.nodes.push_back(tag);
    b.d.push_back(d);
    for (int a = 0; a < m; ++a) {
      const double common = nu_[a] * std::log1p(d / delta) + omega_(a) / delta * d;
      const double s = common + psi(a) - f(a);
      const double st = common + f(a) - psi(a);
      b.s.push_back(s);
      b.s_tilde.push_back(st);
      b.min_s = std::min(b.min_s, s);
      b.min_s_tilde = std::min(b.min_s_tilde, st);
    }
  };
  for (std::size_t k = 0; k < band_.size(); ++k)
    push(band_[k], band_d_[k], psi_.value(grid_->position(band_[k])), state.value(band_[k]));
  for (std::size_t k = 0; k < grid_->samples.size(); ++k)
    push(-static_cast<int>(k) - 1, 0.0, psi_.value(grid_->samples[k].x), state.sample_value(static_cast<int>(k)));
  return b;
}

bool InvariantReport::all_pass() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const ClauseResult& c) { return c.pass; });
}

std::string InvariantReport::to_text() const {
  std::ostringstream os;
  os.precision(12);
  for (const auto& c : clauses)
    os << "clause " << c.name << ": " << (c.pass ? "pass" : "FAIL") << " worst=" << c.worst << " bound=" << c.bound
       << " at t=" << c.worst_t << "\n";
  return os.str();
}

InvariantReport check_invariants(const std::vector<MonitorRecord>& series, const InvariantContext& ctx) {
  if (series.empty()) throw PreconditionError("empty monitor series");
  const double tol_grid = 5.0 * ctx.h;
  const double inf = std::numeric_limits<double>::infinity();
  InvariantReport rep;

  ClauseResult c1{"(i) max_lambda", true, -inf, 1.0 - ctx.eps + tol_grid, 0.0};
  ClauseResult c2{"(ii) star_omega", true, inf, 0.0, 0.0};
  ClauseResult c3{"(iii) p_eigenvalue", true, inf, -tol_grid, 0.0};
  ClauseResult c4{"(iv) max_principle", true, -inf, ctx.tol_max_principle, 0.0};
  ClauseResult c5{"(v) area_dissipation", true, 0.0, ctx.tol_consistency, 0.0};
  ClauseResult c6{"(vi) boundary_gradient", true, -inf, ctx.gradient_bound + tol_grid, 0.0};

  double omega_ref = ctx.initial_star_omega_min;
  for (const auto& r : series) {
    const double b = r.boundary_grad_sup;
    omega_ref = std::min(omega_ref, std::pow(1.0 + b * b, -0.5 * ctx.n));
  }
  c2.bound = omega_ref - tol_grid;

  auto worse_max = [](ClauseResult& c, double v, double t) {
    if (v > c.worst || std::isnan(v)) {
      c.worst = v;
      c.worst_t = t;
    }
  };
  auto worse_min = [](ClauseResult& c, double v, double t) {
    if (v < c.worst || std::isnan(v)) {
      c.worst = v;
      c.worst_t = t;
    }
  };
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& r = series[k];
    worse_max(c1, r.max_lambda, r.t);
    worse_min(c2, r.min_star_omega, r.t);
    worse_min(c3, r.min_p_eig, r.t);
    for (int a = 0; a < r.f_min.size(); ++a) {
      worse_max(c4, ctx.psi_min(a) - r.f_min(a), r.t);
      worse_max(c4, r.f_max(a) - ctx.psi_max(a), r.t);
    }
    worse_max(c6, r.boundary_grad_sup, r.t);
    if (k > 0) {
      const auto& p = series[k - 1];
      if (r.t > p.t) {
        const double rate = (r.area - p.area) / (r.t - p.t);
        worse_max(c5, std::abs(rate + 0.5 * (r.dissipation + p.dissipation)), r.t);
      }
    }
  }
  c1.pass = c1.worst <= c1.bound;
  c2.pass = c2.worst >= c2.bound;
  c3.pass = c3.worst > c3.bound;
  c4.pass = c4.worst <= c4.bound;
  c5.pass = c5.worst <= c5.bound;
  c6.pass = c6.worst <= c6.bound;
  for (const auto& r : series)
    if (!std::isfinite(r.area) || !(r.area > 0.0) || !std::isfinite(r.dissipation)) c5.pass = false;
  rep.clauses = {c1, c2, c3, c4, c5, c6};
  return rep;
}

InvariantContext make_invariant_context(const FlowSolver& solver, double eps, double gradient_bound,
                                        double tol_consistency) {
  const Grid& g = solver.grid();
  const GraphState s0 = solver.initial_state();
  InvariantContext ctx;
  ctx.eps = eps;
  ctx.n = g.n;
  ctx.h = g.spacing.maxCoeff();
  ctx.gradient_bound = gradient_bound;
  ctx.tol_consistency = tol_consistency;
  ctx.psi_min = Vec::Constant(s0.m, std::numeric_limits<double>::infinity());
  ctx.psi_max = Vec::Constant(s0.m, -std::numeric_limits<double>::infinity());
  double omega = 1.0;
  for (int i : g.domain_nodes()) {
    const PointJet jet = jet_at(s0, i);
    ctx.psi_min = ctx.psi_min.cwiseMin(jet.value);
    ctx.psi_max = ctx.psi_max.cwiseMax(jet.value);
    omega = std::min(omega, star_omega(singular_values(jet.jac).lambdas));
  }
  for (const auto& smp : g.samples) {
    const PointJet jet = solver.psi().jet(smp.x);
    ctx.psi_min = ctx.psi_min.cwiseMin(jet.value);
    ctx.psi_max = ctx.psi_max.cwiseMax(jet.value);
    omega = std::min(omega, star_omega(singular_values(jet.jac).lambdas));
  }
  ctx.initial_star_omega_min = omega;
  return ctx;
}

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_monitor_header(std::ostream& os) {
  os << "t,max_lambda,min_star_omega,min_p_eig,area,dissipation,residual_sup,boundary_grad_sup,barrier_min,dt\n";
}

void write_monitor_row(std::ostream& os, const MonitorRecord& r) {
  os << fmt(r.t) << ',' << fmt(r.max_lambda) << ',' << fmt(r.min_star_omega) << ',' << fmt(r.min_p_eig) << ','
     << fmt(r.area) << ',' << fmt(r.dissipation) << ',' << fmt(r.residual_sup) << ',' << fmt(r.boundary_grad_sup)
     << ',' << fmt(r.barrier_min) << ',' << fmt(r.dt) << '\n';
}

void write_field(std::ostream& os, const GraphState& state) {
  const Grid& g = *state.grid;
  os << "# mssflow field\n";
  os << "n " << g.n << "\nm " << state.m << "\ndims";
  for (int d : g.dims) os << ' ' << d;
  os << "\nh";
  for (int a = 0; a < g.n; ++a) os << ' ' << fmt(g.spacing(a));
  os << "\norigin";
  for (int a = 0; a < g.n; ++a) os << ' ' << fmt(g.origin(a));
  os << "\ndomain " << g.spec.describe() << "\nt " << fmt(state.t) << "\n";
  os << "# index x_1..x_n f_1..f_m\n";
  for (int i : g.domain_nodes()) {
    os << i;
    const Vec x = g.position(i);
    for (int a = 0; a < g.n; ++a) os << ' ' << fmt(x(a));
    for (int a = 0; a < state.m; ++a) os << ' ' << fmt(state.f[static_cast<std::size_t>(i) * state.m + a]);
    os << '\n';
  }
}

}  // namespace mssflow
