#include "mssflow/driver.hpp"

#include "mssflow/error.hpp"
#include "mssflow/shrinker.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mssflow {

namespace pt = boost::property_tree;

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Solve: return "solve";
    case Mode::CheckHypothesis: return "check_hypothesis";
    case Mode::DensityOracle: return "density_oracle";
    case Mode::Exterior: return "exterior";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& s) {
  if (s == "solve") return Mode::Solve;
  if (s == "check" || s == "check_hypothesis") return Mode::CheckHypothesis;
  if (s == "density" || s == "density_oracle") return Mode::DensityOracle;
  if (s == "exterior") return Mode::Exterior;
  throw ConfigError("unknown mode '" + s + "'");
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"run", {"mode"}},
      {"domain", {"kind", "lower", "upper", "center", "radius", "inner_radius", "open_faces"}},
      {"boundary",
       {"family", "m", "values", "offset", "matrix", "terms", "amplitude", "wave", "phase", "scale", "frequency",
        "base", "center", "direction"}},
      {"grid", {"h", "snap_fraction"}},
      {"flow", {"cfl", "tol_residual", "max_steps", "monitor_every", "blowup_lambda"}},
      {"hypothesis", {"condition", "delta", "c", "ball_variant"}},
      {"exterior", {"radii", "probes"}},
      {"output", {"dir"}},
      {"density",
       {"state", "m", "time_gap", "offset", "extent", "h", "cutoff", "truncation", "tolerance", "c",
        "order_threshold"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (trim(s.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::stringstream ss(t);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) out.push_back(to_double(key, tok));
  return out;
}

Vec to_vec(const std::string& key, const std::string& s) {
  const auto l = to_list(key, s);
  if (l.empty() || static_cast<int>(l.size()) > 2 * kMaxDim) throw ConfigError("key '" + key + "': bad vector");
  Vec v(static_cast<int>(l.size()));
  for (std::size_t i = 0; i < l.size(); ++i) v(static_cast<int>(i)) = l[i];
  return v;
}

std::vector<Vec> to_vecs(const std::string& key, const std::string& s) {
  std::vector<Vec> out;
  for (const auto& part : split(s, ';'))
    if (!part.empty()) out.push_back(to_vec(key, part));
  return out;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + s + "'");
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}
  [[nodiscard]] bool has(const std::string& k) const { return tree_ && tree_->get_optional<std::string>(k); }
  [[nodiscard]] std::string str(const std::string& k) const {
    if (!has(k)) throw ConfigError("missing key [" + name_ + "] " + k);
    return trim(tree_->get<std::string>(k));
  }
  [[nodiscard]] std::string str(const std::string& k, const std::string& def) const { return has(k) ? str(k) : def; }
  [[nodiscard]] double num(const std::string& k) const { return to_double(name_ + "." + k, str(k)); }
  [[nodiscard]] double num(const std::string& k, double def) const { return has(k) ? num(k) : def; }
  [[nodiscard]] long integer(const std::string& k, long def) const {
    if (!has(k)) return def;
    const double v = num(k);
    if (v != std::floor(v)) throw ConfigError("key [" + name_ + "] " + k + " must be an integer");
    return static_cast<long>(v);
  }
  [[nodiscard]] Vec vec(const std::string& k) const { return to_vec(name_ + "." + k, str(k)); }
  [[nodiscard]] std::vector<Vec> vecs(const std::string& k) const { return to_vecs(name_ + "." + k, str(k)); }
  [[nodiscard]] std::vector<double> list(const std::string& k) const { return to_list(name_ + "." + k, str(k)); }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

DomainSpec parse_domain(const Section& s, Mode mode) {
  const std::string kind = s.str("kind");
  DomainSpec spec;
  if (kind == "box") {
    spec = DomainSpec::box(s.vec("lower"), s.vec("upper"));
  } else if (kind == "ball") {
    spec = DomainSpec::ball(s.vec("center"), s.num("radius"));
  } else if (kind == "annulus") {
    spec = DomainSpec::annulus(s.vec("center"), s.num("inner_radius"), s.num("radius"));
  } else if (kind == "exterior") {
    // in exterior mode the truncation radius comes from the shell schedule
    const double inner = s.num("inner_radius");
    const double r = mode == Mode::Exterior ? s.num("radius", 3.0 * inner) : s.num("radius");
    spec = DomainSpec::exterior(s.vec("center"), inner, r);
  } else {
    throw ConfigError("unknown domain kind '" + kind + "'");
  }
  if (s.has("open_faces")) {
    if (spec.kind != DomainKind::Box) throw ConfigError("open_faces applies to boxes only");
    const auto flags = s.list("open_faces");
    if (static_cast<int>(flags.size()) != 2 * spec.dim) throw ConfigError("open_faces needs 2 * dim flags");
    spec.open_faces.clear();
    for (double f : flags) spec.open_faces.push_back(f != 0.0);
  }
  return spec;
}

BoundaryMap parse_boundary(const Section& s, int n) {
  const std::string family = s.str("family");
  if (family == "constant") return BoundaryMap::constant(n, s.vec("values"));
  if (family == "linear") {
    const auto rows = s.vecs("matrix");
    Mat a(static_cast<int>(rows.size()), n);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != n) throw ConfigError("linear matrix rows need n entries");
      a.row(static_cast<int>(r)) = rows[r].transpose();
    }
    const Vec off = s.has("offset") ? s.vec("offset") : Vec(Vec::Zero(a.rows()));
    return BoundaryMap::linear(off, a);
  }
  if (family == "polynomial") {
    const long m = s.integer("m", 1);
    if (m < 1 || m > kMaxDim) throw ConfigError("polynomial m out of range");
    std::vector<std::vector<Monomial>> comps(m);
    for (const Vec& t : s.vecs("terms")) {
      if (t.size() != n + 2) throw ConfigError("polynomial term needs: component coefficient p_1 .. p_n");
      const int comp = static_cast<int>(t(0));
      if (comp < 0 || comp >= m) throw ConfigError("polynomial term component out of range");
      Monomial mono;
      mono.coeff = t(1);
      for (int i = 0; i < n; ++i) mono.powers.push_back(static_cast<int>(t(2 + i)));
      comps[comp].push_back(mono);
    }
    return BoundaryMap::polynomial(n, std::move(comps));
  }
  if (family == "trigonometric") {
    const Vec amp = s.vec("amplitude");
    const int m = static_cast<int>(amp.size());
    const auto wave = s.vecs("wave");
    const Vec phase = s.has("phase") ? s.vec("phase") : Vec(Vec::Zero(m));
    const Vec off = s.has("offset") ? s.vec("offset") : Vec(Vec::Zero(m));
    return BoundaryMap::trigonometric(amp, wave, phase, off);
  }
  if (family == "lawson_osserman_scaled") {
    const Vec c = s.has("center") ? s.vec("center") : Vec(Vec::Zero(n));
    const std::string base = s.str("base", "power");
    if (base == "hopf") return BoundaryMap::lawson_osserman_hopf(s.num("scale"), c);
    if (base != "power") throw ConfigError("unknown Lawson-Osserman base map '" + base + "'");
    return BoundaryMap::lawson_osserman(n, s.num("scale"), static_cast<int>(s.integer("frequency", 2)), c);
  }
  if (family == "dipole") {
    const Vec c = s.has("center") ? s.vec("center") : Vec(Vec::Zero(n));
    return BoundaryMap::dipole(s.vec("amplitude"), s.vecs("direction"), c);
  }
  throw ConfigError("unknown boundary family '" + family + "'");
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  for (const auto& [name, sec] : tree) {
    const auto it = schema().find(name);
    if (it == schema().end()) throw ConfigError("unknown section [" + name + "]");
    if (!sec.data().empty() && sec.empty()) throw ConfigError("key '" + name + "' outside of a section");
    for (const auto& [key, val] : sec) {
      (void)val;
      if (!it->second.count(key)) throw ConfigError("unknown key [" + name + "] " + key);
    }
  }
  auto section = [&tree](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name);
  };

  RunConfig cfg;
  try {
    cfg.mode = mode_from_string(section("run").str("mode"));
    const Section out = section("output");
    cfg.out_dir = out.str("dir", ".");

    const Section dens = section("density");
    DensityConfig& d = cfg.density;
    d.state = dens.str("state", d.state);
    d.m = static_cast<int>(dens.integer("m", d.m));
    d.time_gap = dens.num("time_gap", d.time_gap);
    d.offset = dens.num("offset", d.offset);
    d.extent = dens.num("extent", d.extent);
    d.h = dens.num("h", d.h);
    d.cutoff = dens.num("cutoff", d.cutoff);
    d.truncation = dens.num("truncation", d.truncation);
    d.tolerance = dens.num("tolerance", d.tolerance);
    d.shrinker_c = dens.num("c", d.shrinker_c);
    d.order_threshold = dens.num("order_threshold", d.order_threshold);
    if (cfg.mode == Mode::DensityOracle) {
      static const std::set<std::string> states = {"plane", "offset_plane", "half_plane", "sphere_cap", "all"};
      if (!states.count(d.state)) throw ConfigError("unknown density state '" + d.state + "'");
      if (d.m < 1 || d.m > kMaxDim) throw ConfigError("density m out of range");
      if (!(d.h > 0.0 && d.extent > 0.0 && d.time_gap > 0.0 && d.tolerance > 0.0 && d.shrinker_c > 0.0))
        throw ConfigError("density knobs must be positive");
      return cfg;
    }

    cfg.domain = parse_domain(section("domain"), cfg.mode);
    cfg.psi = parse_boundary(section("boundary"), cfg.domain.dim);
    const Section grid = section("grid");
    cfg.h = grid.num("h");
    cfg.snap_fraction = grid.num("snap_fraction", cfg.snap_fraction);
    if (!(cfg.h > 0.0)) throw ConfigError("grid h must be positive");
    if (!(cfg.snap_fraction >= 0.0 && cfg.snap_fraction < 1.0)) throw ConfigError("snap_fraction must lie in [0, 1)");

    const Section flow = section("flow");
    cfg.flow.cfl = flow.num("cfl", cfg.flow.cfl);
    cfg.flow.tol_residual = flow.num("tol_residual", cfg.flow.tol_residual);
    cfg.flow.max_steps = flow.integer("max_steps", cfg.flow.max_steps);
    cfg.flow.monitor_every = flow.integer("monitor_every", cfg.flow.monitor_every);
    cfg.flow.blowup_lambda = flow.num("blowup_lambda", cfg.flow.blowup_lambda);
    if (!(cfg.flow.cfl > 0.0 && cfg.flow.cfl < 1.0)) throw ConfigError("cfl must lie in (0, 1)");
    if (!(cfg.flow.tol_residual > 0.0)) throw ConfigError("tol_residual must be positive");
    if (cfg.flow.max_steps < 0 || cfg.flow.monitor_every < 1) throw ConfigError("invalid step limits");

    const Section hyp = section("hypothesis");
    const std::string cond = hyp.str("condition", cfg.mode == Mode::Exterior ? "B" : "A");
    if (cond != "A" && cond != "B") throw ConfigError("condition must be A or B");
    cfg.condition = cond[0];
    cfg.delta = hyp.num("delta", 0.0);
    cfg.c = hyp.num("c", cfg.c);
    cfg.ball_variant = hyp.has("ball_variant") && to_bool("hypothesis.ball_variant", hyp.str("ball_variant"));
    if (cfg.delta < 0.0) throw ConfigError("delta must be positive");
    if (cfg.ball_variant && cfg.domain.kind != DomainKind::Ball)
      throw ConfigError("ball_variant applies to ball domains only");

    const Section ext = section("exterior");
    if (cfg.mode == Mode::Exterior) {
      if (cfg.domain.kind != DomainKind::Exterior) throw ConfigError("exterior mode needs an exterior domain");
      cfg.radii = ext.list("radii");
      if (ext.has("probes")) cfg.probes = ext.list("probes");
      if (cfg.radii.empty()) throw ConfigError("radius schedule is empty");
      for (std::size_t k = 1; k < cfg.radii.size(); ++k)
        if (!(cfg.radii[k] > cfg.radii[k - 1])) throw ConfigError("radius schedule must be strictly increasing");
      const double r0 = exterior_r0(cfg.domain);
      if (!(cfg.radii.front() > r0))
        throw ConfigError("first radius must exceed r0 = 2 (diam + 2 eta0 + d0) = " + std::to_string(r0));
      if (cfg.probes.size() < 2) throw ConfigError("at least two probe radii are needed");
      for (std::size_t k = 0; k < cfg.probes.size(); ++k) {
        if (!(cfg.probes[k] > 0.0 && cfg.probes[k] < 1.0)) throw ConfigError("probe fractions must lie in (0, 1)");
        if (k > 0 && !(cfg.probes[k] > cfg.probes[k - 1])) throw ConfigError("probes must be increasing");
      }
      cfg.domain.radius = cfg.radii.back();
    } else if (ext.has("radii") || ext.has("probes")) {
      throw ConfigError("[exterior] keys need mode = exterior");
    }
    cfg.domain.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in);
}

std::string RunSummary::line() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "mode=%s outcome=%s residual=%.6g max_lambda=%.6g", to_string(mode).c_str(),
                outcome.c_str(), residual, max_lambda);
  return buf;
}

double exterior_r0(const DomainSpec& spec) {
  if (spec.kind != DomainKind::Exterior) throw PreconditionError("r0 is defined for exterior domains");
  const BoundaryGeometry geom = estimate_c0_eta0(spec);
  const double diam = 2.0 * spec.inner_radius;
  const double d0 = spec.inner_radius;  // distance from the excluded ball's centre to dE
  return 2.0 * (diam + 2.0 * geom.eta0 + d0);
}

namespace {

std::filesystem::path prepare_out(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

double choose_delta(const RunConfig& cfg, const BoundaryGeometry& geom) {
  return cfg.delta > 0.0 ? cfg.delta : 0.9 * delta0(geom, 1.0);
}

HypothesisReport check_hypothesis(const RunConfig& cfg, const Grid& grid, const BoundaryGeometry& geom, double delta) {
  return cfg.condition == 'A' ? check_condition_A(*cfg.psi, grid, geom, delta)
                              : check_condition_B(*cfg.psi, grid, geom, delta, cfg.c);
}

double gradient_bound(const RunConfig& cfg, const HypothesisReport& rep, int n) {
  const PsiNorms norms{rep.w_psi, rep.sup_dpsi_band, rep.sup_d2psi_band};
  return boundary_gradient_bound(norms, rep.delta, 1.0, n, cfg.ball_variant);
}

int outcome_exit(Outcome o) {
  switch (o) {
    case Outcome::Converged: return kExitOk;
    case Outcome::BlowUp: return kExitBlowUp;
    case Outcome::MaxSteps: return kExitMaxSteps;
  }
  return kExitMaxSteps;
}

struct SolveArtifacts {
  RunResult run;
  InvariantReport invariants;
  HypothesisReport hypothesis;
  std::shared_ptr<const Grid> grid;
  double dt = 0.0;
};

SolveArtifacts solve_on(const RunConfig& cfg, const DomainSpec& spec, const HypothesisReport* given) {
  SolveArtifacts a;
  a.grid = std::make_shared<const Grid>(build_grid(spec, cfg.h, GridOptions{cfg.snap_fraction}));
  const BoundaryGeometry geom = estimate_c0_eta0(spec);
  const double delta = choose_delta(cfg, geom);
  a.hypothesis = given ? *given : check_hypothesis(cfg, *a.grid, geom, delta);
  FlowOptions opts = cfg.flow;
  opts.eps = std::max(0.0, a.hypothesis.eps);
  opts.barrier = BarrierOptions{delta, 1.0, {}};
  if (a.hypothesis.condition == 'A' && a.hypothesis.delta == delta)
    opts.barrier->d2psi_band = a.hypothesis.d2psi_band_component;
  FlowSolver solver(a.grid, *cfg.psi, opts);
  a.dt = solver.dt();
  a.run = solver.run_to_steady(solver.initial_state());
  const double h = a.grid->spacing.maxCoeff();
  const double tol = kConsistencyConstant * (h * h + opts.monitor_every * solver.dt());
  const InvariantContext ctx =
      make_invariant_context(solver, opts.eps, gradient_bound(cfg, a.hypothesis, spec.dim), tol);
  a.invariants = check_invariants(a.run.series, ctx);
  return a;
}

void write_monitors(const std::filesystem::path& path, const std::vector<MonitorRecord>& series) {
  std::ofstream os(path);
  write_monitor_header(os);
  for (const auto& r : series) write_monitor_row(os, r);
}

void write_grid_stats(std::ostream& os, const Grid& g, double dt) {
  os << "grid nodes=" << g.node_count() << " interior=" << g.interior.size()
     << " boundary_nodes=" << g.boundary_nodes.size() << " samples=" << g.samples.size() << " h_min=" << g.h_min
     << " dt=" << dt << "\n";
}

}  // namespace

RunSummary run_check(const RunConfig& cfg) {
  RunSummary s;
  s.mode = Mode::CheckHypothesis;
  const Grid grid = build_grid(cfg.domain, cfg.h, GridOptions{cfg.snap_fraction});
  const BoundaryGeometry geom = estimate_c0_eta0(cfg.domain);
  const HypothesisReport rep = check_hypothesis(cfg, grid, geom, choose_delta(cfg, geom));
  const auto dir = prepare_out(cfg);
  std::ofstream os(dir / "report.txt");
  os.precision(17);
  os << "mode = check_hypothesis\ndomain = " << cfg.domain.describe() << "\n"
     << "boundary = " << cfg.psi->family_name() << "\neta0 = " << geom.eta0 << "\nc0 = " << geom.c0
     << "\neta0_rule = " << geom.rule << "\n"
     << rep.to_text() << "boundary_gradient_bound = " << gradient_bound(cfg, rep, cfg.domain.dim) << "\n";
  s.outcome = rep.pass ? "pass" : "fail";
  s.max_lambda = rep.sup_dpsi_global;
  s.residual = rep.lhs_condition;
  s.exit_code = rep.pass ? kExitOk : kExitHypothesis;
  return s;
}

RunSummary run_solve(const RunConfig& cfg, bool force) {
  RunSummary s;
  s.mode = Mode::Solve;
  const auto dir = prepare_out(cfg);
  const Grid probe = build_grid(cfg.domain, cfg.h, GridOptions{cfg.snap_fraction});
  const BoundaryGeometry geom = estimate_c0_eta0(cfg.domain);
  const HypothesisReport rep = check_hypothesis(cfg, probe, geom, choose_delta(cfg, geom));

  std::ofstream os(dir / "report.txt");
  os.precision(17);
  os << "mode = solve\ndomain = " << cfg.domain.describe() << "\nboundary = " << cfg.psi->family_name()
     << "\neta0 = " << geom.eta0 << "\nc0 = " << geom.c0 << "\neta0_rule = " << geom.rule << "\n"
     << rep.to_text();
  if (!rep.pass && !force) {
    os << "hypothesis failed; flow not started (use --force)\n";
    s.outcome = "hypothesis_fail";
    s.max_lambda = rep.sup_dpsi_global;
    s.exit_code = kExitHypothesis;
    return s;
  }
  if (!rep.pass) os << "hypothesis failed; flow forced\n";

  SolveArtifacts a = solve_on(cfg, cfg.domain, &rep);
  write_grid_stats(os, *a.grid, a.dt);
  const MonitorRecord& last = a.run.series.back();
  os << "outcome = " << to_string(a.run.outcome) << "\nsteps = " << a.run.steps << "\nt = " << a.run.state.t
     << "\nresidual = " << last.residual_sup << "\nmax_lambda = " << last.max_lambda
     << "\nboundary_gradient_bound = " << gradient_bound(cfg, rep, cfg.domain.dim) << "\n";
  if (!a.run.message.empty()) os << "message = " << a.run.message << "\n";
  os << a.invariants.to_text();
  write_monitors(dir / "monitors.csv", a.run.series);
  std::ofstream field(dir / "field.dat");
  write_field(field, a.run.state);

  s.outcome = to_string(a.run.outcome);
  s.residual = last.residual_sup;
  s.max_lambda = last.max_lambda;
  s.exit_code = outcome_exit(a.run.outcome);
  if (s.exit_code == kExitOk && !a.invariants.all_pass()) {
    s.exit_code = kExitInvariant;
    s.outcome = "invariant_violation";
  }
  return s;
}

namespace {

struct OracleLine {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool lower_bound = false;  // value must be >= expected
};

GraphState flat_state(const DomainSpec& spec, double h, int m) {
  auto grid = std::make_shared<const Grid>(build_grid(spec, h));
  return sampled_state(grid, m, [m](const Vec&) { return Vec(Vec::Zero(m)); });
}

DomainSpec open_box(int n, double extent, bool half) {
  Vec lo = Vec::Constant(n, -extent);
  const Vec hi = Vec::Constant(n, extent);
  if (half) lo(n - 1) = 0.0;
  DomainSpec spec = DomainSpec::box(lo, hi);
  spec.open_faces.assign(2 * n, true);
  if (half) spec.open_faces[2 * (n - 1)] = false;
  return spec;
}

}  // namespace

RunSummary run_density_oracle(const RunConfig& cfg) {
  const DensityConfig& d = cfg.density;
  const int n = 2;
  const int m = d.m;
  std::vector<OracleLine> lines;
  DensityQuery q;
  q.center = Vec::Zero(n + m);
  q.time_gap = d.time_gap;
  q.cutoff = d.cutoff;
  q.truncation = d.truncation;
  auto want = [&](const std::string& s) { return d.state == "all" || d.state == s; };

  if (want("plane")) {
    const double v = gaussian_density(flat_state(open_box(n, d.extent, false), d.h, m), q);
    lines.push_back({"plane_density", v, 1.0, d.tolerance, std::abs(v - 1.0) <= d.tolerance});
  }
  if (want("offset_plane")) {
    DensityQuery qo = q;
    qo.center(n) = d.offset;
    const double v = gaussian_density(flat_state(open_box(n, d.extent, false), d.h, m), qo);
    const double e = std::exp(-d.offset * d.offset / (4.0 * d.time_gap));
    lines.push_back({"offset_plane_density", v, e, d.tolerance, std::abs(v - e) <= d.tolerance});
  }
  if (want("half_plane")) {
    const double v = gaussian_density(flat_state(open_box(n, d.extent, true), d.h, m), q);
    lines.push_back({"half_plane_density", v, 0.5, d.tolerance, std::abs(v - 0.5) <= d.tolerance});
  }
  if (want("sphere_cap")) {
    const double radius = std::sqrt(2.0 * n / d.shrinker_c);
    const double half = std::min(d.extent, 0.5 * radius);
    const DomainSpec spec = DomainSpec::box(Vec::Constant(n, -half), Vec::Constant(n, half));
    auto cap = [radius, m](const Vec& x) {
      Vec v = Vec::Zero(m);
      v(0) = std::sqrt(radius * radius - x.squaredNorm());
      return v;
    };
    double res[2];
    for (int k = 0; k < 2; ++k) {
      auto grid = std::make_shared<const Grid>(build_grid(spec, d.h * (k ? 0.5 : 1.0)));
      res[k] = shrinker_residual_sup(sampled_state(grid, m, cap), d.shrinker_c);
    }
    const double order = std::log2(res[0] / res[1]);
    lines.push_back({"sphere_cap_shrinker_order", order, d.order_threshold, 0.0, order >= d.order_threshold, true});
    lines.push_back({"sphere_cap_shrinker_constant", res[0] / (d.h * d.h), 0.0, 0.0, true, true});
  }

  const auto dir = prepare_out(cfg);
  std::ofstream os(dir / "report.txt");
  os.precision(17);
  os << "mode = density_oracle\ntime_gap = " << d.time_gap << "\nh = " << d.h << "\n";
  RunSummary s;
  s.mode = Mode::DensityOracle;
  bool ok = true;
  for (const auto& l : lines) {
    os << l.name << " value=" << l.value << " expected=" << l.expected;
    if (!l.lower_bound) {
      os << " tolerance=" << l.tolerance;
      s.residual = std::max(s.residual, std::abs(l.value - l.expected));
    }
    os << " " << (l.pass ? "pass" : "FAIL") << "\n";
    ok = ok && l.pass;
  }
  s.outcome = ok ? "pass" : "oracle_mismatch";
  s.exit_code = ok ? kExitOk : kExitInvariant;
  return s;
}

RunSummary run_exterior(const RunConfig& cfg, bool force, ExteriorReport* report_out) {
  RunSummary s;
  s.mode = Mode::Exterior;
  ExteriorReport rep;
  const BoundaryGeometry geom = estimate_c0_eta0(cfg.domain);
  rep.r0 = exterior_r0(cfg.domain);
  rep.delta0 = delta0(geom, 1.0);
  const auto dir = prepare_out(cfg);
  std::ofstream os(dir / "report.txt");
  os.precision(17);
  os << "mode = exterior\ndomain = " << cfg.domain.describe() << "\nboundary = " << cfg.psi->family_name()
     << "\neta0 = " << geom.eta0 << "\nc0 = " << geom.c0 << "\neta0_rule = " << geom.rule << "\nr0 = " << rep.r0
     << "\ndelta0 = " << rep.delta0 << "\n";

  std::vector<SolveArtifacts> runs;
  int exit_code = kExitOk;
  for (double r : cfg.radii) {
    DomainSpec spec = cfg.domain;
    spec.radius = r;
    const Grid probe = build_grid(spec, cfg.h, GridOptions{cfg.snap_fraction});
    const HypothesisReport hyp = check_hypothesis(cfg, probe, geom, choose_delta(cfg, geom));
    os << "[shell r=" << r << "]\n" << hyp.to_text();
    if (!hyp.pass && !force) {
      os << "hypothesis failed; flow not started (use --force)\n";
      s.outcome = "hypothesis_fail";
      s.exit_code = kExitHypothesis;
      if (report_out) *report_out = rep;
      return s;
    }
    SolveArtifacts a = solve_on(cfg, spec, &hyp);
    const MonitorRecord& last = a.run.series.back();
    ShellResult sr{r, a.run.outcome, last.residual_sup, last.max_lambda, a.run.steps, hyp.pass, a.invariants.all_pass()};
    rep.shells.push_back(sr);
    write_grid_stats(os, *a.grid, a.dt);
    os << "outcome = " << to_string(sr.outcome) << "\nsteps = " << sr.steps << "\nresidual = " << sr.residual
       << "\nmax_lambda = " << sr.max_lambda << "\n"
       << a.invariants.to_text();
    std::ostringstream name;
    name << "monitors_r" << r << ".csv";
    write_monitors(dir / name.str(), a.run.series);
    s.residual = std::max(s.residual, sr.residual);
    s.max_lambda = std::max(s.max_lambda, sr.max_lambda);
    if (exit_code == kExitOk) {
      exit_code = outcome_exit(sr.outcome);
      if (exit_code == kExitOk && !sr.invariants_pass) exit_code = kExitInvariant;
    }
    runs.push_back(std::move(a));
  }

  // Successive shells share the centred lattice, so common nodes differ by a fixed index shift.
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    const Grid& a = *runs[k].grid;
    const Grid& b = *runs[k + 1].grid;
    const int shift = (b.dims[0] - a.dims[0]) / 2;
    const int m = runs[k].run.state.m;
    double worst = 0.0;
    for (int i : a.interior) {
      auto c = a.coords(i);
      int j = 0;
      for (int ax = a.n - 1; ax >= 0; --ax) j = j * b.dims[ax] + c[ax] + shift;
      if (b.kind[j] != NodeKind::Interior) continue;
      for (int comp = 0; comp < m; ++comp)
        worst = std::max(worst, std::abs(runs[k].run.state.f[static_cast<std::size_t>(i) * m + comp] -
                                         runs[k + 1].run.state.f[static_cast<std::size_t>(j) * m + comp]));
    }
    rep.shell_difference.push_back(worst);
  }

  const GraphState& outer = runs.back().run.state;
  const Grid& g = *runs.back().grid;
  const double rk = cfg.radii.back();
  const double h = g.spacing.maxCoeff();
  const int n = g.n;
  const int m = outer.m;
  auto radius_of = [&](int node) { return (g.position(node) - cfg.domain.center).norm(); };

  const double a_lo = cfg.probes[cfg.probes.size() - 2] * rk;
  const double a_hi = cfg.probes.back() * rk;
  Mat sum = Mat::Zero(m, n);
  std::vector<Mat> jac;
  for (int i : g.interior) {
    const double rho = radius_of(i);
    if (rho < a_lo || rho > a_hi) continue;
    jac.push_back(jet_at(outer, i).jac);
    sum += jac.back();
  }
  if (jac.empty()) throw PreconditionError("probe annulus contains no interior nodes");
  rep.l_estimate = sum / static_cast<double>(jac.size());
  double ss = 0.0;
  for (const auto& j : jac) ss += (j - rep.l_estimate).squaredNorm();
  rep.l_fit_residual = std::sqrt(ss / jac.size());

  for (double p : cfg.probes) {
    const double rho = p * rk;
    double worst = 0.0;
    for (int i : g.interior) {
      if (std::abs(radius_of(i) - rho) > 0.5 * h) continue;
      const Mat diff = jet_at(outer, i).jac - rep.l_estimate;
      worst = std::max(worst, singular_values(diff).lambdas(0));
    }
    rep.probe_radii.push_back(rho);
    rep.decay.push_back(worst);
  }

  std::ofstream csv(dir / "exterior.csv");
  csv.precision(17);
  csv << "probe_radius,sup_df_minus_l\n";
  for (std::size_t k = 0; k < rep.decay.size(); ++k) csv << rep.probe_radii[k] << ',' << rep.decay[k] << '\n';

  os << "l_estimate =";
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i) os << ' ' << rep.l_estimate(a, i);
  os << "\nl_fit_residual = " << rep.l_fit_residual << "\n";
  for (std::size_t k = 0; k < rep.shell_difference.size(); ++k)
    os << "shell_difference r=" << cfg.radii[k] << "->" << cfg.radii[k + 1] << " = " << rep.shell_difference[k] << "\n";
  for (std::size_t k = 0; k < rep.decay.size(); ++k)
    os << "decay rho=" << rep.probe_radii[k] << " sup|Df - l| = " << rep.decay[k] << "\n";
  write_monitors(dir / "monitors.csv", runs.back().run.series);
  std::ofstream field(dir / "field.dat");
  write_field(field, outer);

  bool decay_ok = true;
  for (std::size_t k = 1; k < rep.decay.size(); ++k) decay_ok = decay_ok && rep.decay[k] <= rep.decay[k - 1];
  bool agreement_ok = true;
  for (std::size_t k = 1; k < rep.shell_difference.size(); ++k)
    agreement_ok = agreement_ok && rep.shell_difference[k] <= rep.shell_difference[k - 1];
  os << "decay_non_increasing = " << (decay_ok ? "true" : "false")
     << "\nshell_agreement_improving = " << (agreement_ok ? "true" : "false") << "\n";

  s.outcome = exit_code == kExitOk ? "converged" : to_string(rep.shells.back().outcome);
  if (exit_code == kExitOk && !agreement_ok) {
    exit_code = kExitExteriorWorsening;
    s.outcome = "agreement_worsening";
  } else if (exit_code == kExitOk && !decay_ok) {
    exit_code = kExitInvariant;
    s.outcome = "decay_not_monotone";
  }
  s.exit_code = exit_code;
  if (report_out) *report_out = rep;
  return s;
}

RunSummary run(const RunConfig& cfg, bool force) {
  switch (cfg.mode) {
    case Mode::Solve: return run_solve(cfg, force);
    case Mode::CheckHypothesis: return run_check(cfg);
    case Mode::DensityOracle: return run_density_oracle(cfg);
    case Mode::Exterior: return run_exterior(cfg, force);
  }
  throw ConfigError("unknown mode");
}

}  // namespace mssflow
