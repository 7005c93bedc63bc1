#include "mssflow/driver.hpp"
#include "mssflow/error.hpp"
#include "mssflow/shrinker.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace mssflow;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Vec to_vec(const Array& a) {
  if (a.ndim() != 1 || a.shape(0) > 2 * kMaxDim) throw PreconditionError("expected a short 1-d array");
  Vec v(a.shape(0));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) v(i) = a.at(i);
  return v;
}

Mat to_mat(const Array& a) {
  if (a.ndim() != 2 || a.shape(0) > kMaxDim || a.shape(1) > kMaxDim) throw PreconditionError("expected a small 2-d array");
  Mat m(a.shape(0), a.shape(1));
  for (py::ssize_t i = 0; i < a.shape(0); ++i)
    for (py::ssize_t j = 0; j < a.shape(1); ++j) m(i, j) = a.at(i, j);
  return m;
}

Array from_vec(const Vec& v) {
  const std::vector<double> data(v.data(), v.data() + v.size());
  return Array(std::vector<py::ssize_t>{v.size()}, data.data());
}

Array from_mat(const Mat& m) {
  std::vector<double> data;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return Array(std::vector<py::ssize_t>{m.rows(), m.cols()}, data.data());
}

PointJet to_jet(const Array& jac, const std::vector<Array>& hess) {
  const Mat j = to_mat(jac);
  PointJet jet = PointJet::zero(static_cast<int>(j.cols()), static_cast<int>(j.rows()));
  jet.jac = j;
  if (static_cast<int>(hess.size()) != jet.m()) throw PreconditionError("need one Hessian per component");
  for (int a = 0; a < jet.m(); ++a) jet.hess[a] = to_mat(hess[a]);
  return jet;
}

std::vector<Vec> to_vecs(const std::vector<Array>& l) {
  std::vector<Vec> out;
  for (const auto& a : l) out.push_back(to_vec(a));
  return out;
}

// (nodes, m) values and (nodes, n) positions over in-domain lattice nodes.
py::dict state_arrays(const GraphState& s) {
  const auto nodes = s.grid->domain_nodes();
  Array x({static_cast<py::ssize_t>(nodes.size()), static_cast<py::ssize_t>(s.n())});
  Array f({static_cast<py::ssize_t>(nodes.size()), static_cast<py::ssize_t>(s.m)});
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Vec p = s.grid->position(nodes[k]);
    for (int i = 0; i < s.n(); ++i) x.mutable_at(k, i) = p(i);
    for (int a = 0; a < s.m; ++a) f.mutable_at(k, a) = s.f[static_cast<std::size_t>(nodes[k]) * s.m + a];
  }
  py::dict d;
  d["x"] = x;
  d["f"] = f;
  d["t"] = s.t;
  return d;
}

py::dict monitor_arrays(const std::vector<MonitorRecord>& series) {
  const std::vector<std::pair<const char*, double MonitorRecord::*>> cols = {
      {"t", &MonitorRecord::t},
      {"max_lambda", &MonitorRecord::max_lambda},
      {"min_star_omega", &MonitorRecord::min_star_omega},
      {"min_p_eig", &MonitorRecord::min_p_eig},
      {"area", &MonitorRecord::area},
      {"dissipation", &MonitorRecord::dissipation},
      {"residual_sup", &MonitorRecord::residual_sup},
      {"boundary_grad_sup", &MonitorRecord::boundary_grad_sup},
  };
  py::dict d;
  for (const auto& [name, field] : cols) {
    std::vector<double> v;
    for (const auto& r : series) v.push_back(r.*field);
    d[name] = Array(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())}, v.data());
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Minimal surface system flow solver";

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UndercoverageError>(m, "UndercoverageError", PyExc_RuntimeError);
  py::register_exception<BlowUpError>(m, "BlowUpError", PyExc_RuntimeError);

  m.def("singular_values", [](const Array& jac) { return from_vec(singular_values(to_mat(jac)).lambdas); },
        py::arg("jac"));
  m.def("star_omega", [](const Array& lambdas) { return star_omega(to_vec(lambdas)); }, py::arg("lambdas"));
  m.def("mss_residual", [](const Array& jac, const std::vector<Array>& hess) { return from_vec(mss_residual(to_jet(jac, hess))); },
        py::arg("jac"), py::arg("hess"));
  m.def("shrinker_residual",
        [](const Array& x, const Array& value, const Array& jac, const std::vector<Array>& hess, double c) {
          PointJet jet = to_jet(jac, hess);
          jet.x = to_vec(x);
          jet.value = to_vec(value);
          return from_vec(shrinker_residual(jet, c));
        },
        py::arg("x"), py::arg("value"), py::arg("jac"), py::arg("hess"), py::arg("c"));

  py::class_<DomainSpec>(m, "Domain")
      .def_static("box", [](const Array& lo, const Array& hi) { return DomainSpec::box(to_vec(lo), to_vec(hi)); })
      .def_static("ball", [](const Array& c, double r) { return DomainSpec::ball(to_vec(c), r); })
      .def_static("annulus", [](const Array& c, double r_in, double r_out) { return DomainSpec::annulus(to_vec(c), r_in, r_out); })
      .def_static("exterior", [](const Array& c, double r_in, double big_r) { return DomainSpec::exterior(to_vec(c), r_in, big_r); })
      .def("signed_distance", [](const DomainSpec& s, const Array& x) { return s.signed_distance(to_vec(x)); })
      .def_property("open_faces", [](const DomainSpec& s) { return s.open_faces; },
                    [](DomainSpec& s, std::vector<bool> v) { s.open_faces = std::move(v); })
      .def_property_readonly("dim", [](const DomainSpec& s) { return s.dim; })
      .def("__repr__", &DomainSpec::describe);

  py::class_<BoundaryGeometry>(m, "BoundaryGeometry")
      .def_readonly("eta0", &BoundaryGeometry::eta0)
      .def_readonly("c0", &BoundaryGeometry::c0)
      .def_readonly("rule", &BoundaryGeometry::rule);
  m.def("estimate_c0_eta0", &estimate_c0_eta0, py::arg("domain"));
  m.def("delta0", &delta0, py::arg("geometry"), py::arg("mu") = 1.0);

  py::class_<Grid, std::shared_ptr<Grid>>(m, "Grid")
      .def_readonly("n", &Grid::n)
      .def_readonly("h_min", &Grid::h_min)
      .def_property_readonly("interior_count", [](const Grid& g) { return g.interior.size(); })
      .def_property_readonly("sample_count", [](const Grid& g) { return g.samples.size(); })
      .def_property_readonly("dims", [](const Grid& g) { return g.dims; });
  m.def("build_grid", [](const DomainSpec& spec, double h) { return std::make_shared<Grid>(build_grid(spec, h)); },
        py::arg("domain"), py::arg("h"));

  py::class_<BoundaryMap>(m, "BoundaryMap")
      .def_static("constant", [](int n, const Array& v) { return BoundaryMap::constant(n, to_vec(v)); })
      .def_static("linear", [](const Array& off, const Array& a) { return BoundaryMap::linear(to_vec(off), to_mat(a)); })
      .def_static("trigonometric",
                  [](const Array& amp, const std::vector<Array>& wave, const Array& phase, const Array& off) {
                    return BoundaryMap::trigonometric(to_vec(amp), to_vecs(wave), to_vec(phase), to_vec(off));
                  },
                  py::arg("amplitude"), py::arg("wave"), py::arg("phase"), py::arg("offset"))
      .def_static("lawson_osserman", [](int n, double scale, int k, const Array& c) {
        return BoundaryMap::lawson_osserman(n, scale, k, to_vec(c));
      })
      .def_static("lawson_osserman_hopf", [](double scale, const Array& c) { return BoundaryMap::lawson_osserman_hopf(scale, to_vec(c)); })
      .def_static("dipole", [](const Array& amp, const std::vector<Array>& dir, const Array& c) {
        return BoundaryMap::dipole(to_vec(amp), to_vecs(dir), to_vec(c));
      })
      .def_property_readonly("n", &BoundaryMap::n)
      .def_property_readonly("m", &BoundaryMap::m)
      .def_property_readonly("family", &BoundaryMap::family_name)
      .def("value", [](const BoundaryMap& p, const Array& x) { return from_vec(p.value(to_vec(x))); })
      .def("jacobian", [](const BoundaryMap& p, const Array& x) { return from_mat(p.jet(to_vec(x)).jac); })
      .def("scaled", &BoundaryMap::scaled);

  py::class_<HypothesisReport>(m, "HypothesisReport")
      .def_property_readonly("condition", [](const HypothesisReport& r) { return std::string(1, r.condition); })
      .def_readonly("w_psi", &HypothesisReport::w_psi)
      .def_readonly("sup_dpsi_band", &HypothesisReport::sup_dpsi_band)
      .def_readonly("sup_d2psi_band", &HypothesisReport::sup_d2psi_band)
      .def_readonly("sup_dpsi_global", &HypothesisReport::sup_dpsi_global)
      .def_readonly("sup_d2psi_global", &HypothesisReport::sup_d2psi_global)
      .def_readonly("delta", &HypothesisReport::delta)
      .def_readonly("delta0", &HypothesisReport::delta0)
      .def_readonly("lhs", &HypothesisReport::lhs_condition)
      .def_readonly("threshold", &HypothesisReport::threshold)
      .def_readonly("passed", &HypothesisReport::pass)
      .def_readonly("eps", &HypothesisReport::eps)
      .def("__str__", &HypothesisReport::to_text);
  m.def("check_condition_A",
        [](const BoundaryMap& psi, const Grid& g, double delta) {
          return check_condition_A(psi, g, estimate_c0_eta0(g.spec), delta);
        },
        py::arg("psi"), py::arg("grid"), py::arg("delta"));
  m.def("check_condition_B",
        [](const BoundaryMap& psi, const Grid& g, double delta, double c) {
          return check_condition_B(psi, g, estimate_c0_eta0(g.spec), delta, c);
        },
        py::arg("psi"), py::arg("grid"), py::arg("delta"), py::arg("c"));
  m.def("boundary_gradient_bound",
        [](double w, double dpsi, double d2psi, double delta, double mu, int n) {
          return boundary_gradient_bound({w, dpsi, d2psi}, delta, mu, n);
        },
        py::arg("w"), py::arg("dpsi"), py::arg("d2psi"), py::arg("delta"), py::arg("mu") = 1.0, py::arg("n") = 2);

  m.def(
      "solve",
      [](std::shared_ptr<Grid> grid, const BoundaryMap& psi, double cfl, double tol_residual, long max_steps,
         long monitor_every) {
        FlowOptions o;
        o.cfl = cfl;
        o.tol_residual = tol_residual;
        o.max_steps = max_steps;
        o.monitor_every = monitor_every;
        const FlowSolver solver(grid, psi, o);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = solver.run_to_steady(solver.initial_state());
        }
        py::dict d = state_arrays(r.state);
        d["outcome"] = to_string(r.outcome);
        d["steps"] = r.steps;
        d["dt"] = solver.dt();
        d["residual"] = residual_sup(r.state);
        d["monitors"] = monitor_arrays(r.series);
        return d;
      },
      py::arg("grid"), py::arg("psi"), py::arg("cfl") = 0.9, py::arg("tol_residual") = 1e-6,
      py::arg("max_steps") = 200000, py::arg("monitor_every") = 100);

  m.def(
      "gaussian_density",
      [](std::shared_ptr<Grid> grid, const std::function<Array(Array)>& f, int m_out, const Array& center, double gap,
         double cutoff) {
        const GraphState s = sampled_state(grid, m_out, [&](const Vec& x) { return to_vec(f(from_vec(x))); });
        return gaussian_density(s, DensityQuery{to_vec(center), gap, cutoff});
      },
      py::arg("grid"), py::arg("f"), py::arg("m"), py::arg("center"), py::arg("time_gap"), py::arg("cutoff") = 1.0);

  m.def(
      "run_config",
      [](const std::string& path, const std::string& out_dir, bool force) {
        RunConfig cfg = load_config(path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        RunSummary s;
        {
          py::gil_scoped_release release;
          s = run(cfg, force);
        }
        py::dict d;
        d["exit_code"] = s.exit_code;
        d["mode"] = to_string(s.mode);
        d["outcome"] = s.outcome;
        d["residual"] = s.residual;
        d["max_lambda"] = s.max_lambda;
        d["line"] = s.line();
        return d;
      },
      py::arg("path"), py::arg("out_dir") = "", py::arg("force") = false);
}
