#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "magswim/harness.hpp"
#include "magswim/oracles.hpp"

namespace py = pybind11;
using namespace magswim;

namespace {

using RowPoints = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

RowPoints to_matrix(const Points& p) {
  RowPoints m(static_cast<Eigen::Index>(p.size()), 3);
  for (std::size_t i = 0; i < p.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = p[i].transpose();
  return m;
}

SimConfig parse_sim(const std::string& text) {
  const KeyValueConfig cfg = KeyValueConfig::parse(text);
  SimConfig c = sim_config_from(cfg);
  cfg.reject_unused();
  return c;
}

py::dict summary_dict(const Trajectory& t) {
  const RunSummary s = summarize(t);
  Eigen::VectorXd time(static_cast<Eigen::Index>(t.samples.size()));
  Points com;
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    time[static_cast<Eigen::Index>(i)] = t.samples[i].time;
    com.push_back(t.samples[i].com);
  }
  std::vector<double> per_cycle;
  for (const auto& c : t.cycles) per_cycle.push_back(c.blpc);
  py::dict d;
  d["blpc"] = s.blpc;
  d["regime"] = std::string(to_string(s.regime));
  d["cycles"] = s.cycles;
  d["steady"] = s.steady;
  d["q_total"] = s.q_total;
  d["cycle_blpc"] = per_cycle;
  d["time"] = time;
  d["com"] = to_matrix(com);
  d["lbar"] = t.lbar;
  return d;
}

py::dict mesh_dict(const SwimmerMesh& m) {
  RowPoints mag = to_matrix(m.magnetization);
  Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor> tri(static_cast<Eigen::Index>(m.triangles.size()), 3);
  for (std::size_t i = 0; i < m.triangles.size(); ++i)
    for (int k = 0; k < 3; ++k) tri(static_cast<Eigen::Index>(i), k) = m.triangles[i][k];
  py::dict d;
  d["nodes"] = to_matrix(m.nodes);
  d["triangles"] = tri;
  d["magnetization"] = mag;
  d["thickness"] = m.thickness;
  d["active_area_fraction"] = active_area_fraction(m);
  d["mean_edge_length"] = mean_edge_length(m);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Magneto-elastic sheet swimmers in Stokes flow";
  mod.attr("__version__") = std::string(kCodeVersion);

  py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
  py::register_exception<ModelError>(mod, "ModelError", PyExc_RuntimeError);
  py::register_exception<IoError>(mod, "IoError", PyExc_OSError);

  mod.def(
      "characteristic_length",
      [](double length, double width) {
        SwimmerDesign d;
        d.length = length;
        d.width = width;
        return characteristic_length(d);
      },
      py::arg("length"), py::arg("width"));

  mod.def(
      "build_swimmer",
      [](const std::string& kind, double ds, std::optional<double> l_over_w, std::optional<double> l0_over_l) {
        const DesignKind k = design_kind_from_string(kind);
        const DesignDefaults dd = design_defaults(k);
        SwimmerDesign d;
        d.kind = k;
        d.width = d.length / l_over_w.value_or(dd.l_over_w);
        d.magnetic_fraction = l0_over_l.value_or(dd.l0_over_l);
        d.mesh_resolution = ds > 0 ? ds : default_mesh_resolution(d.length, d.width);
        py::dict m = mesh_dict(build_swimmer(d));
        m["lbar"] = characteristic_length(d);
        return m;
      },
      py::arg("kind"), py::arg("ds") = 0.0, py::arg("l_over_w") = py::none(), py::arg("l0_over_l") = py::none());

  mod.def(
      "nondim_to_physical",
      [](double mn, double fn, double youngs_modulus, double thickness, double lbar, double magnetic_length,
         double magnetization, double frequency) {
        const auto p = nondim_to_physical(
            mn, fn, NondimAnchors{youngs_modulus, thickness, lbar, magnetic_length, magnetization, frequency});
        return py::make_tuple(p.field, p.viscosity);
      },
      py::arg("mn"), py::arg("fn"), py::arg("youngs_modulus"), py::arg("thickness"), py::arg("lbar"),
      py::arg("magnetic_length"), py::arg("magnetization"), py::arg("frequency"),
      "(B [T], mu [Pa s]) for the given Mn and Fn");

  mod.def(
      "nondim_numbers",
      [](double field, double viscosity, double youngs_modulus, double thickness, double lbar,
         double magnetic_length, double magnetization, double frequency) {
        const NondimAnchors a{youngs_modulus, thickness, lbar, magnetic_length, magnetization, frequency};
        return py::make_tuple(magnetoelastic_number(field, a), fluid_number(viscosity, a));
      },
      py::arg("field"), py::arg("viscosity"), py::arg("youngs_modulus"), py::arg("thickness"), py::arg("lbar"),
      py::arg("magnetic_length"), py::arg("magnetization"), py::arg("frequency"), "(Mn, Fn)");

  mod.def(
      "stokeslet",
      [](const Vec3& r, const Vec3& f, double viscosity, double eps) {
        return stokeslet_regularized(r, f, viscosity, eps);
      },
      py::arg("r"), py::arg("f"), py::arg("viscosity"), py::arg("eps"));

  mod.def("sphere_drag_ratio", &sphere_drag_ratio, py::arg("n_points"), py::arg("blob_factor") = kDefaultBlobFactor,
          py::call_guard<py::gil_scoped_release>());

  mod.def(
      "simulate",
      [](const std::string& config_text) {
        const SimConfig c = parse_sim(config_text);
        Trajectory t;
        {
          py::gil_scoped_release release;
          t = run(c);
        }
        return summary_dict(t);
      },
      py::arg("config"), "Run one simulation from 'key = value' config text");

  mod.def(
      "sweep",
      [](const std::string& config_text, int workers) {
        const SweepSpec spec = sweep_spec_from(KeyValueConfig::parse(config_text));
        std::vector<SweepRecord> rows;
        {
          py::gil_scoped_release release;
          rows = run_sweep(spec, workers, 0, [](const SweepRecord&) {});
        }
        std::ostringstream csv;
        csv << sweep_csv_header(spec) << '\n';
        for (const auto& r : rows) csv << format_sweep_row(r) << '\n';
        return csv.str();
      },
      py::arg("config"), py::arg("workers") = 1, "Run a sweep and return its CSV text");

  mod.def(
      "validate",
      []() {
        std::vector<OracleResult> results;
        {
          py::gil_scoped_release release;
          results = run_oracles();
        }
        py::list out;
        for (const auto& r : results) {
          py::dict d;
          d["name"] = r.name;
          d["passed"] = r.passed;
          d["value"] = r.value;
          d["target"] = r.target;
          d["detail"] = r.detail;
          out.append(d);
        }
        return out;
      },
      "Built-in oracle suite");

  mod.def("config_hash", [](const std::string& text) { return fnv1a_hex(KeyValueConfig::parse(text).canonical()); },
          py::arg("config"));
}
