#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/iostream.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <iostream>
#include <sstream>

#include "bilayer/app.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace bilayer;

namespace {

Eigen::MatrixXd vertex_array(const TriangleMesh& mesh) {
  Eigen::MatrixXd out(mesh.num_vertices(), 2);
  for (int v = 0; v < mesh.num_vertices(); ++v) out.row(v) = mesh.vertices()[v].transpose();
  return out;
}

Eigen::MatrixXi triangle_array(const TriangleMesh& mesh) {
  Eigen::MatrixXi out(mesh.num_triangles(), 3);
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int i = 0; i < 3; ++i) out(t, i) = mesh.triangles()[t][i];
  return out;
}

Eigen::MatrixXd position_array(const DeformationField& y) {
  Eigen::MatrixXd out(y.num_vertices(), 3);
  for (int v = 0; v < y.num_vertices(); ++v) out.row(v) = y.position(v).transpose();
  return out;
}

}  // namespace

PYBIND11_MODULE(_bilayer, m) {
  m.doc() = "Bilayer plate bending with discrete Kirchhoff triangles and a constrained gradient flow";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<MeshError>(m, "MeshError", PyExc_ValueError);

  py::enum_<Pattern>(m, "Pattern")
      .value("nonsymmetric", Pattern::nonsymmetric)
      .value("symmetric", Pattern::symmetric);

  py::enum_<FlowMode>(m, "FlowMode")
      .value("isometry_flow", FlowMode::isometry_flow)
      .value("penalized_flow", FlowMode::penalized_flow);

  py::enum_<Termination>(m, "Termination")
      .value("running", Termination::running)
      .value("converged", Termination::converged)
      .value("max_iters", Termination::max_iters)
      .value("solver_failure", Termination::solver_failure)
      .value("degeneracy", Termination::degeneracy);

  py::class_<TriangleMesh>(m, "TriangleMesh")
      .def_property_readonly("num_vertices", &TriangleMesh::num_vertices)
      .def_property_readonly("num_triangles", &TriangleMesh::num_triangles)
      .def_property_readonly("num_edges", &TriangleMesh::num_edges)
      .def_property_readonly("num_dirichlet_vertices", &TriangleMesh::num_dirichlet_vertices)
      .def_property_readonly("h_min", &TriangleMesh::h_min)
      .def_property_readonly("h_max", &TriangleMesh::h_max)
      .def_property_readonly("total_area", &TriangleMesh::total_area)
      .def_property_readonly("num_holes", &TriangleMesh::num_holes)
      .def_property_readonly("vertices", &vertex_array)
      .def_property_readonly("triangles", &triangle_array)
      .def_property_readonly("dirichlet_vertices", &TriangleMesh::dirichlet_vertices)
      .def("__repr__", [](const TriangleMesh& mesh) {
        return "<TriangleMesh " + std::to_string(mesh.num_vertices()) + " vertices, " +
               std::to_string(mesh.num_triangles()) + " triangles>";
      });

  m.def("rectangle_mesh", &generate_rectangle_mesh, "level"_a, "pattern"_a = Pattern::nonsymmetric);
  m.def("oshape_mesh", &generate_oshape_mesh, "level"_a, "pattern"_a = Pattern::symmetric);
  m.def(
      "clamp_rectangle",
      [](const TriangleMesh& mesh) { return mesh.with_dirichlet(rectangle_clamp_segments()); }, "mesh"_a);
  m.def(
      "clamp_oshape_corner",
      [](const TriangleMesh& mesh) { return mesh.with_dirichlet(oshape_corner_segments()); }, "mesh"_a);

  py::class_<DeformationField>(m, "DeformationField")
      .def(py::init<Eigen::VectorXd>(), "dofs"_a)
      .def_property_readonly("num_vertices", &DeformationField::num_vertices)
      .def_property_readonly("dofs", [](const DeformationField& y) { return y.dofs(); })
      .def_property_readonly("positions", &position_array);

  m.def("flat_embedding", &flat_embedding, "mesh"_a);
  m.def("isometry_defect", &isometry_defect, "y"_a);
  m.def("nodal_isometry_defect", &nodal_isometry_defect, "y"_a);

  py::class_<SimulationParams>(m, "SimulationParams")
      .def(py::init<>())
      .def_readwrite("alpha", &SimulationParams::alpha)
      .def_readwrite("tau", &SimulationParams::tau)
      .def_readwrite("eps_penalty", &SimulationParams::eps_penalty)
      .def_readwrite("eps_stop", &SimulationParams::eps_stop)
      .def_property(
          "body_force", [](const SimulationParams& p) { return Eigen::Vector3d(p.body_force); },
          [](SimulationParams& p, const Eigen::Vector3d& f) { p.body_force = f; })
      .def_readwrite("obstacle_height", &SimulationParams::obstacle_height)
      .def_readwrite("mode", &SimulationParams::mode)
      .def_readwrite("max_iters", &SimulationParams::max_iters)
      .def_readwrite("debug_checks", &SimulationParams::debug_checks);

  py::class_<EnergyModel>(m, "EnergyModel")
      .def(py::init<const TriangleMesh&, SimulationParams>(), "mesh"_a, "params"_a)
      .def("energy", &EnergyModel::energy, "y"_a)
      .def("bending", &EnergyModel::bending, "y"_a)
      .def("nonlinear", &EnergyModel::nonlinear, "y"_a)
      .def("penalty", &EnergyModel::penalty, "y"_a)
      .def("penetration", &EnergyModel::penetration, "y"_a)
      .def("nonlinear_rhs", &EnergyModel::nonlinear_rhs, "y"_a)
      .def_property_readonly("stiffness", &EnergyModel::stiffness);

  py::class_<HistoryRecord>(m, "HistoryRecord")
      .def_readonly("iter", &HistoryRecord::iter)
      .def_readonly("energy", &HistoryRecord::energy)
      .def_readonly("penalty_energy", &HistoryRecord::penalty_energy)
      .def_readonly("delta_iso", &HistoryRecord::delta_iso)
      .def_readonly("delta_pen", &HistoryRecord::delta_pen)
      .def_readonly("update_norm", &HistoryRecord::update_norm);

  py::class_<RunReport>(m, "RunReport")
      .def_readonly("iterations", &RunReport::iterations)
      .def_readonly("final_energy", &RunReport::final_energy)
      .def_readonly("penalty_energy", &RunReport::penalty_energy)
      .def_readonly("delta_iso", &RunReport::delta_iso)
      .def_readonly("delta_pen", &RunReport::delta_pen)
      .def_readonly("last_update_norm", &RunReport::last_update_norm)
      .def_readonly("initial_energy", &RunReport::initial_energy)
      .def_readonly("max_energy_increase", &RunReport::max_energy_increase)
      .def_readonly("wall_time", &RunReport::wall_time)
      .def_readonly("reason", &RunReport::reason)
      .def_readonly("message", &RunReport::message)
      .def_property_readonly("converged", &RunReport::converged);

  py::class_<GradientFlow>(m, "GradientFlow")
      .def(py::init<const TriangleMesh&, SimulationParams, DeformationField, long>(), "mesh"_a, "params"_a,
           "initial"_a, "first_iteration"_a = 0, py::keep_alive<1, 2>())
      .def("step", &GradientFlow::step, py::call_guard<py::gil_scoped_release>())
      .def("run", [](GradientFlow& flow) {
        py::gil_scoped_release release;
        return flow.run();
      })
      .def_property_readonly("iteration", [](const GradientFlow& f) { return f.state().k; })
      .def_property_readonly("y", [](const GradientFlow& f) { return f.state().y; })
      .def_property_readonly("energy", [](const GradientFlow& f) { return f.state().energy; })
      .def_property_readonly("delta_iso", [](const GradientFlow& f) { return f.state().delta_iso; })
      .def_property_readonly("history", [](const GradientFlow& f) { return f.state().history; })
      .def_property_readonly("last_update", &GradientFlow::last_update);

  py::class_<RunConfig>(m, "RunConfig")
      .def_readwrite("experiment", &RunConfig::experiment)
      .def_readwrite("level", &RunConfig::level)
      .def_readwrite("pattern", &RunConfig::pattern)
      .def_readwrite("alpha", &RunConfig::alpha)
      .def_readwrite("tau", &RunConfig::tau)
      .def_readwrite("tau_scale", &RunConfig::tau_scale)
      .def_readwrite("tau_divisor", &RunConfig::tau_divisor)
      .def_readwrite("mode", &RunConfig::mode)
      .def_readwrite("eps", &RunConfig::eps)
      .def_readwrite("cf", &RunConfig::cf)
      .def_readwrite("obstacle_height", &RunConfig::obstacle_height)
      .def_readwrite("eps_stop", &RunConfig::eps_stop)
      .def_readwrite("max_iters", &RunConfig::max_iters)
      .def_readwrite("out", &RunConfig::out)
      .def_readwrite("vtk_every", &RunConfig::vtk_every)
      .def_readwrite("resume", &RunConfig::resume)
      .def_readwrite("debug_checks", &RunConfig::debug_checks)
      .def_property_readonly("resolved_tau", &RunConfig::resolved_tau)
      .def("validate", &RunConfig::validate);

  m.def("preset", &preset, "experiment"_a);
  m.def("parse_config", &parse_config, "args"_a);
  m.def("build_mesh", &build_mesh, "config"_a);
  m.def("build_params", &build_params, "config"_a);
  m.def(
      "run_experiment",
      [](const RunConfig& config, bool verbose) {
        if (verbose) {
          py::scoped_ostream_redirect redirect(std::cout, py::module_::import("sys").attr("stdout"));
          return run_experiment(config, std::cout).report;
        }
        std::ostringstream sink;
        py::gil_scoped_release release;
        return run_experiment(config, sink).report;
      },
      "config"_a, "verbose"_a = false);
  m.def("read_history_csv", &read_history_csv, "path"_a);
  m.def("read_report", &read_key_values, "path"_a);

#ifdef BILAYER_VERSION
  m.attr("__version__") = BILAYER_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
