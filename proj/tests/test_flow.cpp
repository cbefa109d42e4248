#include <cmath>
#include <cstring>

#include "doctest.h"

#include "bilayer/flow.hpp"

using namespace bilayer;

namespace {

TriangleMesh clamped_oshape(int level) {
  return generate_oshape_mesh(level, Pattern::symmetric).with_dirichlet(oshape_corner_segments());
}

SimulationParams bilayer_params(double alpha, double tau, long max_iters) {
  SimulationParams p;
  p.alpha = alpha;
  p.tau = tau;
  p.max_iters = max_iters;
  return p;
}

}  // namespace

TEST_CASE("flat plate without forcing is stationary") {
  const TriangleMesh mesh = clamped_oshape(1);
  GradientFlow flow(mesh, bilayer_params(0.0, 0.1, 100), flat_embedding(mesh));
  const RunReport r = flow.run();
  CHECK(r.reason == Termination::converged);
  CHECK(r.iterations == 1);
  CHECK(r.last_update_norm <= 1e-12);
  CHECK(flow.last_update().cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("bilayer flow dissipates energy") {
  const TriangleMesh mesh = clamped_oshape(1);
  SimulationParams p = bilayer_params(0.5, 0.1, 150);
  p.debug_checks = true;
  GradientFlow flow(mesh, p, flat_embedding(mesh));
  const DeformationField start = flow.state().y;
  const RunReport r = flow.run();
  CHECK(r.reason == Termination::max_iters);
  CHECK(r.iterations == 150);
  REQUIRE(flow.state().history.size() == 150);
  double previous = r.initial_energy, dissipation = 0.0;
  for (const HistoryRecord& h : flow.state().history) {
    CHECK(h.energy <= previous + 1e-10);
    previous = h.energy;
    dissipation += p.tau * h.update_norm * h.update_norm;
    CHECK(r.initial_energy - h.energy >= dissipation - 1e-10);
  }
  CHECK(flow.state().dissipation == doctest::Approx(dissipation));
  CHECK(r.max_energy_increase <= 1e-10);
  CHECK(r.final_energy < r.initial_energy - 1.0);

  // clamped dofs never move
  const DeformationField& y = flow.state().y;
  for (int d = 0; d < y.dofs().size(); ++d)
    if (flow.dof_map().is_fixed(d)) CHECK(y.dofs()[d] == start.dofs()[d]);
}

TEST_CASE("updates satisfy the linearized constraint") {
  const TriangleMesh mesh = clamped_oshape(1);
  GradientFlow flow(mesh, bilayer_params(0.5, 0.1, 30), flat_embedding(mesh));
  for (int k = 0; k < 30; ++k) {
    const DeformationField before = flow.state().y;
    flow.step();
    CHECK(flow.state().constraint_residual < 1e-10);
    const double scale = flow.last_update().cwiseAbs().maxCoeff();
    CHECK(linearized_constraint_residual(before, flow.last_update(), flow.dof_map()) <= 1e-10 * std::max(1.0, scale));
  }
}

TEST_CASE("isometry defect grows monotonically and telescopes") {
  const TriangleMesh mesh = clamped_oshape(1);
  GradientFlow flow(mesh, bilayer_params(0.5, 0.1, 60), flat_embedding(mesh));
  flow.run();
  double previous = 0.0;
  for (const HistoryRecord& h : flow.state().history) {
    CHECK(h.delta_iso >= previous - 1e-14);
    previous = h.delta_iso;
  }
  CHECK(previous > 0.0);
  CHECK(previous == doctest::Approx(isometry_defect(flow.state().y)));
}

TEST_CASE("identical inputs give bit-identical runs") {
  const TriangleMesh mesh = clamped_oshape(0);
  GradientFlow a(mesh, bilayer_params(0.5, 0.2, 20), flat_embedding(mesh));
  GradientFlow b(mesh, bilayer_params(0.5, 0.2, 20), flat_embedding(mesh));
  a.run();
  b.run();
  const auto& ya = a.state().y.dofs();
  const auto& yb = b.state().y.dofs();
  CHECK(std::memcmp(ya.data(), yb.data(), sizeof(double) * ya.size()) == 0);
}

TEST_CASE("max_iters caps the run") {
  const TriangleMesh mesh = clamped_oshape(0);
  const RunReport r = GradientFlow(mesh, bilayer_params(0.5, 0.1, 1), flat_embedding(mesh)).run();
  CHECK(r.reason == Termination::max_iters);
  CHECK(r.iterations == 1);
  CHECK(to_string(r.reason) == "max_iters");
  CHECK_FALSE(r.converged());
}

TEST_CASE("degenerate iterates stop the run") {
  const TriangleMesh mesh = clamped_oshape(0);
  DeformationField y = flat_embedding(mesh);
  int v = 0;
  while (mesh.dirichlet_vertices()[v]) ++v;
  y.set_gradient(v, Grad32::Zero());
  GradientFlow flow(mesh, bilayer_params(0.5, 0.1, 10), y);
  const RunReport r = flow.run();
  CHECK(r.reason == Termination::degeneracy);
  CHECK_FALSE(r.message.empty());
  CHECK(r.iterations == 0);
}

TEST_CASE("invalid setups are rejected") {
  const TriangleMesh mesh = clamped_oshape(0);
  CHECK_THROWS_AS(GradientFlow(mesh, bilayer_params(0.5, -0.1, 10), flat_embedding(mesh)), std::invalid_argument);
  CHECK_THROWS_AS(GradientFlow(mesh, bilayer_params(0.5, 0.1, 10), DeformationField(3)), std::invalid_argument);
  DeformationField bad = flat_embedding(mesh);
  bad.dofs()[0] = std::nan("");
  CHECK_THROWS_AS(GradientFlow(mesh, bilayer_params(0.5, 0.1, 10), bad), std::invalid_argument);
}

TEST_CASE("penalized flow decreases the penalized energy") {
  const TriangleMesh mesh = clamped_oshape(0);
  SimulationParams p;
  p.mode = FlowMode::penalized_flow;
  p.tau = 1.0 / 50;
  p.eps_penalty = 0.25;
  p.body_force = Vec3(0, 0, 2e-2);
  p.max_iters = 1500;
  GradientFlow flow(mesh, p, flat_embedding(mesh));
  const RunReport r = flow.run();
  double previous = r.initial_energy;
  for (const HistoryRecord& h : flow.state().history) {
    CHECK(h.energy + p.tau * h.update_norm * h.update_norm <= previous + 1e-12);
    previous = h.energy;
  }
  CHECK(r.max_energy_increase <= 1e-10);
  // the plate reached the obstacle
  CHECK(r.delta_pen > 0.0);
  CHECK(r.penalty_energy > 0.0);
  CHECK(r.penalty_energy == doctest::Approx(flow.model().penalty(flow.state().y)));
  CHECK(r.final_energy == doctest::Approx(flow.model().energy(flow.state().y) + r.penalty_energy));
}

TEST_CASE("step size safeguard warns but never aborts") {
  const TriangleMesh mesh = clamped_oshape(3);
  const double h = 1.0 / 8;
  SimulationParams p;
  p.tau = h / 5;
  CHECK(step_size_safeguard(p, mesh).empty());
  p.tau = 1.0;
  CHECK(step_size_safeguard(p, mesh).size() == 1);

  p.mode = FlowMode::penalized_flow;
  p.eps_penalty = 0.125;
  p.body_force = Vec3(0, 0, 6e-3);
  p.tau = h / 50;
  CHECK(step_size_safeguard(p, mesh).empty());
  p.tau = 0.05;
  const auto w = step_size_safeguard(p, mesh);
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("c_f") != std::string::npos);
  SafeguardThresholds strict;
  strict.penalized = 1.0;
  p.tau = h / 50;
  CHECK(step_size_safeguard(p, mesh, strict).size() == 1);
  p.body_force = Vec3::Zero();
  CHECK(step_size_safeguard(p, mesh, strict).empty());
}
