#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "bilayer/constraints.hpp"
#include "bilayer/dkt.hpp"
#include "bilayer/energy.hpp"
#include "bilayer/linsolve.hpp"
#include "bilayer/mesh.hpp"

namespace bilayer {

enum class Termination { running, converged, max_iters, solver_failure, degeneracy };

std::string to_string(Termination reason);

struct HistoryRecord {
  long iter = 0;
  double energy = 0.0;          // flow energy: includes the penalty in penalized mode
  double penalty_energy = 0.0;
  double delta_iso = 0.0;
  double delta_pen = 0.0;
  double update_norm = 0.0;     // ||grad nabla_h d_t y^k||
};

struct FlowState {
  long k = 0;
  DeformationField y;
  double energy = 0.0;
  double penalty_energy = 0.0;
  double delta_iso = 0.0;
  double delta_pen = 0.0;
  double last_update_norm = 0.0;
  double constraint_residual = 0.0;  // ||B d||_inf / ||d||_inf of the last update
  double initial_energy = 0.0;
  double max_energy_increase = 0.0;  // largest E^k - E^{k-1} seen so far
  double dissipation = 0.0;          // tau sum_k ||d_t y^k||_*^2
  std::vector<HistoryRecord> history;
};

struct RunReport {
  long iterations = 0;
  double final_energy = 0.0;  // flow energy
  double penalty_energy = 0.0;
  double delta_iso = 0.0;
  double delta_pen = 0.0;
  double last_update_norm = 0.0;
  double initial_energy = 0.0;
  double max_energy_increase = 0.0;
  double wall_time = 0.0;  // seconds
  Termination reason = Termination::running;
  std::string message;

  bool converged() const { return reason == Termination::converged; }
};

/// Semi-implicit discrete gradient flow with linearized isometry constraints.
/// Each step solves
///   (1+tau) K d + B^T lambda = -K y + r_alpha(y) + f   [ + penalty terms ]
///   B(y) d = 0
/// for the free dofs and sets y <- y + tau d. In penalized mode the primal
/// block gains (tau/eps) M3 and the right hand side the convex-concave terms
/// -(1/eps) M3 y3 - (1/2 eps) M3 p_ccv(y3).
class GradientFlow {
 public:
  using Observer = std::function<void(const FlowState&, const HistoryRecord&)>;

  // first_iteration > 0 continues the numbering of a resumed run.
  GradientFlow(const TriangleMesh& mesh, SimulationParams params, DeformationField initial,
               long first_iteration = 0);

  const FlowState& state() const { return state_; }
  const EnergyModel& model() const { return model_; }
  const DktDofMap& dof_map() const { return map_; }
  const SimulationParams& params() const { return model_.params(); }

  // One update; throws SolverError or DegeneracyError.
  const HistoryRecord& step();

  RunReport run(const Observer& observer = {});

  // Update of the last step (full dof numbering), zero before the first step.
  const Eigen::VectorXd& last_update() const { return last_update_; }

 private:
  Eigen::VectorXd flow_rhs(const DeformationField& y) const;
  void check_nodal_identities(const DeformationField& previous, const Eigen::VectorXd& update) const;

  EnergyModel model_;
  DktDofMap map_;
  Eigen::SparseMatrix<double> primal_;
  SaddlePointSolver solver_;
  FlowState state_;
  Eigen::VectorXd last_update_;
};

struct SafeguardThresholds {
  double isometry = 1.0;    // warn when tau |log h_min| exceeds this
  double penalized = 16.0;  // warn when tau > penalized * c_f * eps
};

/// Step size heuristics; returns warnings and never aborts.
std::vector<std::string> step_size_safeguard(const SimulationParams& params, const TriangleMesh& mesh,
                                             const SafeguardThresholds& thresholds = {});

}  // namespace bilayer
