#include "bilayer/flow.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace bilayer {

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::running: return "running";
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    case Termination::solver_failure: return "solver_failure";
    case Termination::degeneracy: return "degeneracy";
  }
  return "unknown";
}

namespace {

Eigen::SparseMatrix<double> restrict_to_free(const Eigen::SparseMatrix<double>& K, const DktDofMap& map) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(K.nonZeros()));
  for (int k = 0; k < K.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it) {
      const int i = map.free_index(static_cast<int>(it.row()));
      const int j = map.free_index(static_cast<int>(it.col()));
      if (i >= 0 && j >= 0) triplets.emplace_back(i, j, it.value());
    }
  Eigen::SparseMatrix<double> out(map.num_free(), map.num_free());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

SimulationParams validated(SimulationParams params) {
  params.validate();
  return params;
}

}  // namespace

GradientFlow::GradientFlow(const TriangleMesh& mesh, SimulationParams params, DeformationField initial,
                           long first_iteration)
    : model_(mesh, validated(std::move(params))), map_(mesh) {
  if (initial.num_vertices() != mesh.num_vertices())
    throw std::invalid_argument("initial deformation does not match the mesh");
  if (!initial.all_finite()) throw std::invalid_argument("initial deformation is not finite");
  if (first_iteration < 0) throw std::invalid_argument("first iteration must be nonnegative");

  const SimulationParams& p = model_.params();
  primal_ = (1.0 + p.tau) * restrict_to_free(model_.stiffness(), map_);
  if (p.mode == FlowMode::penalized_flow) {
    const Eigen::VectorXd& m = model_.vertex_masses();
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      const int i = map_.free_index(DktDofMap::index(v, 2, kValue));
      if (i >= 0) primal_.coeffRef(i, i) += p.tau / p.eps_penalty * m[v];
    }
  }
  primal_.makeCompressed();

  state_.k = first_iteration;
  state_.y = std::move(initial);
  state_.energy = model_.flow_energy(state_.y);
  state_.initial_energy = state_.energy;
  state_.penalty_energy = p.mode == FlowMode::penalized_flow ? model_.penalty(state_.y) : 0.0;
  state_.delta_iso = isometry_defect(state_.y);
  state_.delta_pen = model_.penetration(state_.y);
  last_update_ = Eigen::VectorXd::Zero(map_.num_dofs());
}

Eigen::VectorXd GradientFlow::flow_rhs(const DeformationField& y) const {
  const SimulationParams& p = model_.params();
  Eigen::VectorXd rhs = -(model_.stiffness() * y.dofs());
  rhs += model_.nonlinear_rhs(y);
  rhs += model_.force();
  if (p.mode == FlowMode::penalized_flow) {
    const Eigen::VectorXd& m = model_.vertex_masses();
    for (int v = 0; v < y.num_vertices(); ++v) {
      const int dof = DktDofMap::index(v, 2, kValue);
      const double s = y.dofs()[dof];
      const double p_ccv = penalty_pieces(s, p.obstacle_height).derivative;
      rhs[dof] -= m[v] * (s / p.eps_penalty + p_ccv / (2.0 * p.eps_penalty));
    }
  }
  return rhs;
}

const HistoryRecord& GradientFlow::step() {
  const SimulationParams& p = model_.params();
  const DeformationField& y = state_.y;

  const Eigen::VectorXd rhs = flow_rhs(y);
  Eigen::VectorXd rhs_free(map_.num_free());
  for (int i = 0; i < map_.num_free(); ++i) rhs_free[i] = rhs[map_.free_dofs()[i]];

  const ConstraintSystem constraints = tangent_constraint_matrix(y, map_);
  const SaddlePointSolution sol = solver_.solve(primal_, constraints.B, rhs_free);

  Eigen::VectorXd update = Eigen::VectorXd::Zero(map_.num_dofs());
  for (int i = 0; i < map_.num_free(); ++i) update[map_.free_dofs()[i]] = sol.primal[i];

  const double d_inf = sol.primal.size() ? sol.primal.cwiseAbs().maxCoeff() : 0.0;
  state_.constraint_residual =
      d_inf > 0.0 && constraints.num_rows() > 0
          ? (constraints.B * sol.primal).cwiseAbs().maxCoeff() / d_inf
          : 0.0;

  if (p.debug_checks) check_nodal_identities(y, update);

  DeformationField next(y.dofs() + p.tau * update);
  const double energy = model_.flow_energy(next);

  HistoryRecord rec;
  rec.iter = state_.k + 1;
  rec.energy = energy;
  rec.penalty_energy = p.mode == FlowMode::penalized_flow ? model_.penalty(next) : 0.0;
  rec.delta_iso = isometry_defect(next);
  rec.delta_pen = model_.penetration(next);
  rec.update_norm = std::sqrt(std::max(0.0, update.dot(model_.stiffness() * update)));

  state_.max_energy_increase = std::max(state_.max_energy_increase, energy - state_.energy);
  state_.dissipation += p.tau * rec.update_norm * rec.update_norm;
  state_.k = rec.iter;
  state_.y = std::move(next);
  state_.energy = rec.energy;
  state_.penalty_energy = rec.penalty_energy;
  state_.delta_iso = rec.delta_iso;
  state_.delta_pen = rec.delta_pen;
  state_.last_update_norm = rec.update_norm;
  state_.history.push_back(rec);
  last_update_ = std::move(update);
  return state_.history.back();
}

void GradientFlow::check_nodal_identities(const DeformationField& previous,
                                          const Eigen::VectorXd& update) const {
  // [grad y^k]^T grad y^k = [grad y^{k-1}]^T grad y^{k-1} + tau^2 [grad d]^T grad d
  const double tau = model_.params().tau;
  const DeformationField d(update);
  std::mt19937 rng(static_cast<unsigned>(state_.k + 1));
  std::uniform_int_distribution<int> pick(0, previous.num_vertices() - 1);
  for (int sample = 0; sample < 10; ++sample) {
    const int v = pick(rng);
    const Grad32 g0 = previous.gradient(v);
    const Grad32 gd = d.gradient(v);
    const Grad32 g1 = g0 + tau * gd;
    const Eigen::Matrix2d lhs = g1.transpose() * g1;
    const Eigen::Matrix2d rhs = g0.transpose() * g0 + tau * tau * gd.transpose() * gd;
    const double scale = std::max(1.0, lhs.cwiseAbs().maxCoeff());
    if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-10 * scale) {
      std::ostringstream msg;
      msg << "nodal isometry telescoping identity violated at vertex " << v << " in step "
          << state_.k + 1;
      throw SolverError(msg.str());
    }
  }
}

RunReport GradientFlow::run(const Observer& observer) {
  const auto start = std::chrono::steady_clock::now();
  const SimulationParams& p = model_.params();
  RunReport report;
  report.reason = Termination::max_iters;
  try {
    while (state_.k < p.max_iters) {
      const HistoryRecord& rec = step();
      if (observer) observer(state_, rec);
      if (rec.update_norm <= p.eps_stop) {
        report.reason = Termination::converged;
        break;
      }
    }
  } catch (const DegeneracyError& e) {
    report.reason = Termination::degeneracy;
    report.message = e.what();
  } catch (const SolverError& e) {
    report.reason = Termination::solver_failure;
    report.message = e.what();
  }
  report.iterations = state_.k;
  report.final_energy = state_.energy;
  report.penalty_energy = state_.penalty_energy;
  report.delta_iso = state_.delta_iso;
  report.delta_pen = state_.delta_pen;
  report.last_update_norm = state_.last_update_norm;
  report.initial_energy = state_.initial_energy;
  report.max_energy_increase = state_.max_energy_increase;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<std::string> step_size_safeguard(const SimulationParams& params, const TriangleMesh& mesh,
                                             const SafeguardThresholds& thresholds) {
  std::vector<std::string> warnings;
  const double log_h = std::abs(std::log(mesh.h_min()));
  if (params.tau * log_h > thresholds.isometry) {
    std::ostringstream msg;
    msg << "step size tau = " << params.tau << " gives tau |log h_min| = " << params.tau * log_h
        << " > " << thresholds.isometry
        << "; the energy decay and isometry bounds may not hold";
    warnings.push_back(msg.str());
  }
  const double cf = std::abs(params.body_force.z());
  if (params.mode == FlowMode::penalized_flow && cf > 0.0 &&
      params.tau > thresholds.penalized * cf * params.eps_penalty) {
    std::ostringstream msg;
    msg << "step size tau = " << params.tau << " exceeds " << thresholds.penalized
        << " * c_f * eps = " << thresholds.penalized * cf * params.eps_penalty
        << "; force and penalty terms may cancel and stall the penalized flow";
    warnings.push_back(msg.str());
  }
  return warnings;
}

}  // namespace bilayer
