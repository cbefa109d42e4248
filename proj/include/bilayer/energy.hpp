#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "bilayer/dkt.hpp"
#include "bilayer/mesh.hpp"

namespace bilayer {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class FlowMode { isometry_flow, penalized_flow };

std::string to_string(FlowMode mode);

using BodyForce = std::function<Vec3(const Vec2&)>;

struct SimulationParams {
  double alpha = 0.0;         // spontaneous curvature
  double tau = 0.1;           // pseudo-time step
  double eps_penalty = 0.125; // obstacle penalty parameter
  double eps_stop = 1.0e-3;   // stop once ||d_t y||_* <= eps_stop
  Vec3 body_force = Vec3::Zero();
  BodyForce force_field;      // overrides body_force when set; only vertex values matter
  double obstacle_height = 1.0;
  FlowMode mode = FlowMode::isometry_flow;
  long max_iters = 500000;
  bool debug_checks = false;  // verify nodal identities after every step

  Vec3 force_at(const Vec2& x) const { return force_field ? force_field(x) : body_force; }
  // Throws std::invalid_argument on tau <= 0, eps_stop <= 0, non-finite alpha,
  // or eps_penalty <= 0 in penalized mode.
  void validate() const;
};

SparseMatrix assemble_bending_stiffness(const TriangleMesh& mesh, const DktOperators& ops);

// 1/2 ||grad nabla_h y||^2 accumulated element by element.
double bending_energy(const TriangleMesh& mesh, const DktOperators& ops, const DeformationField& y);

/// alpha * sum_T |T|/3 sum_z Delta_h y|_T(z) . (d1 y(z) x d2 y(z)).
/// Enters the discrete energy with a minus sign.
double nonlinear_energy_term(const TriangleMesh& mesh, const DktOperators& ops,
                             const DeformationField& y, double alpha);

/// Derivative of nonlinear_energy_term at y: r . w equals the three
/// alpha-terms of the semi-implicit update, evaluated at y.
Eigen::VectorXd nonlinear_rhs(const TriangleMesh& mesh, const DktOperators& ops,
                              const DeformationField& y, double alpha);

// Vertex-lumped load on the value dofs.
Eigen::VectorXd force_rhs(const TriangleMesh& mesh, const SimulationParams& params);

struct PenaltyPieces {
  double concave;     // P_ccv(s)
  double derivative;  // p_ccv(s)
};

/// Concave part of (s - g)_+^2 = s^2 + P_ccv(s).
PenaltyPieces penalty_pieces(double s, double obstacle_height = 1.0);

/// (1/2 eps) sum_z m_z (y3(z)^2 + P_ccv(y3(z))), i.e. the lumped integral of
/// (y3 - g)_+^2 / (2 eps).
double penalty_energy(const TriangleMesh& mesh, const DeformationField& y, double eps,
                      double obstacle_height = 1.0);

// max_z (y3(z) - g)_+
double obstacle_penetration(const DeformationField& y, double obstacle_height = 1.0);

/// Bundles the operators and assembled matrices that stay fixed during a flow.
class EnergyModel {
 public:
  EnergyModel(const TriangleMesh& mesh, SimulationParams params);

  const TriangleMesh& mesh() const { return mesh_; }
  const DktOperators& operators() const { return ops_; }
  const SimulationParams& params() const { return params_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  const Eigen::VectorXd& vertex_masses() const { return masses_; }
  const Eigen::VectorXd& force() const { return force_; }

  double bending(const DeformationField& y) const;
  double nonlinear(const DeformationField& y) const;
  double force_work(const DeformationField& y) const { return force_.dot(y.dofs()); }
  double penalty(const DeformationField& y) const;
  double penetration(const DeformationField& y) const;

  // Discrete bending energy without the constant alpha^2 |omega|.
  double energy(const DeformationField& y) const;
  // energy + penalty in penalized mode, energy otherwise.
  double flow_energy(const DeformationField& y) const;

  Eigen::VectorXd nonlinear_rhs(const DeformationField& y) const;

 private:
  TriangleMesh mesh_;
  DktOperators ops_;
  SimulationParams params_;
  SparseMatrix stiffness_;
  Eigen::VectorXd masses_;
  Eigen::VectorXd force_;
};

double total_energy(const EnergyModel& model, const DeformationField& y);

}  // namespace bilayer
