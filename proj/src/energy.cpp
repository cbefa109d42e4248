#include "bilayer/energy.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Geometry>

namespace bilayer {

std::string to_string(FlowMode mode) {
  return mode == FlowMode::penalized_flow ? "penalized_flow" : "isometry_flow";
}

void SimulationParams::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive");
  if (!(eps_stop > 0.0)) throw std::invalid_argument("eps_stop must be positive");
  if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");
  if (mode == FlowMode::penalized_flow && !(eps_penalty > 0.0))
    throw std::invalid_argument("penalized mode requires eps_penalty > 0");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!body_force.allFinite()) throw std::invalid_argument("body force must be finite");
}

SparseMatrix assemble_bending_stiffness(const TriangleMesh& mesh, const DktOperators& ops) {
  const DktDofMap map(mesh);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(mesh.num_triangles()) * 3 * 81);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Mat9& Ke = ops.element(t).bending;
    for (int c = 0; c < 3; ++c) {
      const auto dofs = map.local_dofs(mesh.triangles()[t], c);
      for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) triplets.emplace_back(dofs[i], dofs[j], Ke(i, j));
    }
  }
  SparseMatrix K(map.num_dofs(), map.num_dofs());
  K.setFromTriplets(triplets.begin(), triplets.end());
  return K;
}

double bending_energy(const TriangleMesh& mesh, const DktOperators& ops, const DeformationField& y) {
  double e = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int c = 0; c < 3; ++c) {
      const Vec9 local = y.local(mesh.triangles()[t], c);
      e += 0.5 * local.dot(ops.element(t).bending * local);
    }
  return e;
}

namespace {

std::array<Vec3, 3> element_laplacian(const ElementOperators& op, const DeformationField& y,
                                      const std::array<int, 3>& tri) {
  std::array<Vec3, 3> lap;
  for (int c = 0; c < 3; ++c) {
    const Vec3 l = op.laplacian * y.local(tri, c);
    for (int i = 0; i < 3; ++i) lap[i][c] = l[i];
  }
  return lap;
}

}  // namespace

double nonlinear_energy_term(const TriangleMesh& mesh, const DktOperators& ops,
                             const DeformationField& y, double alpha) {
  if (alpha == 0.0) return 0.0;
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const ElementOperators& op = ops.element(t);
    const auto lap = element_laplacian(op, y, tri);
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Grad32 g = y.gradient(tri[i]);
      s += lap[i].dot(g.col(0).cross(g.col(1)));
    }
    sum += op.area / 3.0 * s;
  }
  return alpha * sum;
}

Eigen::VectorXd nonlinear_rhs(const TriangleMesh& mesh, const DktOperators& ops,
                              const DeformationField& y, double alpha) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(y.dofs().size());
  if (alpha == 0.0) return r;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const ElementOperators& op = ops.element(t);
    const auto lap = element_laplacian(op, y, tri);
    const double w = alpha * op.area / 3.0;
    for (int i = 0; i < 3; ++i) {
      const Grad32 g = y.gradient(tri[i]);
      const Vec3 normal = g.col(0).cross(g.col(1));
      // Delta_h w . (d1 y x d2 y)
      for (int c = 0; c < 3; ++c) {
        const double coef = w * normal[c];
        for (int j = 0; j < 3; ++j)
          for (int kind = 0; kind < 3; ++kind)
            r[DktDofMap::index(tri[j], c, kind)] += coef * op.laplacian(i, 3 * j + kind);
      }
      // Delta_h y . (d1 w x d2 y) = d1 w . (d2 y x Delta_h y)
      const Vec3 a1 = g.col(1).cross(lap[i]);
      // Delta_h y . (d1 y x d2 w) = d2 w . (Delta_h y x d1 y)
      const Vec3 a2 = lap[i].cross(g.col(0));
      for (int c = 0; c < 3; ++c) {
        r[DktDofMap::index(tri[i], c, kD1)] += w * a1[c];
        r[DktDofMap::index(tri[i], c, kD2)] += w * a2[c];
      }
    }
  }
  return r;
}

Eigen::VectorXd force_rhs(const TriangleMesh& mesh, const SimulationParams& params) {
  const Eigen::VectorXd m = lumped_vertex_masses(mesh);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(kDofsPerVertex * mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const Vec3 f = params.force_at(mesh.vertices()[v]);
    for (int c = 0; c < 3; ++c) r[DktDofMap::index(v, c, kValue)] = f[c] * m[v];
  }
  return r;
}

PenaltyPieces penalty_pieces(double s, double g) {
  if (s > g) return {-2.0 * g * s + g * g, -2.0 * g};
  return {-s * s, -2.0 * s};
}

double penalty_energy(const TriangleMesh& mesh, const DeformationField& y, double eps,
                      double obstacle_height) {
  if (!(eps > 0.0)) throw std::invalid_argument("penalty parameter must be positive");
  const Eigen::VectorXd m = lumped_vertex_masses(mesh);
  double sum = 0.0;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const double s = y.dofs()[DktDofMap::index(v, 2, kValue)];
    sum += m[v] * (s * s + penalty_pieces(s, obstacle_height).concave);
  }
  return sum / (2.0 * eps);
}

double obstacle_penetration(const DeformationField& y, double obstacle_height) {
  double m = 0.0;
  for (int v = 0; v < y.num_vertices(); ++v)
    m = std::max(m, y.dofs()[DktDofMap::index(v, 2, kValue)] - obstacle_height);
  return m;
}

EnergyModel::EnergyModel(const TriangleMesh& mesh, SimulationParams params)
    : mesh_(mesh), ops_(mesh), params_(std::move(params)) {
  stiffness_ = assemble_bending_stiffness(mesh_, ops_);
  masses_ = lumped_vertex_masses(mesh_);
  force_ = force_rhs(mesh_, params_);
}

double EnergyModel::bending(const DeformationField& y) const {
  return 0.5 * y.dofs().dot(stiffness_ * y.dofs());
}

double EnergyModel::nonlinear(const DeformationField& y) const {
  return nonlinear_energy_term(mesh_, ops_, y, params_.alpha);
}

double EnergyModel::penalty(const DeformationField& y) const {
  return penalty_energy(mesh_, y, params_.eps_penalty, params_.obstacle_height);
}

double EnergyModel::penetration(const DeformationField& y) const {
  return obstacle_penetration(y, params_.obstacle_height);
}

double EnergyModel::energy(const DeformationField& y) const {
  return bending(y) - nonlinear(y) - force_work(y);
}

double EnergyModel::flow_energy(const DeformationField& y) const {
  const double e = energy(y);
  return params_.mode == FlowMode::penalized_flow ? e + penalty(y) : e;
}

Eigen::VectorXd EnergyModel::nonlinear_rhs(const DeformationField& y) const {
  return bilayer::nonlinear_rhs(mesh_, ops_, y, params_.alpha);
}

double total_energy(const EnergyModel& model, const DeformationField& y) { return model.energy(y); }

}  // namespace bilayer
