#include "bilayer/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

namespace bilayer {

Eigen::Matrix<double, 3, 6> constraint_block(const Grad32& g) {
  Eigen::Matrix<double, 3, 6> b = Eigen::Matrix<double, 3, 6>::Zero();
  b.block<1, 3>(0, 0) = g.col(0).transpose();
  b.block<1, 3>(1, 3) = g.col(1).transpose();
  b.block<1, 3>(2, 0) = g.col(1).transpose();
  b.block<1, 3>(2, 3) = g.col(0).transpose();
  return b;
}

ConstraintSystem tangent_constraint_matrix(const DeformationField& y, const DktDofMap& map,
                                           double min_singular_value) {
  ConstraintSystem sys;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(map.num_vertices()) * 18);
  double min_sv = std::numeric_limits<double>::infinity();
  int row = 0;
  for (int v = 0; v < map.num_vertices(); ++v) {
    if (map.is_fixed_vertex(v)) continue;
    const Eigen::Matrix<double, 3, 6> block = constraint_block(y.gradient(v));
    if (min_singular_value > 0.0) {
      const double sv = Eigen::JacobiSVD<Eigen::Matrix<double, 3, 6>>(block).singularValues()[2];
      min_sv = std::min(min_sv, sv);
      if (!(sv >= min_singular_value))
        throw DegeneracyError("isometry constraint block at vertex " + std::to_string(v) +
                              " is degenerate (smallest singular value " + std::to_string(sv) +
                              ")");
    }
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        // Zero entries are kept so that the sparsity pattern never changes.
        const int col_d1 = map.free_index(DktDofMap::index(v, c, kD1));
        const int col_d2 = map.free_index(DktDofMap::index(v, c, kD2));
        triplets.emplace_back(row + r, col_d1, block(r, c));
        triplets.emplace_back(row + r, col_d2, block(r, 3 + c));
      }
    sys.row_vertex.push_back(v);
    row += 3;
  }
  sys.B.resize(row, map.num_free());
  sys.B.setFromTriplets(triplets.begin(), triplets.end());
  sys.min_block_singular_value = min_singular_value > 0.0 ? min_sv : 0.0;
  return sys;
}

std::vector<double> nodal_isometry_defect(const DeformationField& y) {
  std::vector<double> out(static_cast<size_t>(y.num_vertices()));
  for (int v = 0; v < y.num_vertices(); ++v) {
    const Grad32 g = y.gradient(v);
    out[v] = (g.transpose() * g - Eigen::Matrix2d::Identity()).norm();
  }
  return out;
}

double isometry_defect(const DeformationField& y) {
  const auto d = nodal_isometry_defect(y);
  return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

double linearized_constraint_residual(const DeformationField& y, const Eigen::VectorXd& update,
                                      const DktDofMap& map) {
  const DeformationField d(update);
  double r = 0.0;
  for (int v = 0; v < map.num_vertices(); ++v) {
    if (map.is_fixed_vertex(v)) continue;
    const Eigen::Matrix2d m = d.gradient(v).transpose() * y.gradient(v);
    r = std::max(r, (m + m.transpose()).cwiseAbs().maxCoeff());
  }
  return r;
}

DeformationField apply_dirichlet(const DeformationField& y, const TriangleMesh& mesh,
                                 const SmoothMap& boundary_data) {
  DeformationField out = y;
  const auto& fixed = mesh.dirichlet_vertices();
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (!fixed[v]) continue;
    const auto [value, grad] = boundary_data(mesh.vertices()[v]);
    out.set_position(v, value);
    out.set_gradient(v, grad);
  }
  return out;
}

}  // namespace bilayer
