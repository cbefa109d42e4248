#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "bilayer/dkt.hpp"
#include "bilayer/mesh.hpp"

namespace bilayer {

class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linearized isometry constraints sym([grad w(z)]^T grad y(z)) = 0 at every
/// free vertex, acting on the reduced (free) dof numbering. Row blocks are
/// ordered (11, 22, 12) per free vertex.
struct ConstraintSystem {
  Eigen::SparseMatrix<double> B;
  std::vector<int> row_vertex;  // vertex index per row block
  double min_block_singular_value = 0.0;

  int num_rows() const { return static_cast<int>(B.rows()); }
};

// 3x6 block acting on (d1 w, d2 w) of one vertex.
Eigen::Matrix<double, 3, 6> constraint_block(const Grad32& grad_y);

/// Throws DegeneracyError when a block's smallest singular value drops below
/// min_singular_value (pass 0 to disable the check).
ConstraintSystem tangent_constraint_matrix(const DeformationField& y, const DktDofMap& map,
                                           double min_singular_value = 1e-3);

// |[grad y(z)]^T grad y(z) - I2|_F per vertex.
std::vector<double> nodal_isometry_defect(const DeformationField& y);

// Discrete L^inf norm of the nodal isometry defect.
double isometry_defect(const DeformationField& y);

/// max over free vertices of |sym([grad d(z)]^T grad y(z))| (entrywise).
double linearized_constraint_residual(const DeformationField& y, const Eigen::VectorXd& update,
                                      const DktDofMap& map);

/// Overwrites all dofs of Dirichlet vertices with y_D(z), phi_D(z).
DeformationField apply_dirichlet(const DeformationField& y, const TriangleMesh& mesh,
                                 const SmoothMap& boundary_data);

}  // namespace bilayer
