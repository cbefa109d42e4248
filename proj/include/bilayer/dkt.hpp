#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bilayer/mesh.hpp"

namespace bilayer {

using Grad32 = Eigen::Matrix<double, 3, 2>;
using Mat12x9 = Eigen::Matrix<double, 12, 9>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat3x9 = Eigen::Matrix<double, 3, 9>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;

inline constexpr int kDofsPerVertex = 9;
inline constexpr int kComponents = 3;

// Per vertex and component: one value and two partial derivatives.
enum DofKind : int { kValue = 0, kD1 = 1, kD2 = 2 };

/// Global DOF numbering of a vector-valued DKT function:
/// dof(v, c, kind) = 9 v + 3 c + kind. All 9 DOFs of a Dirichlet vertex are fixed.
class DktDofMap {
 public:
  DktDofMap() = default;
  explicit DktDofMap(const TriangleMesh& mesh);

  static constexpr int index(int vertex, int component, int kind) {
    return kDofsPerVertex * vertex + 3 * component + kind;
  }

  int num_vertices() const { return num_vertices_; }
  int num_dofs() const { return kDofsPerVertex * num_vertices_; }
  int num_free() const { return static_cast<int>(free_dofs_.size()); }
  bool is_fixed(int dof) const { return free_index_[dof] < 0; }
  bool is_fixed_vertex(int vertex) const { return fixed_vertex_[vertex]; }
  // Position of a free dof in the reduced numbering, -1 for fixed dofs.
  int free_index(int dof) const { return free_index_[dof]; }
  const std::vector<int>& free_dofs() const { return free_dofs_; }

  // Local scalar ordering (w, d1 w, d2 w) per triangle vertex.
  std::array<int, 9> local_dofs(const std::array<int, 3>& triangle, int component) const;

 private:
  int num_vertices_ = 0;
  std::vector<bool> fixed_vertex_;
  std::vector<int> free_index_;
  std::vector<int> free_dofs_;
};

/// Nodal values and gradients of a deformation y_h: omega -> R^3.
class DeformationField {
 public:
  DeformationField() = default;
  explicit DeformationField(int num_vertices) : dofs_(Eigen::VectorXd::Zero(kDofsPerVertex * num_vertices)) {}
  explicit DeformationField(Eigen::VectorXd dofs);

  int num_vertices() const { return static_cast<int>(dofs_.size() / kDofsPerVertex); }
  const Eigen::VectorXd& dofs() const { return dofs_; }
  Eigen::VectorXd& dofs() { return dofs_; }

  Vec3 position(int v) const;
  // Columns are the partial derivatives d1 y(z), d2 y(z).
  Grad32 gradient(int v) const;
  void set_position(int v, const Vec3& y);
  void set_gradient(int v, const Grad32& g);

  Vec9 local(const std::array<int, 3>& triangle, int component) const;

  bool all_finite() const { return dofs_.allFinite(); }

 private:
  Eigen::VectorXd dofs_;
};

/// Triangle data shared by the element routines. Local edge k joins corners
/// (k+1)%3 -> (k+2)%3 and is opposite to corner k.
struct TriangleGeometry {
  std::array<Vec2, 3> corners;
  double area = 0.0;
  std::array<Vec2, 3> grad_lambda;  // barycentric coordinate gradients
  std::array<Vec2, 3> edge_tangent;
  std::array<Vec2, 3> edge_normal;
  std::array<double, 3> edge_length{};

  Vec2 centroid() const { return (corners[0] + corners[1] + corners[2]) / 3.0; }
  double diameter() const;
};

TriangleGeometry make_triangle_geometry(const Vec2& a, const Vec2& b, const Vec2& c);
TriangleGeometry triangle_geometry(const TriangleMesh& mesh, int t);

// P2 Lagrange basis on a triangle; nodes are the 3 corners followed by the
// midpoints of the edges opposite to corners 0, 1, 2.
std::array<double, 6> p2_basis_values(const Vec3& lambda);
std::array<Vec2, 6> p2_basis_gradients(const TriangleGeometry& geom, const Vec3& lambda);

// theta = sum_n phi_n(lambda) theta_n for node-major coefficients (theta_1, theta_2) per node.
Vec2 evaluate_p2_field(const Vec12& coeffs, const Vec3& lambda);
Eigen::Matrix2d evaluate_p2_field_gradient(const TriangleGeometry& geom, const Vec12& coeffs,
                                           const Vec3& lambda);

/// Maps the 9 local DKT dofs of one scalar component to the 12 nodal
/// coefficients of the quadratic field nabla_h w: at corners the nodal
/// gradient, at edge midpoints the averaged normal derivative and the
/// tangential derivative of the cubic Hermite edge interpolant.
Mat12x9 dkt_local_gradient_matrix(const TriangleGeometry& geom);

/// int_T grad(theta) : grad(theta) for theta in P2^2. The edge-midpoint rule
/// is exact since the integrand is quadratic.
Mat12 p2_vector_stiffness(const TriangleGeometry& geom);

// G^T S G for one scalar component.
Mat9 scalar_bending_matrix(const TriangleGeometry& geom);
// Block diagonal over the three deformation components; local ordering 9 c + j.
Eigen::Matrix<double, 27, 27> element_bending_matrix(const TriangleGeometry& geom);

/// Row i evaluates div(nabla_h w) at corner i of the triangle.
Mat3x9 discrete_laplacian_matrix(const TriangleGeometry& geom);
std::array<Vec3, 3> discrete_laplacian_at_vertices(const TriangleGeometry& geom,
                                                   const std::array<Vec9, 3>& local_dofs);

struct ElementOperators {
  double area = 0.0;
  Mat12x9 gradient;   // nabla_h
  Mat9 bending;       // G^T S G
  Mat3x9 laplacian;   // Delta_h at corners
};

/// Element operators for every triangle of a mesh, computed once.
class DktOperators {
 public:
  DktOperators() = default;
  explicit DktOperators(const TriangleMesh& mesh);

  const ElementOperators& element(int t) const { return elements_[t]; }
  int num_elements() const { return static_cast<int>(elements_.size()); }

 private:
  std::vector<ElementOperators> elements_;
};

// Values given per (triangle, corner); the elementwise P1 interpolant is
// integrated with the vertex rule sum_T |T|/3 sum_z v_T(z).
using ElementVertexValues = std::vector<std::array<double, 3>>;

double lumped_p1_integral(const TriangleMesh& mesh, const ElementVertexValues& values);

// Discrete L^p norm; p = infinity yields the max over all (triangle, corner) pairs.
double discrete_lp_norm(const TriangleMesh& mesh, const ElementVertexValues& values, double p);

// Sum over adjacent triangles of |T|/3.
Eigen::VectorXd lumped_vertex_masses(const TriangleMesh& mesh);

using SmoothMap = std::function<std::pair<Vec3, Grad32>(const Vec2&)>;

DeformationField interpolate_dkt(const TriangleMesh& mesh, const SmoothMap& map);

// y = (x1, x2, 0) with gradient [I2; 0].
DeformationField flat_embedding(const TriangleMesh& mesh);

/// Exact map with derivatives up to second order, used as reference in error norms.
struct SmoothJet {
  std::function<Vec3(const Vec2&)> value;
  std::function<Grad32(const Vec2&)> gradient;
  // Hessian of each deformation component.
  std::function<std::array<Eigen::Matrix2d, 3>(const Vec2&)> hessian;
};

struct DktErrorNorms {
  double l2 = 0.0;                // ||w_h - y||, w_h the reduced cubic of the dofs
  double h1_seminorm = 0.0;       // ||grad w_h - grad y||
  double discrete_hessian = 0.0;  // ||grad nabla_h w_h - D^2 y||
};

/// Elementwise errors with a degree 5 rule, taken over all three components.
DktErrorNorms dkt_error_norms(const TriangleMesh& mesh, const DeformationField& y, const SmoothJet& exact);

/// Evaluates the reduced cubic whose centroid value is fixed by
/// p(x_T) = 1/6 sum_z (2 p(z) - grad p(z) . (z - x_T)). Only needed for
/// error norms and visualization; assembly never evaluates it.
class ReducedCubic {
 public:
  explicit ReducedCubic(const TriangleGeometry& geom);

  double value(const Vec9& dofs, const Vec2& x) const;
  Vec2 gradient(const Vec9& dofs, const Vec2& x) const;
  Eigen::Matrix2d hessian(const Vec9& dofs, const Vec2& x) const;

 private:
  Vec2 center_;
  double scale_ = 1.0;
  Eigen::Matrix<double, 10, 9> coefficients_;
};

}  // namespace bilayer
