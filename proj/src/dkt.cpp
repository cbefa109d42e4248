#include "bilayer/dkt.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/LU>

#include "bilayer/quadrature.hpp"

namespace bilayer {

DktDofMap::DktDofMap(const TriangleMesh& mesh)
    : num_vertices_(mesh.num_vertices()), fixed_vertex_(mesh.dirichlet_vertices()) {
  free_index_.assign(static_cast<size_t>(num_dofs()), -1);
  for (int v = 0; v < num_vertices_; ++v) {
    if (fixed_vertex_[v]) continue;
    for (int j = 0; j < kDofsPerVertex; ++j) {
      const int dof = kDofsPerVertex * v + j;
      free_index_[dof] = static_cast<int>(free_dofs_.size());
      free_dofs_.push_back(dof);
    }
  }
}

std::array<int, 9> DktDofMap::local_dofs(const std::array<int, 3>& triangle, int component) const {
  std::array<int, 9> out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[3 * i + j] = index(triangle[i], component, j);
  return out;
}

DeformationField::DeformationField(Eigen::VectorXd dofs) : dofs_(std::move(dofs)) {
  if (dofs_.size() % kDofsPerVertex != 0)
    throw std::invalid_argument("deformation dof vector length must be a multiple of 9");
}

Vec3 DeformationField::position(int v) const {
  Vec3 y;
  for (int c = 0; c < 3; ++c) y[c] = dofs_[DktDofMap::index(v, c, kValue)];
  return y;
}

Grad32 DeformationField::gradient(int v) const {
  Grad32 g;
  for (int c = 0; c < 3; ++c) {
    g(c, 0) = dofs_[DktDofMap::index(v, c, kD1)];
    g(c, 1) = dofs_[DktDofMap::index(v, c, kD2)];
  }
  return g;
}

void DeformationField::set_position(int v, const Vec3& y) {
  for (int c = 0; c < 3; ++c) dofs_[DktDofMap::index(v, c, kValue)] = y[c];
}

void DeformationField::set_gradient(int v, const Grad32& g) {
  for (int c = 0; c < 3; ++c) {
    dofs_[DktDofMap::index(v, c, kD1)] = g(c, 0);
    dofs_[DktDofMap::index(v, c, kD2)] = g(c, 1);
  }
}

Vec9 DeformationField::local(const std::array<int, 3>& triangle, int component) const {
  Vec9 out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[3 * i + j] = dofs_[DktDofMap::index(triangle[i], component, j)];
  return out;
}

double TriangleGeometry::diameter() const {
  return std::max({edge_length[0], edge_length[1], edge_length[2]});
}

TriangleGeometry make_triangle_geometry(const Vec2& a, const Vec2& b, const Vec2& c) {
  TriangleGeometry g;
  g.corners = {a, b, c};
  g.area = 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
  const double scale = std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
  if (!(g.area > 1e-14 * scale)) throw std::invalid_argument("degenerate or clockwise triangle");
  for (int i = 0; i < 3; ++i) {
    const Vec2& p = g.corners[(i + 1) % 3];
    const Vec2& q = g.corners[(i + 2) % 3];
    g.grad_lambda[i] = Vec2(p.y() - q.y(), q.x() - p.x()) / (2.0 * g.area);
    const Vec2 d = q - p;
    g.edge_length[i] = d.norm();
    g.edge_tangent[i] = d / g.edge_length[i];
    g.edge_normal[i] = Vec2(-g.edge_tangent[i].y(), g.edge_tangent[i].x());
  }
  return g;
}

TriangleGeometry triangle_geometry(const TriangleMesh& mesh, int t) {
  const auto& tri = mesh.triangles()[t];
  const auto& v = mesh.vertices();
  return make_triangle_geometry(v[tri[0]], v[tri[1]], v[tri[2]]);
}

std::array<double, 6> p2_basis_values(const Vec3& l) {
  return {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
          4 * l[1] * l[2],       4 * l[2] * l[0],       4 * l[0] * l[1]};
}

std::array<Vec2, 6> p2_basis_gradients(const TriangleGeometry& g, const Vec3& l) {
  const auto& gl = g.grad_lambda;
  return {(4 * l[0] - 1) * gl[0],
          (4 * l[1] - 1) * gl[1],
          (4 * l[2] - 1) * gl[2],
          4 * (l[1] * gl[2] + l[2] * gl[1]),
          4 * (l[2] * gl[0] + l[0] * gl[2]),
          4 * (l[0] * gl[1] + l[1] * gl[0])};
}

Vec2 evaluate_p2_field(const Vec12& coeffs, const Vec3& lambda) {
  const auto phi = p2_basis_values(lambda);
  Vec2 theta = Vec2::Zero();
  for (int n = 0; n < 6; ++n) theta += phi[n] * coeffs.segment<2>(2 * n);
  return theta;
}

Eigen::Matrix2d evaluate_p2_field_gradient(const TriangleGeometry& geom, const Vec12& coeffs,
                                           const Vec3& lambda) {
  const auto dphi = p2_basis_gradients(geom, lambda);
  Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
  // grad(c, d) = d theta_c / d x_d
  for (int n = 0; n < 6; ++n) grad += coeffs.segment<2>(2 * n) * dphi[n].transpose();
  return grad;
}

Mat12x9 dkt_local_gradient_matrix(const TriangleGeometry& g) {
  Mat12x9 G = Mat12x9::Zero();
  for (int i = 0; i < 3; ++i) {
    G(2 * i, 3 * i + kD1) = 1.0;
    G(2 * i + 1, 3 * i + kD2) = 1.0;
  }
  for (int k = 0; k < 3; ++k) {
    const int a = (k + 1) % 3;
    const int b = (k + 2) % 3;
    const Vec2& t = g.edge_tangent[k];
    const Vec2& n = g.edge_normal[k];
    // theta(z_E) = (1/2 n n^T - 1/4 t t^T)(grad w_a + grad w_b) + 3/(2|E|) t (w_b - w_a)
    const Eigen::Matrix2d M = 0.5 * n * n.transpose() - 0.25 * t * t.transpose();
    const double s = 1.5 / g.edge_length[k];
    const int row = 2 * (3 + k);
    for (int c = 0; c < 2; ++c) {
      for (int d = 0; d < 2; ++d) {
        G(row + c, 3 * a + 1 + d) += M(c, d);
        G(row + c, 3 * b + 1 + d) += M(c, d);
      }
      G(row + c, 3 * b + kValue) += s * t[c];
      G(row + c, 3 * a + kValue) -= s * t[c];
    }
  }
  return G;
}

Mat12 p2_vector_stiffness(const TriangleGeometry& g) {
  Eigen::Matrix<double, 6, 6> s = Eigen::Matrix<double, 6, 6>::Zero();
  for (int k = 0; k < 3; ++k) {
    Vec3 lambda = Vec3::Constant(0.5);
    lambda[k] = 0.0;
    const auto dphi = p2_basis_gradients(g, lambda);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) s(i, j) += g.area / 3.0 * dphi[i].dot(dphi[j]);
  }
  Mat12 S = Mat12::Zero();
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      S(2 * i, 2 * j) = s(i, j);
      S(2 * i + 1, 2 * j + 1) = s(i, j);
    }
  return S;
}

Mat9 scalar_bending_matrix(const TriangleGeometry& geom) {
  const Mat12x9 G = dkt_local_gradient_matrix(geom);
  const Mat9 K = G.transpose() * p2_vector_stiffness(geom) * G;
  return 0.5 * (K + K.transpose());
}

Eigen::Matrix<double, 27, 27> element_bending_matrix(const TriangleGeometry& geom) {
  Eigen::Matrix<double, 27, 27> K = Eigen::Matrix<double, 27, 27>::Zero();
  const Mat9 block = scalar_bending_matrix(geom);
  for (int c = 0; c < 3; ++c) K.block<9, 9>(9 * c, 9 * c) = block;
  return K;
}

Mat3x9 discrete_laplacian_matrix(const TriangleGeometry& geom) {
  const Mat12x9 G = dkt_local_gradient_matrix(geom);
  Eigen::Matrix<double, 3, 12> D = Eigen::Matrix<double, 3, 12>::Zero();
  for (int i = 0; i < 3; ++i) {
    Vec3 lambda = Vec3::Zero();
    lambda[i] = 1.0;
    const auto dphi = p2_basis_gradients(geom, lambda);
    for (int n = 0; n < 6; ++n) {
      D(i, 2 * n) = dphi[n].x();
      D(i, 2 * n + 1) = dphi[n].y();
    }
  }
  return D * G;
}

std::array<Vec3, 3> discrete_laplacian_at_vertices(const TriangleGeometry& geom,
                                                   const std::array<Vec9, 3>& local_dofs) {
  const Mat3x9 L = discrete_laplacian_matrix(geom);
  std::array<Vec3, 3> out;
  for (int c = 0; c < 3; ++c) {
    const Vec3 lap = L * local_dofs[c];
    for (int i = 0; i < 3; ++i) out[i][c] = lap[i];
  }
  return out;
}

DktOperators::DktOperators(const TriangleMesh& mesh) {
  elements_.resize(static_cast<size_t>(mesh.num_triangles()));
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleGeometry geom = triangle_geometry(mesh, t);
    ElementOperators& op = elements_[t];
    op.area = geom.area;
    op.gradient = dkt_local_gradient_matrix(geom);
    const Mat9 K = op.gradient.transpose() * p2_vector_stiffness(geom) * op.gradient;
    op.bending = 0.5 * (K + K.transpose());
    op.laplacian = discrete_laplacian_matrix(geom);
  }
}

double lumped_p1_integral(const TriangleMesh& mesh, const ElementVertexValues& values) {
  if (static_cast<int>(values.size()) != mesh.num_triangles())
    throw std::invalid_argument("one value triple per triangle expected");
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    sum += mesh.area(t) / 3.0 * (values[t][0] + values[t][1] + values[t][2]);
  return sum;
}

double discrete_lp_norm(const TriangleMesh& mesh, const ElementVertexValues& values, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("discrete L^p norm requires p >= 1");
  if (static_cast<int>(values.size()) != mesh.num_triangles())
    throw std::invalid_argument("one value triple per triangle expected");
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& v : values)
      for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (double x : values[t]) sum += mesh.area(t) / 3.0 * std::pow(std::abs(x), p);
  return std::pow(sum, 1.0 / p);
}

Eigen::VectorXd lumped_vertex_masses(const TriangleMesh& mesh) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int v : mesh.triangles()[t]) m[v] += mesh.area(t) / 3.0;
  return m;
}

DeformationField interpolate_dkt(const TriangleMesh& mesh, const SmoothMap& map) {
  DeformationField y(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const auto [value, grad] = map(mesh.vertices()[v]);
    y.set_position(v, value);
    y.set_gradient(v, grad);
  }
  return y;
}

DeformationField flat_embedding(const TriangleMesh& mesh) {
  return interpolate_dkt(mesh, [](const Vec2& x) {
    Grad32 g = Grad32::Zero();
    g(0, 0) = 1.0;
    g(1, 1) = 1.0;
    return std::make_pair(Vec3(x.x(), x.y(), 0.0), g);
  });
}

namespace {

// Cubic monomials in u, v: 1, u, v, u^2, uv, v^2, u^3, u^2 v, u v^2, v^3.
using Mono = Eigen::Matrix<double, 10, 1>;

Mono monomials(double u, double v) {
  Mono m;
  m << 1, u, v, u * u, u * v, v * v, u * u * u, u * u * v, u * v * v, v * v * v;
  return m;
}
Mono monomials_du(double u, double v) {
  Mono m;
  m << 0, 1, 0, 2 * u, v, 0, 3 * u * u, 2 * u * v, v * v, 0;
  return m;
}
Mono monomials_dv(double u, double v) {
  Mono m;
  m << 0, 0, 1, 0, u, 2 * v, 0, u * u, 2 * u * v, 3 * v * v;
  return m;
}
Mono monomials_duu(double u, double v) {
  Mono m;
  m << 0, 0, 0, 2, 0, 0, 6 * u, 2 * v, 0, 0;
  return m;
}
Mono monomials_duv(double u, double v) {
  Mono m;
  m << 0, 0, 0, 0, 1, 0, 0, 2 * u, 2 * v, 0;
  return m;
}
Mono monomials_dvv(double u, double v) {
  Mono m;
  m << 0, 0, 0, 0, 0, 2, 0, 0, 2 * u, 6 * v;
  return m;
}

}  // namespace

ReducedCubic::ReducedCubic(const TriangleGeometry& geom)
    : center_(geom.centroid()), scale_(geom.diameter()) {
  // Rows: value, d1, d2 at each corner, then the centroid constraint.
  Eigen::Matrix<double, 10, 10> F = Eigen::Matrix<double, 10, 10>::Zero();
  Mono constraint = monomials(0.0, 0.0);
  for (int i = 0; i < 3; ++i) {
    const Vec2 d = geom.corners[i] - center_;
    const double u = d.x() / scale_, v = d.y() / scale_;
    const Mono val = monomials(u, v);
    const Mono dx = monomials_du(u, v) / scale_;
    const Mono dy = monomials_dv(u, v) / scale_;
    F.row(3 * i) = val.transpose();
    F.row(3 * i + 1) = dx.transpose();
    F.row(3 * i + 2) = dy.transpose();
    constraint -= (2.0 * val - d.x() * dx - d.y() * dy) / 6.0;
  }
  F.row(9) = constraint.transpose();
  Eigen::Matrix<double, 10, 9> rhs = Eigen::Matrix<double, 10, 9>::Zero();
  rhs.topRows<9>().setIdentity();
  coefficients_ = F.fullPivLu().solve(rhs);
}

double ReducedCubic::value(const Vec9& dofs, const Vec2& x) const {
  const Vec2 d = (x - center_) / scale_;
  return monomials(d.x(), d.y()).dot(coefficients_ * dofs);
}

Vec2 ReducedCubic::gradient(const Vec9& dofs, const Vec2& x) const {
  const Vec2 d = (x - center_) / scale_;
  const Mono c = coefficients_ * dofs;
  return Vec2(monomials_du(d.x(), d.y()).dot(c), monomials_dv(d.x(), d.y()).dot(c)) / scale_;
}

Eigen::Matrix2d ReducedCubic::hessian(const Vec9& dofs, const Vec2& x) const {
  const Vec2 d = (x - center_) / scale_;
  const Mono c = coefficients_ * dofs;
  Eigen::Matrix2d H;
  H(0, 0) = monomials_duu(d.x(), d.y()).dot(c);
  H(0, 1) = H(1, 0) = monomials_duv(d.x(), d.y()).dot(c);
  H(1, 1) = monomials_dvv(d.x(), d.y()).dot(c);
  return H / (scale_ * scale_);
}

DktErrorNorms dkt_error_norms(const TriangleMesh& mesh, const DeformationField& y, const SmoothJet& exact) {
  double l2 = 0.0, h1 = 0.0, hess = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleGeometry geom = triangle_geometry(mesh, t);
    const ReducedCubic cubic(geom);
    const Mat12x9 G = dkt_local_gradient_matrix(geom);
    const auto& tri = mesh.triangles()[t];
    std::array<Vec9, 3> local;
    std::array<Vec12, 3> theta;
    for (int c = 0; c < 3; ++c) {
      local[c] = y.local(tri, c);
      theta[c] = G * local[c];
    }
    for (const auto& q : degree5_triangle_rule()) {
      const Vec2 x = q.lambda[0] * geom.corners[0] + q.lambda[1] * geom.corners[1] +
                     q.lambda[2] * geom.corners[2];
      const double w = q.weight * geom.area;
      const Vec3 value = exact.value(x);
      const Grad32 grad = exact.gradient(x);
      const auto hessians = exact.hessian(x);
      for (int c = 0; c < 3; ++c) {
        l2 += w * std::pow(cubic.value(local[c], x) - value[c], 2);
        h1 += w * (cubic.gradient(local[c], x) - grad.row(c).transpose()).squaredNorm();
        hess += w * (evaluate_p2_field_gradient(geom, theta[c], q.lambda) - hessians[c]).squaredNorm();
      }
    }
  }
  return {std::sqrt(l2), std::sqrt(h1), std::sqrt(hess)};
}

}  // namespace bilayer
