#include <array>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"

#include "bilayer/dkt.hpp"
#include "bilayer/energy.hpp"
#include "bilayer/quadrature.hpp"

using namespace bilayer;

namespace {

struct Quadratic {
  // w = a0 + a1 x + a2 y + a3 x^2 + a4 x y + a5 y^2
  std::array<double, 6> a{};
  double value(const Vec2& p) const {
    const double x = p.x(), y = p.y();
    return a[0] + a[1] * x + a[2] * y + a[3] * x * x + a[4] * x * y + a[5] * y * y;
  }
  Vec2 gradient(const Vec2& p) const {
    return {a[1] + 2 * a[3] * p.x() + a[4] * p.y(), a[2] + a[4] * p.x() + 2 * a[5] * p.y()};
  }
  Eigen::Matrix2d hessian() const {
    Eigen::Matrix2d H;
    H << 2 * a[3], a[4], a[4], 2 * a[5];
    return H;
  }
};

Quadratic random_quadratic(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Quadratic q;
  for (double& c : q.a) c = u(rng);
  return q;
}

TriangleGeometry random_triangle(std::mt19937& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-0.25, 0.25);
  std::uniform_real_distribution<double> shift(-3.0, 3.0);
  const Vec2 o(shift(rng), shift(rng));
  const Vec2 a = o + scale * Vec2(u(rng), u(rng));
  const Vec2 b = o + scale * Vec2(1.0 + u(rng), u(rng));
  const Vec2 c = o + scale * Vec2(0.5 + u(rng), 0.9 + u(rng));
  return make_triangle_geometry(a, b, c);
}

Vec9 local_dofs(const TriangleGeometry& g, const Quadratic& q) {
  Vec9 d;
  for (int i = 0; i < 3; ++i) {
    d[3 * i] = q.value(g.corners[i]);
    d.segment<2>(3 * i + 1) = q.gradient(g.corners[i]);
  }
  return d;
}

std::array<Vec2, 6> p2_nodes(const TriangleGeometry& g) {
  std::array<Vec2, 6> n;
  for (int i = 0; i < 3; ++i) {
    n[i] = g.corners[i];
    n[3 + i] = 0.5 * (g.corners[(i + 1) % 3] + g.corners[(i + 2) % 3]);
  }
  return n;
}

std::array<Vec3, 6> p2_node_lambdas() {
  return {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1),
          Vec3(0, 0.5, 0.5), Vec3(0.5, 0, 0.5), Vec3(0.5, 0.5, 0)};
}

Vec2 point_at(const TriangleGeometry& g, const Vec3& l) {
  return l[0] * g.corners[0] + l[1] * g.corners[1] + l[2] * g.corners[2];
}

}  // namespace

TEST_CASE("P2 basis is nodal and sums to one") {
  const auto lambdas = p2_node_lambdas();
  for (int n = 0; n < 6; ++n) {
    const auto phi = p2_basis_values(lambdas[n]);
    for (int m = 0; m < 6; ++m) CHECK(phi[m] == doctest::Approx(n == m ? 1.0 : 0.0));
  }
  std::mt19937 rng(3);
  const TriangleGeometry g = random_triangle(rng);
  const auto dphi = p2_basis_gradients(g, Vec3(0.2, 0.3, 0.5));
  Vec2 s = Vec2::Zero();
  for (const Vec2& d : dphi) s += d;
  CHECK(s.norm() < 1e-12);
}

TEST_CASE("discrete gradient is exact on quadratics at the P2 nodes") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const TriangleGeometry g = random_triangle(rng, 0.1 + trial * 0.05);
    const Quadratic q = random_quadratic(rng);
    const Vec12 theta = dkt_local_gradient_matrix(g) * local_dofs(g, q);
    const auto nodes = p2_nodes(g);
    for (int n = 0; n < 6; ++n) CHECK((theta.segment<2>(2 * n) - q.gradient(nodes[n])).norm() < 1e-12);
    // the whole quadratic field, not only the nodal values
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double s = u(rng), t = u(rng) * (1 - s);
    const Vec3 l(1 - s - t, s, t);
    CHECK((evaluate_p2_field(theta, l) - q.gradient(point_at(g, l))).norm() < 1e-12);
    CHECK((evaluate_p2_field_gradient(g, theta, l) - q.hessian()).norm() < 1e-10);
  }
}

TEST_CASE("discrete gradient reproduces nodal gradients and annihilates constants") {
  std::mt19937 rng(5);
  const TriangleGeometry g = random_triangle(rng);
  const Mat12x9 G = dkt_local_gradient_matrix(g);
  std::uniform_real_distribution<double> u(-1, 1);
  Vec9 d;
  for (int i = 0; i < 9; ++i) d[i] = u(rng);
  const Vec12 theta = G * d;
  for (int i = 0; i < 3; ++i) CHECK((theta.segment<2>(2 * i) - d.segment<2>(3 * i + 1)).norm() < 1e-14);
  Vec9 c = Vec9::Zero();
  c[0] = c[3] = c[6] = 4.2;
  CHECK((G * c).norm() < 1e-13);
}

TEST_CASE("P2 vector stiffness on the reference triangle") {
  const TriangleGeometry g = make_triangle_geometry(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1));
  // scalar P2 stiffness with nodes v0 v1 v2 m01 m12 m20, times 6
  Eigen::Matrix<double, 6, 6> ref;
  ref << 6, 1, 1, -4, 0, -4,
         1, 3, 0, -4, 0, 0,
         1, 0, 3, 0, 0, -4,
        -4, -4, 0, 16, -8, 0,
         0, 0, 0, -8, 16, -8,
        -4, 0, -4, 0, -8, 16;
  ref /= 6.0;
  // node n of the element ordering sits at position perm[n] of the reference ordering
  const std::array<int, 6> perm{0, 1, 2, 4, 5, 3};
  const Mat12 S = p2_vector_stiffness(g);
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          CHECK(S(2 * a + c, 2 * b + d) == doctest::Approx(c == d ? ref(perm[a], perm[b]) : 0.0));
}

TEST_CASE("P2 vector stiffness matches a degree 5 quadrature") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const TriangleGeometry g = random_triangle(rng, 0.3);
    Mat12 oracle = Mat12::Zero();
    for (const auto& q : degree5_triangle_rule()) {
      const auto dphi = p2_basis_gradients(g, q.lambda);
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b)
          for (int c = 0; c < 2; ++c) oracle(2 * a + c, 2 * b + c) += q.weight * g.area * dphi[a].dot(dphi[b]);
    }
    const Mat12 S = p2_vector_stiffness(g);
    CHECK((S - oracle).norm() < 1e-12 * oracle.norm());
    CHECK((S - S.transpose()).norm() < 1e-14 * S.norm());
  }
}

TEST_CASE("element bending matrix is PSD with affine kernel") {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const TriangleGeometry g = random_triangle(rng, 0.2 + 0.1 * trial);
    const Mat9 B = scalar_bending_matrix(g);
    Eigen::SelfAdjointEigenSolver<Mat9> eig(B);
    const auto ev = eig.eigenvalues();
    CHECK(ev.minCoeff() > -1e-12 * ev.maxCoeff());
    int zero = 0;
    for (int i = 0; i < 9; ++i) zero += ev[i] < 1e-10 * ev.maxCoeff();
    CHECK(zero == 3);
    // affine functions lie in the kernel
    Quadratic affine;
    affine.a = {0.3, -1.2, 0.7, 0, 0, 0};
    const Vec9 d = local_dofs(g, affine);
    CHECK((B * d).norm() < 1e-11);
    // energy of a quadratic is |T| |D^2 w|^2 / 2
    const Quadratic q = random_quadratic(rng);
    const Vec9 dq = local_dofs(g, q);
    CHECK(0.5 * dq.dot(B * dq) == doctest::Approx(0.5 * g.area * q.hessian().squaredNorm()).epsilon(1e-10));

    const auto K = element_bending_matrix(g);
    for (int c = 0; c < 3; ++c) CHECK((K.block<9, 9>(9 * c, 9 * c) - B).norm() == 0.0);
    CHECK(K.block<9, 9>(0, 9).norm() == 0.0);
  }
}

TEST_CASE("discrete Laplacian is exact on quadratics") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const TriangleGeometry g = random_triangle(rng);
    Quadratic half_r2;
    half_r2.a = {0, 0, 0, 0.5, 0, 0.5};
    std::array<Vec9, 3> comps{local_dofs(g, half_r2), local_dofs(g, random_quadratic(rng)), Vec9::Zero()};
    Quadratic lin;
    lin.a = {1, 2, 3, 0, 0, 0};
    comps[2] = local_dofs(g, lin);
    const auto lap = discrete_laplacian_at_vertices(g, comps);
    for (int i = 0; i < 3; ++i) {
      CHECK(lap[i][0] == doctest::Approx(2.0).epsilon(1e-11));
      CHECK(std::abs(lap[i][2]) < 1e-11);
    }
    const Mat3x9 L = discrete_laplacian_matrix(g);
    const Quadratic q = random_quadratic(rng);
    const Vec3 vals = L * local_dofs(g, q);
    for (int i = 0; i < 3; ++i) CHECK(vals[i] == doctest::Approx(2 * q.a[3] + 2 * q.a[5]).epsilon(1e-10));
  }
}

TEST_CASE("flat embedding has zero discrete Laplacian") {
  const TriangleMesh mesh = generate_oshape_mesh(1, Pattern::symmetric);
  const DeformationField y = flat_embedding(mesh);
  const DktOperators ops(mesh);
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int c = 0; c < 3; ++c) CHECK((ops.element(t).laplacian * y.local(mesh.triangles()[t], c)).norm() < 1e-12);
}

TEST_CASE("lumped integration") {
  const TriangleMesh mesh = generate_rectangle_mesh(1, Pattern::nonsymmetric);
  ElementVertexValues c(mesh.num_triangles(), {2.5, 2.5, 2.5});
  CHECK(lumped_p1_integral(mesh, c) == doctest::Approx(2.5 * 40.0));

  ElementVertexValues x1(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int i = 0; i < 3; ++i) x1[t][i] = mesh.vertices()[mesh.triangles()[t][i]].x();
  CHECK(std::abs(lumped_p1_integral(mesh, x1)) < 1e-12);

  // random discontinuous P1 function against a degree 5 rule
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> u(-1, 1);
  ElementVertexValues r(mesh.num_triangles());
  double exact = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (double& v : r[t]) v = u(rng);
    for (const auto& q : degree5_triangle_rule())
      exact += q.weight * mesh.area(t) * (q.lambda[0] * r[t][0] + q.lambda[1] * r[t][1] + q.lambda[2] * r[t][2]);
  }
  CHECK(std::abs(lumped_p1_integral(mesh, r) - exact) < 1e-13);

  const Eigen::VectorXd m = lumped_vertex_masses(mesh);
  CHECK(m.sum() == doctest::Approx(40.0).epsilon(1e-14));
  CHECK(m.minCoeff() > 0.0);
}

TEST_CASE("discrete Lp norms") {
  const TriangleMesh mesh = generate_oshape_mesh(1, Pattern::symmetric);
  ElementVertexValues c(mesh.num_triangles(), {-3.0, -3.0, -3.0});
  CHECK(discrete_lp_norm(mesh, c, 2.0) == doctest::Approx(3.0 * std::sqrt(24.0)));
  CHECK(discrete_lp_norm(mesh, c, 1.0) == doctest::Approx(72.0));
  CHECK(discrete_lp_norm(mesh, c, std::numeric_limits<double>::infinity()) == doctest::Approx(3.0));
  CHECK_THROWS_AS(discrete_lp_norm(mesh, c, 0.5), std::invalid_argument);

  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  ElementVertexValues r(mesh.num_triangles());
  double consistent = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (double& v : r[t]) v = u(rng);
    for (const auto& q : degree5_triangle_rule())
      consistent += q.weight * mesh.area(t) *
                    std::pow(q.lambda[0] * r[t][0] + q.lambda[1] * r[t][1] + q.lambda[2] * r[t][2], 2);
  }
  // the element consistent mass has eigenvalues |T|/12 (4, 1, 1), the lumped one |T|/3
  const double ratio = discrete_lp_norm(mesh, r, 2.0) / std::sqrt(consistent);
  CHECK(ratio >= 1.0 - 1e-12);
  CHECK(ratio <= 2.0 + 1e-12);

  ElementVertexValues oscillating(mesh.num_triangles(), {1.0, -1.0, 0.0});
  double osc = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) osc += mesh.area(t) / 12.0 * 2.0;
  CHECK(discrete_lp_norm(mesh, oscillating, 2.0) / std::sqrt(osc) == doctest::Approx(2.0));
}

TEST_CASE("DKT interpolation sets nodal data only") {
  const TriangleMesh mesh = generate_rectangle_mesh(1, Pattern::symmetric);
  const DeformationField flat = flat_embedding(mesh);
  const DeformationField interp = interpolate_dkt(mesh, [](const Vec2& x) {
    Grad32 g = Grad32::Zero();
    g(0, 0) = g(1, 1) = 1.0;
    return std::make_pair(Vec3(x.x(), x.y(), 0.0), g);
  });
  CHECK((flat.dofs() - interp.dofs()).norm() == 0.0);

  const DeformationField y = interpolate_dkt(mesh, [](const Vec2& x) {
    Grad32 g;
    g << 2 * x.x(), 0, 0, 3, x.y(), x.x();
    return std::make_pair(Vec3(x.x() * x.x(), 3 * x.y(), x.x() * x.y()), g);
  });
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const Vec2& x = mesh.vertices()[v];
    CHECK(y.position(v).isApprox(Vec3(x.x() * x.x(), 3 * x.y(), x.x() * x.y())));
    CHECK(y.gradient(v)(2, 1) == x.x());
    CHECK(y.dofs()[DktDofMap::index(v, 0, kD1)] == 2 * x.x());
  }
}

TEST_CASE("dof map partitions free and fixed dofs") {
  const TriangleMesh mesh =
      generate_oshape_mesh(1, Pattern::symmetric).with_dirichlet(oshape_corner_segments());
  const DktDofMap map(mesh);
  CHECK(map.num_dofs() == 9 * mesh.num_vertices());
  CHECK(map.num_free() == 9 * (mesh.num_vertices() - mesh.num_dirichlet_vertices()));
  int fixed = 0;
  for (int d = 0; d < map.num_dofs(); ++d) {
    fixed += map.is_fixed(d);
    if (!map.is_fixed(d)) CHECK(map.free_dofs()[map.free_index(d)] == d);
    CHECK(map.is_fixed(d) == map.is_fixed_vertex(d / 9));
  }
  CHECK(fixed == 9 * mesh.num_dirichlet_vertices());
  const auto ld = map.local_dofs({4, 7, 9}, 2);
  CHECK(ld[0] == 9 * 4 + 6);
  CHECK(ld[4] == 9 * 7 + 7);
  CHECK(ld[8] == 9 * 9 + 8);
}

TEST_CASE("reduced cubic interpolates nodal data and reproduces quadratics") {
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const TriangleGeometry g = random_triangle(rng, 0.1 + 0.2 * trial);
    const ReducedCubic p(g);
    Vec9 d;
    for (int i = 0; i < 9; ++i) d[i] = u(rng);
    for (int i = 0; i < 3; ++i) {
      CHECK(p.value(d, g.corners[i]) == doctest::Approx(d[3 * i]).epsilon(1e-11));
      CHECK((p.gradient(d, g.corners[i]) - d.segment<2>(3 * i + 1)).norm() < 1e-10);
    }
    const Vec2 xc = g.centroid();
    double center = 0.0;
    for (int i = 0; i < 3; ++i)
      center += (2 * d[3 * i] - d.segment<2>(3 * i + 1).dot(g.corners[i] - xc)) / 6.0;
    CHECK(p.value(d, xc) == doctest::Approx(center).epsilon(1e-11));

    const Quadratic q = random_quadratic(rng);
    const Vec9 dq = local_dofs(g, q);
    const Vec2 x = point_at(g, Vec3(0.2, 0.5, 0.3));
    CHECK(p.value(dq, x) == doctest::Approx(q.value(x)).epsilon(1e-10));
    CHECK((p.gradient(dq, x) - q.gradient(x)).norm() < 1e-9);
    CHECK((p.hessian(dq, x) - q.hessian()).norm() < 1e-8);
  }
}

TEST_CASE("error norms vanish for a quadratic map") {
  const TriangleMesh mesh = generate_rectangle_mesh(0, Pattern::symmetric);
  std::mt19937 rng(31);
  const std::array<Quadratic, 3> q{random_quadratic(rng), random_quadratic(rng), random_quadratic(rng)};
  SmoothJet jet;
  jet.value = [&](const Vec2& x) { return Vec3(q[0].value(x), q[1].value(x), q[2].value(x)); };
  jet.gradient = [&](const Vec2& x) {
    Grad32 g;
    for (int c = 0; c < 3; ++c) g.row(c) = q[c].gradient(x).transpose();
    return g;
  };
  jet.hessian = [&](const Vec2&) {
    return std::array<Eigen::Matrix2d, 3>{q[0].hessian(), q[1].hessian(), q[2].hessian()};
  };
  const DeformationField y =
      interpolate_dkt(mesh, [&](const Vec2& x) { return std::make_pair(jet.value(x), jet.gradient(x)); });
  const DktErrorNorms e = dkt_error_norms(mesh, y, jet);
  CHECK(e.l2 < 1e-10);
  CHECK(e.h1_seminorm < 1e-10);
  CHECK(e.discrete_hessian < 1e-10);
}

namespace {

struct NormRatios {
  double grad_lo = 1e300, grad_hi = 0.0;  // ||nabla_h w|| / ||grad w||
  double hess_lo = 1e300, hess_hi = 0.0;  // ||grad nabla_h w|| / ||D^2 w||
  double approx_hi = 0.0;                 // max_T ||nabla_h w - grad w||_T / (h_T ||grad nabla_h w||_T)
};

// Random scalar DKT fields with the rectangle's short side clamped, measured
// with the reduced cubic as the DKT function.
NormRatios measure_norm_ratios(int level, int samples, unsigned seed) {
  const TriangleMesh mesh =
      generate_rectangle_mesh(level, Pattern::nonsymmetric).with_dirichlet(rectangle_clamp_segments());
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  const double h = std::ldexp(1.0, -level);
  NormRatios r;
  std::vector<TriangleGeometry> geoms;
  for (int t = 0; t < mesh.num_triangles(); ++t) geoms.push_back(triangle_geometry(mesh, t));
  for (int s = 0; s < samples; ++s) {
    std::vector<Vec3> nodal(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v)
      nodal[v] = mesh.dirichlet_vertices()[v] ? Vec3::Zero() : Vec3(h * n(rng), n(rng), n(rng));
    double grad_h = 0, grad = 0, hess_h = 0, hess = 0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const TriangleGeometry& g = geoms[t];
      Vec9 d;
      for (int i = 0; i < 3; ++i) d.segment<3>(3 * i) = nodal[mesh.triangles()[t][i]];
      const ReducedCubic p(g);
      const Vec12 theta = dkt_local_gradient_matrix(g) * d;
      double diff_T = 0, hess_h_T = 0;
      for (const auto& q : degree5_triangle_rule()) {
        const double w = q.weight * g.area;
        const Vec2 x = point_at(g, q.lambda);
        const Vec2 th = evaluate_p2_field(theta, q.lambda);
        const Vec2 gw = p.gradient(d, x);
        const Eigen::Matrix2d dth = evaluate_p2_field_gradient(g, theta, q.lambda);
        grad_h += w * th.squaredNorm();
        grad += w * gw.squaredNorm();
        hess_h += w * dth.squaredNorm();
        hess += w * p.hessian(d, x).squaredNorm();
        diff_T += w * (th - gw).squaredNorm();
        hess_h_T += w * dth.squaredNorm();
      }
      if (hess_h_T > 0) r.approx_hi = std::max(r.approx_hi, std::sqrt(diff_T / hess_h_T) / g.diameter());
    }
    const double rg = std::sqrt(grad_h / grad), rh = std::sqrt(hess_h / hess);
    r.grad_lo = std::min(r.grad_lo, rg);
    r.grad_hi = std::max(r.grad_hi, rg);
    r.hess_lo = std::min(r.hess_lo, rh);
    r.hess_hi = std::max(r.hess_hi, rh);
  }
  return r;
}

}  // namespace

TEST_CASE("norm equivalences hold with level independent constants") {
  std::vector<NormRatios> levels;
  for (int level = 1; level <= 3; ++level) levels.push_back(measure_norm_ratios(level, 100 / (1 << level), 37u + level));
  for (const NormRatios& r : levels) {
    CHECK(r.grad_lo > 0.1);
    CHECK(r.grad_hi < 10.0);
    CHECK(r.hess_lo > 0.1);
    CHECK(r.hess_hi < 10.0);
    CHECK(r.approx_hi < 10.0);
  }
  // constants measured on successive levels agree within a factor of 2
  for (size_t i = 1; i < levels.size(); ++i) {
    CHECK(levels[i].grad_hi / levels[i].grad_lo < 2.0 * levels[0].grad_hi / levels[0].grad_lo);
    CHECK(levels[i].hess_hi / levels[i].hess_lo < 2.0 * levels[0].hess_hi / levels[0].hess_lo);
    CHECK(levels[i].approx_hi < 2.0 * levels[0].approx_hi);
  }
}

TEST_CASE("clamped fields with vanishing discrete Hessian are zero") {
  const TriangleMesh mesh =
      generate_rectangle_mesh(0, Pattern::nonsymmetric).with_dirichlet(rectangle_clamp_segments());
  const DktOperators ops(mesh);
  const DktDofMap map(mesh);
  const SparseMatrix K = assemble_bending_stiffness(mesh, ops);
  Eigen::MatrixXd Kff(map.num_free(), map.num_free());
  const Eigen::MatrixXd dense = Eigen::MatrixXd(K);
  for (int i = 0; i < map.num_free(); ++i)
    for (int j = 0; j < map.num_free(); ++j) Kff(i, j) = dense(map.free_dofs()[i], map.free_dofs()[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Kff);
  CHECK(eig.eigenvalues().minCoeff() > 1e-8 * eig.eigenvalues().maxCoeff());
}
