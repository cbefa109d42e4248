#pragma once

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bilayer {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Pattern { nonsymmetric, symmetric };

enum class BoundaryTag { free, dirichlet };

Pattern parse_pattern(const std::string& name);
std::string to_string(Pattern pattern);

struct Edge {
  // vertices[0] < vertices[1]; the tangent points from vertices[0] to vertices[1].
  std::array<int, 2> vertices{};
  Vec2 midpoint = Vec2::Zero();
  Vec2 tangent = Vec2::Zero();
  Vec2 normal = Vec2::Zero();  // tangent rotated by +90 degrees
  double length = 0.0;
  // triangles[1] == -1 on the boundary
  std::array<int, 2> triangles{-1, -1};
  BoundaryTag tag = BoundaryTag::free;

  bool on_boundary() const { return triangles[1] < 0; }
};

// Closed axis-aligned segment [a, b] on the domain boundary.
struct BoundarySegment {
  Vec2 a;
  Vec2 b;
};

/// Conforming, counterclockwise triangulation of a planar domain with edge
/// connectivity and Dirichlet tags. Immutable once constructed; tagging
/// returns a new mesh.
class TriangleMesh {
 public:
  TriangleMesh() = default;
  TriangleMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  // Local edge k of triangle t is opposite to local vertex k.
  const std::array<int, 3>& triangle_edges(int t) const { return triangle_edges_[t]; }

  double area(int t) const { return areas_[t]; }
  double total_area() const { return total_area_; }
  double diameter(int t) const;
  double h_max() const { return h_max_; }
  double h_min() const { return h_min_; }

  int num_boundary_edges() const;
  int num_dirichlet_edges() const;
  int num_holes() const { return num_boundary_loops_ - 1; }
  int euler_characteristic() const { return num_vertices() - num_edges() + num_triangles(); }

  // Vertex is Dirichlet iff it is an endpoint of a dirichlet edge.
  const std::vector<bool>& dirichlet_vertices() const { return dirichlet_vertices_; }
  int num_dirichlet_vertices() const;

  /// Returns a copy in which exactly the boundary edges contained in the given
  /// segments are tagged dirichlet. Throws MeshError if a segment is not
  /// axis-aligned, not on the boundary, or not resolved by mesh edges.
  TriangleMesh with_dirichlet(const std::vector<BoundarySegment>& segments) const;

  // Tags by edge index pairs; used when reading persisted meshes.
  TriangleMesh with_dirichlet_edges(const std::vector<std::array<int, 2>>& vertex_pairs) const;

  int find_edge(int a, int b) const;

 private:
  void build_edge_data();
  void validate() const;
  void update_dirichlet_vertices();

  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<std::vector<int>> vertex_edges_;
  std::vector<double> areas_;
  std::vector<bool> dirichlet_vertices_;
  double total_area_ = 0.0;
  double h_max_ = 0.0;
  double h_min_ = 0.0;
  int num_boundary_loops_ = 0;
};

// Rectangle (-5,5)x(-2,2) with halved squares of side 2^-level.
TriangleMesh generate_rectangle_mesh(int level, Pattern pattern);

// O-shape (-5,5)x(-2,2) \ [-4,4]x[-1,1] with halved squares of side 2^-level.
TriangleMesh generate_oshape_mesh(int level, Pattern pattern);

// {-5} x [-2,2]: the clamped short side of the rectangle experiment.
std::vector<BoundarySegment> rectangle_clamp_segments();
// {-5} x [-2,-1] and [-5,-4] x {-2}: the clamped corner of the O-shape.
std::vector<BoundarySegment> oshape_corner_segments();

/// Plain text persistence:
///   vertices N triangles M
///   N lines "x1 x2", M lines "a b c" (0-based), then
///   dirichlet_edges K and K lines "a b".
void write_mesh(std::ostream& out, const TriangleMesh& mesh);
TriangleMesh read_mesh(std::istream& in);

}  // namespace bilayer
