#include "bilayer/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace bilayer {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

// Structured halved-square triangulation of the squares of the box
// (-5,5)x(-2,2) whose centers satisfy `inside`. Vertices are numbered
// lexicographically in (x2, x1).
TriangleMesh generate_box_mesh(int level, Pattern pattern,
                               const std::function<bool(double, double)>& inside) {
  if (level < 0) throw MeshError("mesh level must be nonnegative");
  const double h = std::ldexp(1.0, -level);
  const long nx = 10L << level;
  const long ny = 4L << level;
  const double x0 = -5.0;
  const double y0 = -2.0;

  std::vector<char> square_in(static_cast<size_t>(nx * ny), 0);
  for (long j = 0; j < ny; ++j)
    for (long i = 0; i < nx; ++i)
      square_in[j * nx + i] = inside(x0 + (i + 0.5) * h, y0 + (j + 0.5) * h) ? 1 : 0;

  const long npx = nx + 1;
  std::vector<int> lattice_index(static_cast<size_t>(npx * (ny + 1)), -1);
  for (long j = 0; j < ny; ++j)
    for (long i = 0; i < nx; ++i)
      if (square_in[j * nx + i])
        for (long dj = 0; dj < 2; ++dj)
          for (long di = 0; di < 2; ++di) lattice_index[(j + dj) * npx + (i + di)] = 0;

  std::vector<Vec2> vertices;
  for (long j = 0; j <= ny; ++j)
    for (long i = 0; i < npx; ++i)
      if (lattice_index[j * npx + i] == 0) {
        lattice_index[j * npx + i] = static_cast<int>(vertices.size());
        vertices.emplace_back(x0 + i * h, y0 + j * h);
      }

  std::vector<std::array<int, 3>> triangles;
  for (long j = 0; j < ny; ++j)
    for (long i = 0; i < nx; ++i) {
      if (!square_in[j * nx + i]) continue;
      const int p00 = lattice_index[j * npx + i];
      const int p10 = lattice_index[j * npx + i + 1];
      const int p01 = lattice_index[(j + 1) * npx + i];
      const int p11 = lattice_index[(j + 1) * npx + i + 1];
      // The symmetric (union-jack) pattern alternates the diagonal so that every
      // 2h-square is cut along both diagonals and both midlines.
      const bool sw_ne = pattern == Pattern::nonsymmetric || ((i + j) % 2 == 0);
      if (sw_ne) {
        triangles.push_back({p00, p10, p11});
        triangles.push_back({p00, p11, p01});
      } else {
        triangles.push_back({p00, p10, p01});
        triangles.push_back({p10, p11, p01});
      }
    }
  return TriangleMesh(std::move(vertices), std::move(triangles));
}

}  // namespace

Pattern parse_pattern(const std::string& name) {
  if (name == "nonsymmetric") return Pattern::nonsymmetric;
  if (name == "symmetric") return Pattern::symmetric;
  throw MeshError("unknown mesh pattern '" + name + "' (expected symmetric or nonsymmetric)");
}

std::string to_string(Pattern pattern) {
  return pattern == Pattern::symmetric ? "symmetric" : "nonsymmetric";
}

TriangleMesh::TriangleMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (triangles_.empty()) throw MeshError("mesh has no triangles");
  const int nv = num_vertices();
  for (const auto& tri : triangles_)
    for (int v : tri)
      if (v < 0 || v >= nv) throw MeshError("triangle references vertex out of range");

  areas_.resize(triangles_.size());
  h_max_ = 0.0;
  h_min_ = std::numeric_limits<double>::infinity();
  total_area_ = 0.0;
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[t];
    areas_[t] = signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
    total_area_ += areas_[t];
    const double d = diameter(t);
    h_max_ = std::max(h_max_, d);
    h_min_ = std::min(h_min_, d);
  }
  build_edge_data();
  validate();
  dirichlet_vertices_.assign(vertices_.size(), false);
}

double TriangleMesh::diameter(int t) const {
  const auto& tri = triangles_[t];
  double d = 0.0;
  for (int k = 0; k < 3; ++k)
    d = std::max(d, (vertices_[tri[(k + 1) % 3]] - vertices_[tri[k]]).norm());
  return d;
}

void TriangleMesh::build_edge_data() {
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> incidence;
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[(k + 1) % 3];
      const int b = tri[(k + 2) % 3];
      incidence[{std::min(a, b), std::max(a, b)}].emplace_back(t, k);
    }
  }

  edges_.clear();
  edges_.reserve(incidence.size());
  triangle_edges_.assign(triangles_.size(), {-1, -1, -1});
  vertex_edges_.assign(vertices_.size(), {});
  for (const auto& [key, owners] : incidence) {
    if (owners.size() > 2)
      throw MeshError("nonconforming connectivity: edge (" + std::to_string(key.first) + "," +
                      std::to_string(key.second) + ") shared by more than two triangles");
    if (owners.size() == 2) {
      // Consistently oriented neighbours traverse the shared edge in opposite directions.
      const auto& t0 = triangles_[owners[0].first];
      const int k0 = owners[0].second;
      const auto& t1 = triangles_[owners[1].first];
      const int k1 = owners[1].second;
      if (t0[(k0 + 1) % 3] != t1[(k1 + 2) % 3])
        throw MeshError("nonconforming connectivity: inconsistent orientation across edge");
    }
    Edge e;
    e.vertices = {key.first, key.second};
    const Vec2& p = vertices_[key.first];
    const Vec2& q = vertices_[key.second];
    e.midpoint = 0.5 * (p + q);
    e.length = (q - p).norm();
    if (e.length <= 0.0) throw MeshError("zero-length edge");
    e.tangent = (q - p) / e.length;
    e.normal = Vec2(-e.tangent.y(), e.tangent.x());
    e.triangles = {owners[0].first, owners.size() == 2 ? owners[1].first : -1};
    const int id = static_cast<int>(edges_.size());
    for (const auto& [t, k] : owners) triangle_edges_[t][k] = id;
    vertex_edges_[key.first].push_back(id);
    vertex_edges_[key.second].push_back(id);
    edges_.push_back(e);
  }

  DisjointSets loops(num_vertices());
  std::vector<bool> on_boundary(vertices_.size(), false);
  for (const auto& e : edges_)
    if (e.on_boundary()) {
      loops.unite(e.vertices[0], e.vertices[1]);
      on_boundary[e.vertices[0]] = on_boundary[e.vertices[1]] = true;
    }
  num_boundary_loops_ = 0;
  for (int v = 0; v < num_vertices(); ++v)
    if (on_boundary[v] && loops.find(v) == v) ++num_boundary_loops_;
}

void TriangleMesh::validate() const {
  const double tol = 1e-14 * h_max_ * h_max_;
  for (int t = 0; t < num_triangles(); ++t)
    if (!(areas_[t] > tol))
      throw MeshError("triangle " + std::to_string(t) + " is degenerate or clockwise");
  for (int v = 0; v < num_vertices(); ++v)
    if (vertex_edges_[v].empty()) throw MeshError("vertex " + std::to_string(v) + " is isolated");
}

int TriangleMesh::find_edge(int a, int b) const {
  if (a < 0 || b < 0 || a >= num_vertices() || b >= num_vertices()) return -1;
  for (int e : vertex_edges_[a]) {
    const auto& ev = edges_[e].vertices;
    if ((ev[0] == a && ev[1] == b) || (ev[0] == b && ev[1] == a)) return e;
  }
  return -1;
}

int TriangleMesh::num_boundary_edges() const {
  return static_cast<int>(
      std::count_if(edges_.begin(), edges_.end(), [](const Edge& e) { return e.on_boundary(); }));
}

int TriangleMesh::num_dirichlet_edges() const {
  return static_cast<int>(std::count_if(edges_.begin(), edges_.end(), [](const Edge& e) {
    return e.tag == BoundaryTag::dirichlet;
  }));
}

int TriangleMesh::num_dirichlet_vertices() const {
  return static_cast<int>(std::count(dirichlet_vertices_.begin(), dirichlet_vertices_.end(), true));
}

void TriangleMesh::update_dirichlet_vertices() {
  dirichlet_vertices_.assign(vertices_.size(), false);
  for (const auto& e : edges_)
    if (e.tag == BoundaryTag::dirichlet)
      dirichlet_vertices_[e.vertices[0]] = dirichlet_vertices_[e.vertices[1]] = true;
}

TriangleMesh TriangleMesh::with_dirichlet(const std::vector<BoundarySegment>& segments) const {
  TriangleMesh tagged = *this;
  for (auto& e : tagged.edges_) e.tag = BoundaryTag::free;
  const double tol = 1e-10 * std::max(1.0, h_max_);

  for (const auto& seg : segments) {
    const bool vertical = std::abs(seg.a.x() - seg.b.x()) <= tol;
    const bool horizontal = std::abs(seg.a.y() - seg.b.y()) <= tol;
    const double seg_len = (seg.b - seg.a).norm();
    if (!(vertical || horizontal) || seg_len <= tol)
      throw MeshError("dirichlet segment must be axis-aligned with positive length");

    auto on_segment = [&](const Vec2& p) {
      if (vertical) {
        return std::abs(p.x() - seg.a.x()) <= tol &&
               p.y() >= std::min(seg.a.y(), seg.b.y()) - tol &&
               p.y() <= std::max(seg.a.y(), seg.b.y()) + tol;
      }
      return std::abs(p.y() - seg.a.y()) <= tol && p.x() >= std::min(seg.a.x(), seg.b.x()) - tol &&
             p.x() <= std::max(seg.a.x(), seg.b.x()) + tol;
    };

    double covered = 0.0;
    for (auto& e : tagged.edges_) {
      if (!e.on_boundary()) continue;
      if (on_segment(vertices_[e.vertices[0]]) && on_segment(vertices_[e.vertices[1]])) {
        e.tag = BoundaryTag::dirichlet;
        covered += e.length;
      }
    }
    if (std::abs(covered - seg_len) > 1e-9 * seg_len) {
      std::ostringstream msg;
      msg << "dirichlet segment (" << seg.a.x() << "," << seg.a.y() << ")-(" << seg.b.x() << ","
          << seg.b.y() << ") is not resolved by boundary edges (covered length " << covered
          << " of " << seg_len << ")";
      throw MeshError(msg.str());
    }
  }
  tagged.update_dirichlet_vertices();
  return tagged;
}

TriangleMesh TriangleMesh::with_dirichlet_edges(
    const std::vector<std::array<int, 2>>& vertex_pairs) const {
  TriangleMesh tagged = *this;
  for (auto& e : tagged.edges_) e.tag = BoundaryTag::free;
  for (const auto& [a, b] : vertex_pairs) {
    const int e = find_edge(a, b);
    if (e < 0) throw MeshError("tagged edge is not an edge of the mesh");
    if (!edges_[e].on_boundary()) throw MeshError("tagged edge is not on the boundary");
    tagged.edges_[e].tag = BoundaryTag::dirichlet;
  }
  tagged.update_dirichlet_vertices();
  return tagged;
}

TriangleMesh generate_rectangle_mesh(int level, Pattern pattern) {
  return generate_box_mesh(level, pattern, [](double, double) { return true; });
}

TriangleMesh generate_oshape_mesh(int level, Pattern pattern) {
  return generate_box_mesh(level, pattern, [](double x, double y) {
    return !(std::abs(x) < 4.0 && std::abs(y) < 1.0);
  });
}

std::vector<BoundarySegment> rectangle_clamp_segments() {
  return {{Vec2(-5.0, -2.0), Vec2(-5.0, 2.0)}};
}

std::vector<BoundarySegment> oshape_corner_segments() {
  return {{Vec2(-5.0, -2.0), Vec2(-5.0, -1.0)}, {Vec2(-5.0, -2.0), Vec2(-4.0, -2.0)}};
}

void write_mesh(std::ostream& out, const TriangleMesh& mesh) {
  const auto old_precision = out.precision(17);
  out << "vertices " << mesh.num_vertices() << " triangles " << mesh.num_triangles() << '\n';
  for (const auto& v : mesh.vertices()) out << v.x() << ' ' << v.y() << '\n';
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "dirichlet_edges " << mesh.num_dirichlet_edges() << '\n';
  for (const auto& e : mesh.edges())
    if (e.tag == BoundaryTag::dirichlet) out << e.vertices[0] << ' ' << e.vertices[1] << '\n';
  out.precision(old_precision);
}

TriangleMesh read_mesh(std::istream& in) {
  std::string kw_v, kw_t;
  long nv = 0, nt = 0;
  if (!(in >> kw_v >> nv >> kw_t >> nt) || kw_v != "vertices" || kw_t != "triangles" || nv < 0 ||
      nt < 0)
    throw MeshError("malformed mesh header");
  std::vector<Vec2> vertices(static_cast<size_t>(nv));
  for (auto& v : vertices)
    if (!(in >> v.x() >> v.y())) throw MeshError("malformed vertex line");
  std::vector<std::array<int, 3>> triangles(static_cast<size_t>(nt));
  for (auto& t : triangles)
    if (!(in >> t[0] >> t[1] >> t[2])) throw MeshError("malformed triangle line");
  TriangleMesh mesh(std::move(vertices), std::move(triangles));

  std::string kw_e;
  long ne = 0;
  if (!(in >> kw_e)) return mesh;
  if (kw_e != "dirichlet_edges" || !(in >> ne) || ne < 0) throw MeshError("malformed edge header");
  std::vector<std::array<int, 2>> pairs(static_cast<size_t>(ne));
  for (auto& p : pairs)
    if (!(in >> p[0] >> p[1])) throw MeshError("malformed tagged edge line");
  return mesh.with_dirichlet_edges(pairs);
}

}  // namespace bilayer
