#include "hqo/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numbers>
#include <unordered_map>

namespace hqo {

namespace {

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

std::uint8_t longest_local_edge(const std::vector<Point>& v, const Triangle& t) {
  std::uint8_t best = 0;
  double best_len = -1.0;
  for (std::uint8_t i = 0; i < 3; ++i) {
    const double len = (v[t[(i + 1) % 3]] - v[t[(i + 2) % 3]]).squaredNorm();
    if (len > best_len) {
      best_len = len;
      best = i;
    }
  }
  return best;
}

// Boundary edges of a triangle soup, oriented along their triangle.
std::vector<BoundaryEdge> collect_boundary(
    const std::vector<Point>& vertices, const std::vector<Triangle>& triangles,
    const std::function<BoundaryTag(const Point&)>& tag_at) {
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(triangles.size() * 3);
  for (const auto& t : triangles)
    for (int i = 0; i < 3; ++i) ++count[edge_key(t[(i + 1) % 3], t[(i + 2) % 3])];
  std::vector<BoundaryEdge> out;
  for (const auto& t : triangles) {
    for (int i = 0; i < 3; ++i) {
      const int a = t[(i + 1) % 3];
      const int b = t[(i + 2) % 3];
      if (count[edge_key(a, b)] == 1) {
        const Point mid = 0.5 * (vertices[a] + vertices[b]);
        out.push_back({a, b, tag_at(mid)});
      }
    }
  }
  return out;
}

}  // namespace

MeshParseError::MeshParseError(int line, const std::string& message)
    : MeshError("line " + std::to_string(line) + ": " + message), line_(line) {}

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
           std::vector<BoundaryEdge> boundary_edges,
           std::vector<std::uint8_t> refinement_edges)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary_edges)),
      refinement_(std::move(refinement_edges)) {
  const int nv = num_vertices();
  for (int i = 0; i < nv; ++i) {
    if (!vertices_[i].allFinite())
      throw MeshError("vertex " + std::to_string(i) + " has non-finite coordinates");
  }
  std::vector<char> used(vertices_.size(), 0);
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[t];
    for (int v : tri) {
      if (v < 0 || v >= nv)
        throw MeshError("triangle " + std::to_string(t) + " references vertex " +
                        std::to_string(v) + " out of range");
      used[v] = 1;
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw MeshError("triangle " + std::to_string(t) + " has repeated vertices");
    if (!(signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]) > 0.0))
      throw MeshError("triangle " + std::to_string(t) +
                      " has non-positive signed area");
  }
  for (int i = 0; i < nv; ++i) {
    if (!used[i])
      throw MeshError("vertex " + std::to_string(i) + " is not used by any triangle");
  }

  if (refinement_.empty()) {
    refinement_.reserve(triangles_.size());
    for (const auto& tri : triangles_)
      refinement_.push_back(longest_local_edge(vertices_, tri));
  } else if (refinement_.size() != triangles_.size()) {
    throw MeshError("refinement edge list does not match triangle count");
  }
  for (auto r : refinement_) {
    if (r > 2) throw MeshError("refinement edge index must be 0, 1 or 2");
  }

  build_edge_table();
}

void Mesh::build_edge_table() {
  auto& index = edge_index_;
  index.clear();
  index.reserve(triangles_.size() * 2);
  triangle_edges_.assign(triangles_.size(), {-1, -1, -1});
  edges_.clear();
  edge_triangles_.clear();
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[t];
    for (int i = 0; i < 3; ++i) {
      const int a = tri[(i + 1) % 3];
      const int b = tri[(i + 2) % 3];
      auto [it, inserted] = index.try_emplace(edge_key(a, b), num_edges());
      if (inserted) {
        edges_.push_back({a, b});
        edge_triangles_.push_back({t, -1});
      } else {
        auto& adj = edge_triangles_[it->second];
        if (adj[1] >= 0)
          throw MeshError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                          ") is shared by more than two triangles");
        if (edges_[it->second][0] == a)
          throw MeshError("triangles " + std::to_string(adj[0]) + " and " +
                          std::to_string(t) + " overlap along an edge");
        adj[1] = t;
      }
      triangle_edges_[t][i] = it->second;
    }
  }

  edge_boundary_.assign(edges_.size(), -1);
  for (int k = 0; k < static_cast<int>(boundary_.size()); ++k) {
    auto& be = boundary_[k];
    const auto it = index.find(edge_key(be.a, be.b));
    if (it == index.end())
      throw MeshError("boundary edge (" + std::to_string(be.a) + ", " +
                      std::to_string(be.b) + ") is not an edge of the mesh");
    const int e = it->second;
    if (edge_triangles_[e][1] >= 0)
      throw MeshError("boundary edge (" + std::to_string(be.a) + ", " +
                      std::to_string(be.b) + ") is an interior edge");
    if (edge_boundary_[e] >= 0)
      throw MeshError("boundary edge (" + std::to_string(be.a) + ", " +
                      std::to_string(be.b) + ") is tagged twice");
    edge_boundary_[e] = k;
    be.a = edges_[e][0];
    be.b = edges_[e][1];
  }
  for (int e = 0; e < num_edges(); ++e) {
    if (edge_triangles_[e][1] < 0 && edge_boundary_[e] < 0)
      throw MeshError("boundary edge (" + std::to_string(edges_[e][0]) + ", " +
                      std::to_string(edges_[e][1]) + ") carries no tag");
  }
}

std::optional<BoundaryTag> Mesh::edge_tag(int e) const {
  const int k = edge_boundary_[static_cast<std::size_t>(e)];
  if (k < 0) return std::nullopt;
  return boundary_[static_cast<std::size_t>(k)].tag;
}

int Mesh::find_edge(int a, int b) const {
  if (a < 0 || b < 0) return -1;
  const auto it = edge_index_.find(edge_key(a, b));
  return it == edge_index_.end() ? -1 : it->second;
}

int Mesh::boundary_edge_id(int k) const {
  const auto& be = boundary_[static_cast<std::size_t>(k)];
  return find_edge(be.a, be.b);
}

std::uint64_t Mesh::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& v : vertices_) mix(v.data(), 2 * sizeof(double));
  for (const auto& t : triangles_) mix(t.data(), 3 * sizeof(int));
  for (const auto& b : boundary_) {
    mix(&b.a, sizeof(int));
    mix(&b.b, sizeof(int));
    mix(&b.tag, sizeof(b.tag));
  }
  return h;
}

bool operator==(const Mesh& lhs, const Mesh& rhs) {
  return lhs.vertices_ == rhs.vertices_ && lhs.triangles_ == rhs.triangles_ &&
         lhs.boundary_ == rhs.boundary_ && lhs.refinement_ == rhs.refinement_;
}

// Geometry ------------------------------------------------------------------

Eigen::Matrix<double, 2, 3> corners(const Mesh& m, int t) {
  const auto& tri = m.triangle(t);
  Eigen::Matrix<double, 2, 3> x;
  for (int i = 0; i < 3; ++i) x.col(i) = m.vertex(tri[i]);
  return x;
}

double element_area(const Mesh& m, int t) {
  const auto& tri = m.triangle(t);
  return signed_area(m.vertex(tri[0]), m.vertex(tri[1]), m.vertex(tri[2]));
}

double element_diameter(const Mesh& m, int t) {
  const auto x = corners(m, t);
  double d = 0.0;
  for (int i = 0; i < 3; ++i) d = std::max(d, (x.col((i + 1) % 3) - x.col(i)).norm());
  return d;
}

double global_mesh_size(const Mesh& m) {
  double h = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) h = std::max(h, element_diameter(m, t));
  return h;
}

double min_angle(const Mesh& m) {
  double best = std::numbers::pi;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto x = corners(m, t);
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector2d u = x.col((i + 1) % 3) - x.col(i);
      const Eigen::Vector2d w = x.col((i + 2) % 3) - x.col(i);
      const double c = u.dot(w) / (u.norm() * w.norm());
      best = std::min(best, std::acos(std::clamp(c, -1.0, 1.0)));
    }
  }
  return best;
}

double total_area(const Mesh& m) {
  double a = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) a += element_area(m, t);
  return a;
}

// Built-in geometries ---------------------------------------------------------

namespace {

// Tensor grid with cells split along the rising diagonal; `skip(i, j)` removes
// cell (i, j).
Mesh build_grid(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::function<bool(int, int)>& skip,
                const std::function<BoundaryTag(const Point&)>& tag_at) {
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;
  std::vector<int> id(static_cast<std::size_t>((nx + 1) * (ny + 1)), -1);
  auto node = [&](int i, int j) -> int& { return id[j * (nx + 1) + i]; };
  std::vector<Point> vertices;
  // Mark nodes used by kept cells, then number them row by row.
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (!skip(i, j))
        node(i, j) = node(i + 1, j) = node(i, j + 1) = node(i + 1, j + 1) = 0;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      if (node(i, j) == 0) {
        node(i, j) = static_cast<int>(vertices.size());
        vertices.emplace_back(xs[i], ys[j]);
      }
  std::vector<Triangle> triangles;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (skip(i, j)) continue;
      const int v00 = node(i, j), v10 = node(i + 1, j);
      const int v01 = node(i, j + 1), v11 = node(i + 1, j + 1);
      triangles.push_back({v00, v10, v11});
      triangles.push_back({v00, v11, v01});
    }
  auto boundary = collect_boundary(vertices, triangles, tag_at);
  return Mesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

std::vector<double> linspace(double a, double b, int cells) {
  std::vector<double> x(static_cast<std::size_t>(cells) + 1);
  for (int k = 0; k <= cells; ++k)
    x[k] = (k == cells) ? b : a + (b - a) * static_cast<double>(k) / cells;
  return x;
}

}  // namespace

Mesh build_unit_square(int n, const SideTags& tags) {
  if (n < 1) throw std::invalid_argument("build_unit_square: n must be at least 1");
  const auto xs = linspace(0.0, 1.0, n);
  const double eps = 0.25 / n;
  return build_grid(
      xs, xs, [](int, int) { return false; },
      [&](const Point& p) {
        if (p.y() < eps) return tags.bottom;
        if (p.x() > 1.0 - eps) return tags.right;
        if (p.y() > 1.0 - eps) return tags.top;
        return tags.left;
      });
}

Mesh build_square_with_hole(double outer, double inner, int n, BoundaryTag outer_tag,
                            BoundaryTag inner_tag) {
  if (!(outer > 0.0) || !(inner > 0.0) || !(inner < outer))
    throw std::invalid_argument("build_square_with_hole: need 0 < inner < outer");
  if (n < 1) throw std::invalid_argument("build_square_with_hole: n must be at least 1");
  const double strip = 0.5 * (outer - inner);
  const int n_strip = std::max(1, static_cast<int>(std::lround(n * strip / outer)));
  const int n_hole = std::max(1, static_cast<int>(std::lround(n * inner / outer)));

  std::vector<double> xs = linspace(-0.5 * outer, -0.5 * inner, n_strip);
  const auto mid = linspace(-0.5 * inner, 0.5 * inner, n_hole);
  const auto right = linspace(0.5 * inner, 0.5 * outer, n_strip);
  xs.insert(xs.end(), mid.begin() + 1, mid.end());
  xs.insert(xs.end(), right.begin() + 1, right.end());

  const double eps = 0.25 * std::min(strip / n_strip, inner / n_hole);
  auto in_hole = [&](int i, int j) {
    return i >= n_strip && i < n_strip + n_hole && j >= n_strip && j < n_strip + n_hole;
  };
  return build_grid(xs, xs, in_hole, [&](const Point& p) {
    const bool on_outer = std::max(std::abs(p.x()), std::abs(p.y())) > 0.5 * outer - eps;
    return on_outer ? outer_tag : inner_tag;
  });
}

// Refinement ------------------------------------------------------------------

Mesh refine_uniform(const Mesh& m) {
  const int nv = m.num_vertices();
  std::vector<Point> vertices = m.vertices();
  vertices.reserve(static_cast<std::size_t>(nv + m.num_edges()));
  for (int e = 0; e < m.num_edges(); ++e) {
    const auto& ed = m.edge(e);
    vertices.push_back(0.5 * (m.vertex(ed[0]) + m.vertex(ed[1])));
  }
  std::vector<Triangle> triangles;
  triangles.reserve(4 * static_cast<std::size_t>(m.num_triangles()));
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& [a, b, c] = m.triangle(t);
    const auto& te = m.triangle_edges(t);
    const int ma = nv + te[0], mb = nv + te[1], mc = nv + te[2];
    triangles.push_back({a, mc, mb});
    triangles.push_back({mc, b, ma});
    triangles.push_back({mb, ma, c});
    triangles.push_back({ma, mb, mc});
  }
  std::vector<BoundaryEdge> boundary;
  boundary.reserve(2 * m.boundary_edges().size());
  for (const auto& be : m.boundary_edges()) {
    const int mid = nv + m.find_edge(be.a, be.b);
    boundary.push_back({be.a, mid, be.tag});
    boundary.push_back({mid, be.b, be.tag});
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

Mesh refine_bisection(const Mesh& m, std::span<const int> marked) {
  const int ne = m.num_edges();
  std::vector<char> split(static_cast<std::size_t>(ne), 0);
  auto refinement_edge = [&](int t) {
    return m.triangle_edges(t)[m.refinement_edges()[static_cast<std::size_t>(t)]];
  };

  // Closure: any triangle with a split edge must also split its refinement edge.
  std::deque<int> pending;
  auto mark_edge = [&](int e) {
    if (split[e]) return;
    split[e] = 1;
    for (int t : m.edge_triangles(e))
      if (t >= 0) pending.push_back(t);
  };
  for (int t : marked) {
    if (t < 0 || t >= m.num_triangles())
      throw std::invalid_argument("refine_bisection: triangle id out of range");
    mark_edge(refinement_edge(t));
  }
  while (!pending.empty()) {
    const int t = pending.front();
    pending.pop_front();
    mark_edge(refinement_edge(t));
  }

  std::vector<Point> vertices = m.vertices();
  std::vector<int> midpoint(static_cast<std::size_t>(ne), -1);
  for (int e = 0; e < ne; ++e) {
    if (!split[e]) continue;
    const auto& ed = m.edge(e);
    midpoint[e] = static_cast<int>(vertices.size());
    vertices.push_back(0.5 * (m.vertex(ed[0]) + m.vertex(ed[1])));
  }

  std::vector<Triangle> triangles;
  std::vector<std::uint8_t> refinement;
  auto emit = [&](int x, int y, int z) {
    // Newest vertex first; its opposite edge is the next refinement edge.
    triangles.push_back({x, y, z});
    refinement.push_back(0);
  };
  // Bisect (x, y, z) across (y, z) at p, giving (p, x, y) and (p, z, x).
  for (int t = 0; t < m.num_triangles(); ++t) {
    const int r = m.refinement_edges()[static_cast<std::size_t>(t)];
    const auto& tri = m.triangle(t);
    const auto& te = m.triangle_edges(t);
    if (!split[te[r]]) {
      triangles.push_back(tri);
      refinement.push_back(static_cast<std::uint8_t>(r));
      continue;
    }
    const int a = tri[r], b = tri[(r + 1) % 3], c = tri[(r + 2) % 3];
    const int e_ca = te[(r + 1) % 3];  // opposite b
    const int e_ab = te[(r + 2) % 3];  // opposite c
    const int mid = midpoint[te[r]];
    if (split[e_ab]) {
      const int p = midpoint[e_ab];
      emit(p, mid, a);
      emit(p, b, mid);
    } else {
      emit(mid, a, b);
    }
    if (split[e_ca]) {
      const int q = midpoint[e_ca];
      emit(q, mid, c);
      emit(q, a, mid);
    } else {
      emit(mid, c, a);
    }
  }

  std::vector<BoundaryEdge> boundary;
  boundary.reserve(m.boundary_edges().size());
  for (const auto& be : m.boundary_edges()) {
    const int e = m.find_edge(be.a, be.b);
    if (split[e]) {
      boundary.push_back({be.a, midpoint[e], be.tag});
      boundary.push_back({midpoint[e], be.b, be.tag});
    } else {
      boundary.push_back(be);
    }
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(boundary),
              std::move(refinement));
}

}  // namespace hqo
