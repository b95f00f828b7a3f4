#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace hqo {

using Point = Eigen::Vector2d;

enum class BoundaryTag : std::uint8_t { Dirichlet, Neumann };

/// Vertex indices of a triangle in counter-clockwise order. Local edge i is
/// the edge opposite local vertex i.
using Triangle = std::array<int, 3>;

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::Dirichlet;

  friend bool operator==(const BoundaryEdge&, const BoundaryEdge&) = default;
};

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MeshParseError : public MeshError {
 public:
  MeshParseError(int line, const std::string& message);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Conforming triangulation with tagged boundary edges.
///
/// The constructor validates every structural invariant (positive orientation,
/// edge conformity, boundary tags covering exactly the edges with one adjacent
/// triangle) and throws MeshError otherwise. Boundary edges are re-oriented to
/// follow their triangle. Meshes are immutable once built.
class Mesh {
 public:
  /// An empty `refinement_edges` selects the longest edge of every triangle.
  Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
       std::vector<BoundaryEdge> boundary_edges,
       std::vector<std::uint8_t> refinement_edges = {});

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const noexcept {
    return boundary_;
  }
  const std::vector<std::uint8_t>& refinement_edges() const noexcept {
    return refinement_;
  }

  int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
  int num_triangles() const noexcept { return static_cast<int>(triangles_.size()); }
  int num_edges() const noexcept { return static_cast<int>(edges_.size()); }

  const Point& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const Triangle& triangle(int t) const { return triangles_[static_cast<std::size_t>(t)]; }

  /// Endpoints of edge e, oriented as in its first adjacent triangle.
  const std::array<int, 2>& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
  /// Adjacent triangles of edge e; the second entry is -1 on the boundary.
  const std::array<int, 2>& edge_triangles(int e) const {
    return edge_triangles_[static_cast<std::size_t>(e)];
  }
  /// Global edge ids of triangle t, local edge i opposite local vertex i.
  const std::array<int, 3>& triangle_edges(int t) const {
    return triangle_edges_[static_cast<std::size_t>(t)];
  }
  /// Tag of a boundary edge, empty for interior edges.
  std::optional<BoundaryTag> edge_tag(int e) const;
  bool is_boundary_edge(int e) const { return edge_triangles(e)[1] < 0; }

  /// Global id of the edge joining two vertices, or -1.
  int find_edge(int a, int b) const;
  /// Global edge id of boundary edge k.
  int boundary_edge_id(int k) const;

  /// Stable 64-bit hash of geometry and topology.
  std::uint64_t fingerprint() const;

  friend bool operator==(const Mesh& lhs, const Mesh& rhs);

 private:
  void build_edge_table();

  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<std::uint8_t> refinement_;

  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 2>> edge_triangles_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<int> edge_boundary_;  // index into boundary_ or -1
  std::unordered_map<std::uint64_t, int> edge_index_;
};

// Geometry ------------------------------------------------------------------

template <typename Scalar>
Scalar signed_area(const Eigen::Matrix<Scalar, 2, 1>& a,
                   const Eigen::Matrix<Scalar, 2, 1>& b,
                   const Eigen::Matrix<Scalar, 2, 1>& c) {
  return Scalar(0.5) * ((b.x() - a.x()) * (c.y() - a.y()) -
                        (c.x() - a.x()) * (b.y() - a.y()));
}

/// Corner coordinates of triangle t as the columns of a 2x3 matrix.
Eigen::Matrix<double, 2, 3> corners(const Mesh& m, int t);

double element_area(const Mesh& m, int t);
/// Longest edge length of triangle t.
double element_diameter(const Mesh& m, int t);
/// Maximum element diameter.
double global_mesh_size(const Mesh& m);
/// Smallest interior angle over all triangles, in radians.
double min_angle(const Mesh& m);
double total_area(const Mesh& m);

// Built-in geometries --------------------------------------------------------

struct SideTags {
  BoundaryTag bottom = BoundaryTag::Dirichlet;
  BoundaryTag right = BoundaryTag::Dirichlet;
  BoundaryTag top = BoundaryTag::Dirichlet;
  BoundaryTag left = BoundaryTag::Dirichlet;

  static SideTags all(BoundaryTag tag) { return {tag, tag, tag, tag}; }
};

/// Structured mesh of [0,1]^2 with n cells per side, each cell split along its
/// lower-left to upper-right diagonal.
Mesh build_unit_square(int n, const SideTags& tags = {});

/// Square [-L/2, L/2]^2 minus the concentric square hole [-l/2, l/2]^2.
/// `n` is the number of cells across the outer side; both the hole and the
/// surrounding strips receive at least one cell.
Mesh build_square_with_hole(double outer, double inner, int n,
                            BoundaryTag outer_tag = BoundaryTag::Dirichlet,
                            BoundaryTag inner_tag = BoundaryTag::Dirichlet);

// Refinement -----------------------------------------------------------------

/// Red refinement: every triangle is split into four congruent children.
Mesh refine_uniform(const Mesh& m);

/// Newest-vertex bisection of the marked triangles with conforming closure.
Mesh refine_bisection(const Mesh& m, std::span<const int> marked);

// Text format ------------------------------------------------------------------

std::string write_mesh(const Mesh& m);
Mesh read_mesh(std::string_view text);

Mesh load_mesh(const std::string& path);
void save_mesh(const std::string& path, const Mesh& m);

}  // namespace hqo
