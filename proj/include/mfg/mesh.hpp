#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfg/error.hpp"

namespace mfg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class BoundaryKind { Interior, Dirichlet, Neumann };

struct BoundaryTag {
  BoundaryKind kind = BoundaryKind::Interior;
  int region = 0; // only meaningful for Neumann edges

  static BoundaryTag dirichlet() { return {BoundaryKind::Dirichlet, 0}; }
  static BoundaryTag neumann(int region = 0) { return {BoundaryKind::Neumann, region}; }

  bool operator==(const BoundaryTag&) const = default;
};

struct Edge {
  std::array<int, 2> vertices;    // sorted ascending
  std::array<int, 2> elements;    // second entry is -1 on boundary edges
  BoundaryTag tag;

  bool is_boundary() const { return elements[1] < 0; }
};

/// Assigns a tag to a boundary edge from its endpoint coordinates.
/// Returning std::nullopt means the edge is not covered by the rule.
using BoundaryRule = std::function<std::optional<BoundaryTag>(const Vec2& a, const Vec2& b)>;

/// Same as BoundaryRule but keyed by vertex indices (used when rebuilding topology).
using BoundaryLookup = std::function<std::optional<BoundaryTag>(int a, int b)>;

BoundaryRule all_dirichlet();

/// Conforming triangulation of a polygonal domain in 2D.
///
/// Local edge k of a triangle is the edge opposite local vertex k, i.e. it
/// joins vertices (k+1)%3 and (k+2)%3.  The refinement edge of a triangle is
/// stored by that local index; its opposite vertex is the newest vertex.
class Mesh {
public:
  Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<int> refinement_edges, const BoundaryLookup& lookup);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<int>& refinement_edges() const { return refinement_edge_; }
  const std::vector<Edge>& edges() const { return edges_; }

  const Vec2& vertex(int v) const { return vertices_[v]; }
  const std::array<int, 3>& triangle(int t) const { return triangles_[t]; }
  const Edge& edge(int e) const { return edges_[e]; }

  /// Global edge index of local edge k of triangle t.
  int triangle_edge(int t, int k) const { return triangle_edges_[t][k]; }
  const std::array<int, 3>& triangle_edges(int t) const { return triangle_edges_[t]; }
  const std::vector<int>& vertex_patch(int v) const { return vertex_patches_[v]; }

  bool on_boundary(int v) const { return on_boundary_[v]; }
  /// True when the vertex is an endpoint of a Dirichlet edge.
  bool is_dirichlet_vertex(int v) const { return dirichlet_vertex_[v]; }
  const std::vector<bool>& dirichlet_mask() const { return dirichlet_vertex_; }
  int num_interior_vertices() const;
  bool has_neumann_boundary() const;

  /// Index of the edge joining a and b, or -1.
  int find_edge(int a, int b) const;

  double area(int t) const { return area_[t]; }
  double diameter(int t) const { return diameter_[t]; }
  double edge_length(int e) const;
  Vec2 edge_midpoint(int e) const;
  Vec2 centroid(int t) const;

  /// Unit normal of edge e pointing out of its first incident element.
  Vec2 edge_normal(int e) const;
  /// Unit tangent oriented from the lower to the higher vertex index.
  Vec2 edge_tangent(int e) const;

  /// Gradients of the three barycentric coordinates of triangle t.
  std::array<Vec2, 3> basis_gradients(int t) const;

  double total_area() const;

private:
  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<int> refinement_edge_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<std::vector<int>> vertex_patches_;
  std::vector<bool> on_boundary_;
  std::vector<bool> dirichlet_vertex_;
  std::vector<double> area_;
  std::vector<double> diameter_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Builds a mesh and initialises each refinement edge to the longest edge.
MeshPtr build_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
                   const BoundaryRule& rule);

/// Unit square split into n x n cells, each cut along its (i,j)-(i+1,j+1) diagonal.
MeshPtr generate_structured_square(int n, const BoundaryRule& rule = all_dirichlet());

/// (-1,1)^2 \ [0,1]^2 with grid resolution n per unit length.  Edges on x=0 or
/// y=0 are Dirichlet, edges on x=-1 or y=-1 are Neumann region 1 (inflow),
/// the remaining edges Neumann region 0.
MeshPtr generate_l_shape(int n);

/// Neumann region ids used by the generators.
inline constexpr int kNeumannWall = 0;
inline constexpr int kNeumannInflow = 1;
inline constexpr int kNeumannObstacle = 2;

/// Unit square with three polygonal holes (a 16-gon disk, a square and a
/// triangle), meshed by conforming Delaunay triangulation with target spacing
/// 1/n.  x=1 is Dirichlet, x=0 Neumann inflow, other outer edges Neumann wall,
/// hole boundaries Neumann obstacle.
MeshPtr generate_perforated_square(int n);

struct XuZikatanovReport {
  bool pass = true;
  int worst_edge = -1;
  double worst_angle_sum = 0.0;
};

/// Checks that the two angles opposite every interior edge sum to at most pi.
XuZikatanovReport xu_zikatanov_check(const Mesh& mesh, double tol = 1e-12);

/// max_K diam(K) / (2 * inradius(K)).
double shape_regularity(const Mesh& mesh);

// ASCII "mfgmesh 2" format.
void write_mesh(const Mesh& mesh, std::ostream& out);
void write_mesh(const Mesh& mesh, const std::string& path);
MeshPtr read_mesh(std::istream& in);
MeshPtr read_mesh(const std::string& path);

} // namespace mfg
