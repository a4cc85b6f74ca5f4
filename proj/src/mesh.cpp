#include "mfg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace mfg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::NonConforming: return "NonConforming";
  case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
  case ErrorCode::UntaggedBoundaryEdge: return "UntaggedBoundaryEdge";
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::EmptyIndicators: return "EmptyIndicators";
  case ErrorCode::ClosureNonTermination: return "ClosureNonTermination";
  case ErrorCode::NonSymmetricTensor: return "NonSymmetricTensor";
  case ErrorCode::NegativeWeight: return "NegativeWeight";
  case ErrorCode::MeshMismatch: return "MeshMismatch";
  case ErrorCode::MissingHessian: return "MissingHessian";
  case ErrorCode::NewtonDiverged: return "NewtonDiverged";
  case ErrorCode::LinearSolveFailed: return "LinearSolveFailed";
  case ErrorCode::LineSearchStalled: return "LineSearchStalled";
  case ErrorCode::SingularMatrix: return "SingularMatrix";
  case ErrorCode::InsufficientData: return "InsufficientData";
  case ErrorCode::IoError: return "IoError";
  case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

std::int64_t edge_key(int a, int b, int nv) {
  if (a > b) std::swap(a, b);
  return static_cast<std::int64_t>(a) * nv + b;
}

// Local index of the longest edge of each triangle; ties keep the lowest index.
std::vector<int> longest_edges(const std::vector<Vec2>& vertices, const std::vector<std::array<int, 3>>& triangles) {
  const int nv = static_cast<int>(vertices.size());
  std::vector<int> refinement(triangles.size(), 0);
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    double longest = -1.0;
    for (int k = 0; k < 3; ++k) {
      const int a = triangles[t][(k + 1) % 3], b = triangles[t][(k + 2) % 3];
      if (a < 0 || b < 0 || a >= nv || b >= nv) break; // rejected later by the Mesh constructor
      const double len = (vertices[b] - vertices[a]).norm();
      if (len > longest * (1.0 + 1e-12)) {
        longest = len;
        refinement[t] = k;
      }
    }
  }
  return refinement;
}

} // namespace

BoundaryRule all_dirichlet() {
  return [](const Vec2&, const Vec2&) -> std::optional<BoundaryTag> { return BoundaryTag::dirichlet(); };
}

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<int> refinement_edges, const BoundaryLookup& lookup)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)),
      refinement_edge_(std::move(refinement_edges)) {
  const int nv = num_vertices();
  const int nt = num_triangles();
  if (nt < 1) throw Error(ErrorCode::InvalidArgument, "mesh needs at least one triangle");
  if (static_cast<int>(refinement_edge_.size()) != nt)
    throw Error(ErrorCode::InvalidArgument, "refinement edge count does not match triangle count");

  area_.resize(nt);
  diameter_.resize(nt);
  for (int t = 0; t < nt; ++t) {
    for (int v : triangles_[t])
      if (v < 0 || v >= nv) throw Error(ErrorCode::InvalidArgument, "vertex index out of range in triangle " + std::to_string(t));
    if (refinement_edge_[t] < 0 || refinement_edge_[t] > 2)
      throw Error(ErrorCode::InvalidArgument, "refinement edge index must be 0, 1 or 2");
    const Vec2& a = vertices_[triangles_[t][0]];
    const Vec2& b = vertices_[triangles_[t][1]];
    const Vec2& c = vertices_[triangles_[t][2]];
    const double h = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
    const double area = 0.5 * cross(b - a, c - a);
    if (!(area > 1e-14 * h * h))
      throw Error(ErrorCode::DegenerateTriangle, "triangle " + std::to_string(t) + " has signed area " + std::to_string(area));
    area_[t] = area;
    diameter_[t] = h;
  }

  std::unordered_map<std::int64_t, int> index;
  index.reserve(static_cast<std::size_t>(3 * nt));
  triangle_edges_.resize(nt);
  // Direction in which the first incident triangle traverses each edge; a
  // second triangle must traverse it the other way.
  std::vector<bool> forward;
  for (int t = 0; t < nt; ++t) {
    for (int k = 0; k < 3; ++k) {
      const int a = triangles_[t][(k + 1) % 3];
      const int b = triangles_[t][(k + 2) % 3];
      const auto key = edge_key(a, b, nv);
      auto [it, inserted] = index.try_emplace(key, num_edges());
      if (inserted) {
        edges_.push_back({{std::min(a, b), std::max(a, b)}, {t, -1}, {}});
        forward.push_back(a < b);
      } else {
        Edge& e = edges_[it->second];
        if (e.elements[1] >= 0)
          throw Error(ErrorCode::NonConforming, "edge (" + std::to_string(a) + "," + std::to_string(b) + ") has more than two triangles");
        if (forward[it->second] == (a < b))
          throw Error(ErrorCode::NonConforming, "triangles " + std::to_string(e.elements[0]) + " and " + std::to_string(t) + " overlap");
        e.elements[1] = t;
      }
      triangle_edges_[t][k] = it->second;
    }
  }

  on_boundary_.assign(nv, false);
  dirichlet_vertex_.assign(nv, false);
  for (auto& e : edges_) {
    if (!e.is_boundary()) continue;
    auto tag = lookup(e.vertices[0], e.vertices[1]);
    if (!tag || tag->kind == BoundaryKind::Interior)
      throw Error(ErrorCode::UntaggedBoundaryEdge, "boundary edge (" + std::to_string(e.vertices[0]) + "," +
                                                       std::to_string(e.vertices[1]) + ") has no tag");
    e.tag = *tag;
    on_boundary_[e.vertices[0]] = on_boundary_[e.vertices[1]] = true;
    if (tag->kind == BoundaryKind::Dirichlet) dirichlet_vertex_[e.vertices[0]] = dirichlet_vertex_[e.vertices[1]] = true;
  }

  vertex_patches_.resize(nv);
  for (int t = 0; t < nt; ++t)
    for (int v : triangles_[t]) vertex_patches_[v].push_back(t);
}

int Mesh::num_interior_vertices() const {
  return static_cast<int>(std::count(on_boundary_.begin(), on_boundary_.end(), false));
}

bool Mesh::has_neumann_boundary() const {
  return std::any_of(edges_.begin(), edges_.end(),
                     [](const Edge& e) { return e.is_boundary() && e.tag.kind == BoundaryKind::Neumann; });
}

int Mesh::find_edge(int a, int b) const {
  for (int t : vertex_patches_[a])
    for (int e : triangle_edges_[t]) {
      const auto& v = edges_[e].vertices;
      if ((v[0] == a && v[1] == b) || (v[0] == b && v[1] == a)) return e;
    }
  return -1;
}

double Mesh::edge_length(int e) const {
  return (vertices_[edges_[e].vertices[1]] - vertices_[edges_[e].vertices[0]]).norm();
}

Vec2 Mesh::edge_midpoint(int e) const {
  return 0.5 * (vertices_[edges_[e].vertices[0]] + vertices_[edges_[e].vertices[1]]);
}

Vec2 Mesh::centroid(int t) const {
  const auto& tri = triangles_[t];
  return (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]) / 3.0;
}

Vec2 Mesh::edge_tangent(int e) const {
  return (vertices_[edges_[e].vertices[1]] - vertices_[edges_[e].vertices[0]]).normalized();
}

Vec2 Mesh::edge_normal(int e) const {
  const Edge& edge = edges_[e];
  const Vec2 t = edge_tangent(e);
  Vec2 n(t.y(), -t.x());
  const Vec2 to_centroid = centroid(edge.elements[0]) - vertices_[edge.vertices[0]];
  if (n.dot(to_centroid) > 0) n = -n;
  return n;
}

std::array<Vec2, 3> Mesh::basis_gradients(int t) const {
  const auto& tri = triangles_[t];
  const double inv = 1.0 / (2.0 * area_[t]);
  std::array<Vec2, 3> g;
  for (int k = 0; k < 3; ++k) {
    const Vec2& p1 = vertices_[tri[(k + 1) % 3]];
    const Vec2& p2 = vertices_[tri[(k + 2) % 3]];
    g[k] = Vec2(p1.y() - p2.y(), p2.x() - p1.x()) * inv;
  }
  return g;
}

double Mesh::total_area() const {
  double s = 0.0;
  for (double a : area_) s += a;
  return s;
}

MeshPtr build_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles, const BoundaryRule& rule) {
  auto refinement = longest_edges(vertices, triangles);
  // The mesh takes ownership of `vertices`; the rule sees a copy.
  std::vector<Vec2> coords = vertices;
  BoundaryLookup lookup = [&rule, &coords](int a, int b) { return rule(coords[a], coords[b]); };
  return std::make_shared<const Mesh>(std::move(vertices), std::move(triangles), std::move(refinement), lookup);
}

MeshPtr generate_structured_square(int n, const BoundaryRule& rule) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "structured square needs n >= 1");
  std::vector<Vec2> vertices;
  vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(static_cast<std::size_t>(2 * n * n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return build_mesh(std::move(vertices), std::move(triangles), rule);
}

MeshPtr generate_l_shape(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "L-shape needs n >= 1");
  const int m = 2 * n;
  auto in_hole = [n](int i, int j) { return i >= n && j >= n; }; // cell lower-left corner in [0,1]^2
  std::vector<int> id((m + 1) * (m + 1), -1);
  std::vector<Vec2> vertices;
  auto vid = [&](int i, int j) {
    int& v = id[j * (m + 1) + i];
    if (v < 0) {
      v = static_cast<int>(vertices.size());
      vertices.emplace_back(-1.0 + static_cast<double>(i) / n, -1.0 + static_cast<double>(j) / n);
    }
    return v;
  };
  std::vector<std::array<int, 3>> triangles;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      if (in_hole(i, j)) continue;
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      triangles.push_back({a, b, c});
      triangles.push_back({a, c, d});
    }
  const double eps = 1e-10;
  BoundaryRule rule = [eps](const Vec2& p, const Vec2& q) -> std::optional<BoundaryTag> {
    const Vec2 mid = 0.5 * (p + q);
    if (std::abs(mid.x()) < eps || std::abs(mid.y()) < eps) return BoundaryTag::dirichlet();
    if (std::abs(mid.x() + 1.0) < eps || std::abs(mid.y() + 1.0) < eps) return BoundaryTag::neumann(kNeumannInflow);
    return BoundaryTag::neumann(kNeumannWall);
  };
  return build_mesh(std::move(vertices), std::move(triangles), rule);
}

XuZikatanovReport xu_zikatanov_check(const Mesh& mesh, double tol) {
  XuZikatanovReport report;
  auto opposite_angle = [&](int t, int e) {
    const auto& tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k)
      if (mesh.triangle_edge(t, k) == e) {
        const Vec2& p = mesh.vertex(tri[k]);
        const Vec2 a = mesh.vertex(tri[(k + 1) % 3]) - p;
        const Vec2 b = mesh.vertex(tri[(k + 2) % 3]) - p;
        return std::atan2(std::abs(cross(a, b)), a.dot(b));
      }
    return 0.0;
  };
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edge(e);
    if (edge.is_boundary()) continue;
    const double sum = opposite_angle(edge.elements[0], e) + opposite_angle(edge.elements[1], e);
    if (report.worst_edge < 0 || sum > report.worst_angle_sum) {
      report.worst_edge = e;
      report.worst_angle_sum = sum;
    }
  }
  report.pass = report.worst_edge < 0 || report.worst_angle_sum <= std::numbers::pi + tol;
  return report;
}

double shape_regularity(const Mesh& mesh) {
  double worst = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const Vec2 &a = mesh.vertex(tri[0]), &b = mesh.vertex(tri[1]), &c = mesh.vertex(tri[2]);
    const double s = 0.5 * ((b - a).norm() + (c - b).norm() + (a - c).norm());
    const double inradius = mesh.area(t) / s;
    worst = std::max(worst, mesh.diameter(t) / (2.0 * inradius));
  }
  return worst;
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
  std::vector<int> boundary;
  for (int e = 0; e < mesh.num_edges(); ++e)
    if (mesh.edge(e).is_boundary()) boundary.push_back(e);
  out << "mfgmesh 2\n" << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' ' << boundary.size() << '\n';
  out.precision(17);
  for (const auto& v : mesh.vertices()) out << v.x() << ' ' << v.y() << '\n';
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (int e : boundary) {
    const Edge& edge = mesh.edge(e);
    out << edge.vertices[0] << ' ' << edge.vertices[1] << ' ';
    if (edge.tag.kind == BoundaryKind::Dirichlet)
      out << "D\n";
    else
      out << "N:" << edge.tag.region << '\n';
  }
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  write_mesh(mesh, out);
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

MeshPtr read_mesh(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "mfgmesh" || version != 2)
    throw Error(ErrorCode::ParseError, "expected header 'mfgmesh 2'");
  long nv = 0, nt = 0, nb = 0;
  if (!(in >> nv >> nt >> nb) || nv < 0 || nt < 0 || nb < 0) throw Error(ErrorCode::ParseError, "bad size line");
  std::vector<Vec2> vertices(static_cast<std::size_t>(nv));
  for (auto& v : vertices)
    if (!(in >> v.x() >> v.y())) throw Error(ErrorCode::ParseError, "truncated vertex block");
  std::vector<std::array<int, 3>> triangles(static_cast<std::size_t>(nt));
  for (auto& t : triangles)
    if (!(in >> t[0] >> t[1] >> t[2])) throw Error(ErrorCode::ParseError, "truncated triangle block");
  std::unordered_map<std::int64_t, BoundaryTag> tags;
  for (long k = 0; k < nb; ++k) {
    int a = 0, b = 0;
    std::string tag;
    if (!(in >> a >> b >> tag)) throw Error(ErrorCode::ParseError, "truncated boundary block");
    if (a < 0 || b < 0 || a >= nv || b >= nv) throw Error(ErrorCode::ParseError, "boundary vertex out of range");
    BoundaryTag parsed;
    if (tag == "D") {
      parsed = BoundaryTag::dirichlet();
    } else if (tag.rfind("N:", 0) == 0) {
      try {
        parsed = BoundaryTag::neumann(std::stoi(tag.substr(2)));
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad Neumann region in tag '" + tag + "'");
      }
    } else {
      throw Error(ErrorCode::ParseError, "unknown boundary tag '" + tag + "'");
    }
    tags[edge_key(a, b, static_cast<int>(nv))] = parsed;
  }
  auto refinement = longest_edges(vertices, triangles);
  const int n = static_cast<int>(nv);
  BoundaryLookup lookup = [&tags, n](int a, int b) -> std::optional<BoundaryTag> {
    auto it = tags.find(edge_key(a, b, n));
    if (it == tags.end()) return std::nullopt;
    return it->second;
  };
  return std::make_shared<const Mesh>(std::move(vertices), std::move(triangles), std::move(refinement), lookup);
}

MeshPtr read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_mesh(in);
}

} // namespace mfg
