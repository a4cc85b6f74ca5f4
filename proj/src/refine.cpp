#include "mfg/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace mfg {

double marked_mass(std::span<const double> eta1, std::span<const double> eta2, std::span<const int> subset) {
  double s1 = 0.0, s2 = 0.0;
  for (int k : subset) {
    s1 += eta1[k] * eta1[k];
    s2 += eta2[k] * eta2[k];
  }
  return std::sqrt(s1) + std::sqrt(s2);
}

MarkedSet doerfler_mark(std::span<const double> eta1, std::span<const double> eta2, double theta) {
  if (eta1.empty() || eta1.size() != eta2.size())
    throw Error(ErrorCode::EmptyIndicators, "indicator lists must be nonempty and of equal length");
  if (!(theta > 0.0 && theta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "theta must lie in (0,1]");
  const int n = static_cast<int>(eta1.size());
  double total1 = 0.0, total2 = 0.0;
  for (int k = 0; k < n; ++k) {
    if (eta1[k] < 0.0 || eta2[k] < 0.0) throw Error(ErrorCode::InvalidArgument, "indicators must be nonnegative");
    total1 += eta1[k] * eta1[k];
    total2 += eta2[k] * eta2[k];
  }
  const double total = std::sqrt(total1) + std::sqrt(total2);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return eta1[a] * eta1[a] + eta2[a] * eta2[a] > eta1[b] * eta1[b] + eta2[b] * eta2[b];
  });

  MarkedSet out;
  out.theta = theta;
  double s1 = 0.0, s2 = 0.0;
  const double target = theta * total;
  for (int k : order) {
    if (std::sqrt(s1) + std::sqrt(s2) >= target && !out.elements.empty()) break;
    out.elements.push_back(k);
    s1 += eta1[k] * eta1[k];
    s2 += eta2[k] * eta2[k];
  }
  // Recompute the mass with the same summation order as marked_mass.
  const double mass = marked_mass(eta1, eta2, out.elements);
  out.achieved_fraction = total > 0.0 ? mass / total : 1.0;
  if (total == 0.0) out.elements.clear();
  return out;
}

Eigen::VectorXd Refinement::prolongate(const Eigen::VectorXd& coarse) const {
  if (coarse.size() != old_num_vertices) throw Error(ErrorCode::MeshMismatch, "coarse vector has wrong length");
  Eigen::VectorXd fine(mesh->num_vertices());
  fine.head(old_num_vertices) = coarse;
  // Parents always precede children, so a single forward sweep suffices.
  for (std::size_t k = 0; k < new_vertex_parents.size(); ++k) {
    const auto [a, b] = new_vertex_parents[k];
    fine[old_num_vertices + static_cast<int>(k)] = 0.5 * (fine[a] + fine[b]);
  }
  return fine;
}

namespace {

struct PairHash {
  std::size_t operator()(std::int64_t k) const noexcept { return std::hash<std::int64_t>{}(k); }
};

} // namespace

Refinement refine_nvb_detailed(const Mesh& mesh, std::span<const int> marked) {
  const int nt = mesh.num_triangles();
  const int ne = mesh.num_edges();
  for (int t : marked)
    if (t < 0 || t >= nt) throw Error(ErrorCode::InvalidArgument, "marked element out of range");

  auto ref_edge = [&](int t) { return mesh.triangle_edge(t, mesh.refinement_edges()[t]); };

  // Closure: every triangle with a marked edge must also bisect its refinement edge.
  std::vector<bool> edge_marked(ne, false);
  std::vector<int> work;
  for (int t : marked) {
    const int e = ref_edge(t);
    if (!edge_marked[e]) {
      edge_marked[e] = true;
      work.push_back(e);
    }
  }
  const long cap = 64L * nt;
  long iterations = 0;
  while (!work.empty()) {
    if (++iterations > cap) throw Error(ErrorCode::ClosureNonTermination, "closure exceeded iteration cap");
    const int e = work.back();
    work.pop_back();
    for (int t : mesh.edge(e).elements) {
      if (t < 0) continue;
      const int r = ref_edge(t);
      if (!edge_marked[r]) {
        edge_marked[r] = true;
        work.push_back(r);
      }
    }
  }

  Refinement out;
  out.old_num_vertices = mesh.num_vertices();
  std::vector<Vec2> vertices = mesh.vertices();
  std::vector<int> midpoint(ne, -1);
  for (int e = 0; e < ne; ++e) {
    if (!edge_marked[e]) continue;
    midpoint[e] = static_cast<int>(vertices.size());
    vertices.push_back(mesh.edge_midpoint(e));
    out.new_vertex_parents.push_back(mesh.edge(e).vertices);
  }

  // Boundary tags of the refined mesh, keyed by sorted vertex pair.
  const std::int64_t nv_new = static_cast<std::int64_t>(vertices.size());
  auto key = [nv_new](int a, int b) {
    if (a > b) std::swap(a, b);
    return static_cast<std::int64_t>(a) * nv_new + b;
  };
  std::unordered_map<std::int64_t, BoundaryTag, PairHash> tags;
  for (int e = 0; e < ne; ++e) {
    const Edge& edge = mesh.edge(e);
    if (!edge.is_boundary()) continue;
    const auto [a, b] = edge.vertices;
    if (midpoint[e] >= 0) {
      tags[key(a, midpoint[e])] = edge.tag;
      tags[key(midpoint[e], b)] = edge.tag;
    } else {
      tags[key(a, b)] = edge.tag;
    }
  }

  std::vector<std::array<int, 3>> triangles;
  std::vector<int> refinement;
  triangles.reserve(static_cast<std::size_t>(nt) + 4 * marked.size());
  refinement.reserve(triangles.capacity());

  auto midpoint_of = [&](int a, int b) {
    const int e = mesh.find_edge(a, b);
    return e >= 0 ? midpoint[e] : -1;
  };

  // Bisect (tri, r) recursively while its refinement edge carries a midpoint.
  // The child's vertices are original vertices except the new one, and the
  // child's refinement edge is a parent non-refinement edge, so the recursion
  // only consults edges of the input mesh.
  auto emit = [&](auto&& self, std::array<int, 3> tri, int r) -> void {
    const int apex = tri[r];
    const int b = tri[(r + 1) % 3];
    const int c = tri[(r + 2) % 3];
    const int mid = (b < out.old_num_vertices && c < out.old_num_vertices) ? midpoint_of(b, c) : -1;
    if (mid < 0) {
      triangles.push_back(tri);
      refinement.push_back(r);
      return;
    }
    // (apex, b, mid) and (apex, mid, c); each child's refinement edge is opposite `mid`.
    self(self, {apex, b, mid}, 2);
    self(self, {apex, mid, c}, 1);
  };
  for (int t = 0; t < nt; ++t) emit(emit, mesh.triangle(t), mesh.refinement_edges()[t]);

  BoundaryLookup lookup = [&tags, &key](int a, int b) -> std::optional<BoundaryTag> {
    auto it = tags.find(key(a, b));
    if (it == tags.end()) return std::nullopt;
    return it->second;
  };
  out.mesh = std::make_shared<const Mesh>(std::move(vertices), std::move(triangles), std::move(refinement), lookup);
  return out;
}

MeshPtr refine_nvb(const Mesh& mesh, const MarkedSet& marked) {
  return refine_nvb_detailed(mesh, marked.elements).mesh;
}

Refinement uniform_refine_detailed(const Mesh& mesh) {
  std::vector<int> all(mesh.num_triangles());
  std::iota(all.begin(), all.end(), 0);
  Refinement first = refine_nvb_detailed(mesh, all);
  all.resize(first.mesh->num_triangles());
  std::iota(all.begin(), all.end(), 0);
  Refinement second = refine_nvb_detailed(*first.mesh, all);
  // Compose the vertex histories.
  Refinement out;
  out.mesh = second.mesh;
  out.old_num_vertices = first.old_num_vertices;
  out.new_vertex_parents = first.new_vertex_parents;
  out.new_vertex_parents.insert(out.new_vertex_parents.end(), second.new_vertex_parents.begin(),
                                second.new_vertex_parents.end());
  return out;
}

MeshPtr uniform_refine(const Mesh& mesh) { return uniform_refine_detailed(mesh).mesh; }

} // namespace mfg
