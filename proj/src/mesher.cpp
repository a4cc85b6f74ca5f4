#include <algorithm>
#include <cmath>
#include <numbers>
#include <map>

#include "mfg/mesh.hpp"

namespace mfg {

namespace {

using Polygon = std::vector<Vec2>;

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double s = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (p - (a + s * d)).norm();
}

bool inside_polygon(const Vec2& p, const Polygon& poly) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) && p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      in = !in;
  }
  return in;
}

/// Incremental Bowyer-Watson triangulation.
class Delaunay {
public:
  explicit Delaunay(const std::vector<Vec2>& seed) {
    // Super triangle enclosing the unit square with a wide margin.
    points_ = {Vec2(-10.0, -10.0), Vec2(12.0, -10.0), Vec2(0.5, 12.0)};
    add_triangle(0, 1, 2);
    for (const auto& p : seed) insert(p);
  }

  int insert(const Vec2& p) {
    const int id = static_cast<int>(points_.size());
    points_.push_back(p);

    std::map<std::array<int, 2>, std::vector<int>> owners;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
      for (int k = 0; k < 3; ++k) owners[key(tris_[t].v[(k + 1) % 3], tris_[t].v[(k + 2) % 3])].push_back(t);
    auto across = [&](int t, const std::array<int, 2>& e) {
      for (int o : owners[key(e[0], e[1])])
        if (o != t) return o;
      return -1;
    };

    // Cavity: triangles whose circumcircle contains p, grown by adjacency
    // from the triangle containing p.
    std::vector<char> in(tris_.size(), 0);
    std::vector<int> stack;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
      if (contains(tris_[t], p)) {
        in[t] = 1;
        stack.push_back(t);
        break;
      }
    if (stack.empty()) throw Error(ErrorCode::NonConforming, "point outside the triangulation");
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      for (int k = 0; k < 3; ++k) {
        const int o = across(t, {tris_[t].v[(k + 1) % 3], tris_[t].v[(k + 2) % 3]});
        if (o >= 0 && !in[o] && (p - tris_[o].centre).squaredNorm() < tris_[o].radius2) {
          in[o] = 1;
          stack.push_back(o);
        }
      }
    }

    // Keep the cavity star-shaped from p.
    std::vector<std::array<int, 2>> boundary;
    for (bool grown = true; grown;) {
      grown = false;
      boundary.clear();
      for (int t = 0; t < static_cast<int>(tris_.size()) && !grown; ++t) {
        if (!in[t]) continue;
        for (int k = 0; k < 3; ++k) {
          const std::array<int, 2> e{tris_[t].v[(k + 1) % 3], tris_[t].v[(k + 2) % 3]};
          const int o = across(t, e);
          if (o >= 0 && in[o]) continue;
          if (orient(points_[e[0]], points_[e[1]], p) <= 0.0) {
            if (o < 0) throw Error(ErrorCode::NonConforming, "cavity reaches the enclosing triangle");
            in[o] = 1;
            grown = true;
            break;
          }
          boundary.push_back(e);
        }
      }
    }

    std::vector<Tri> keep;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
      if (!in[t]) keep.push_back(tris_[t]);
    tris_ = std::move(keep);
    for (const auto& e : boundary) add_triangle(e[0], e[1], id);
    return id;
  }

  bool has_edge(int a, int b) const {
    for (const auto& t : tris_)
      for (int k = 0; k < 3; ++k) {
        const int x = t.v[k], y = t.v[(k + 1) % 3];
        if ((x == a && y == b) || (x == b && y == a)) return true;
      }
    return false;
  }

  const std::vector<Vec2>& points() const { return points_; }

  std::vector<std::array<int, 3>> triangles() const {
    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris_) out.push_back(t.v);
    return out;
  }

private:
  struct Tri {
    std::array<int, 3> v;
    Vec2 centre;
    double radius2;
  };

  static std::array<int, 2> key(int a, int b) { return a < b ? std::array<int, 2>{a, b} : std::array<int, 2>{b, a}; }

  static double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  }

  bool contains(const Tri& t, const Vec2& p) const {
    for (int k = 0; k < 3; ++k)
      if (orient(points_[t.v[k]], points_[t.v[(k + 1) % 3]], p) < 0.0) return false;
    return true;
  }

  void add_triangle(int a, int b, int c) {
    const Vec2 &A = points_[a], &B = points_[b], &C = points_[c];
    const double d = 2.0 * (A.x() * (B.y() - C.y()) + B.x() * (C.y() - A.y()) + C.x() * (A.y() - B.y()));
    const double a2 = A.squaredNorm(), b2 = B.squaredNorm(), c2 = C.squaredNorm();
    const Vec2 centre((a2 * (B.y() - C.y()) + b2 * (C.y() - A.y()) + c2 * (A.y() - B.y())) / d,
                      (a2 * (C.x() - B.x()) + b2 * (A.x() - C.x()) + c2 * (B.x() - A.x())) / d);
    // Keep counterclockwise orientation.
    if (d > 0) tris_.push_back({{a, b, c}, centre, (A - centre).squaredNorm()});
    else tris_.push_back({{a, c, b}, centre, (A - centre).squaredNorm()});
  }

  std::vector<Vec2> points_;
  std::vector<Tri> tris_;
};

/// Splits every side of a closed polygon into pieces of length at most h.
std::vector<Vec2> resample(const Polygon& poly, double h) {
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const int k = std::max(1, static_cast<int>(std::ceil((b - a).norm() / h - 1e-9)));
    for (int j = 0; j < k; ++j) out.push_back(a + (b - a) * (static_cast<double>(j) / k));
  }
  return out;
}

} // namespace

MeshPtr generate_perforated_square(int n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "resolution must be at least 2");
  const double h = 1.0 / n;

  const Polygon outer = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  Polygon disk;
  for (int k = 0; k < 16; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 16.0;
    disk.emplace_back(0.3 + 0.12 * std::cos(a), 0.65 + 0.12 * std::sin(a));
  }
  const Polygon square = {Vec2(0.55, 0.2), Vec2(0.75, 0.2), Vec2(0.75, 0.4), Vec2(0.55, 0.4)};
  const Polygon tri = {Vec2(0.15, 0.15), Vec2(0.35, 0.15), Vec2(0.25, 0.32)};
  const std::vector<Polygon> holes = {disk, square, tri};

  // Boundary loops as point sequences; segments join consecutive points.
  std::vector<std::vector<Vec2>> loops = {resample(outer, h)};
  for (const auto& hole : holes) loops.push_back(resample(hole, h));

  std::vector<Vec2> seed;
  for (const auto& loop : loops) seed.insert(seed.end(), loop.begin(), loop.end());

  // Equilateral lattice, shifted off the boundary lines, kept away from all boundaries.
  const double dy = h * std::sqrt(3.0) / 2.0;
  for (int j = 0; (j + 0.31) * dy < 1.0; ++j) {
    for (int i = -1; (i + 0.27) * h < 1.0; ++i) {
      const Vec2 p((i + 0.27 + 0.5 * (j % 2)) * h, (j + 0.31) * dy);
      if (p.x() <= 0.0 || p.x() >= 1.0 || p.y() <= 0.0 || p.y() >= 1.0) continue;
      bool ok = true;
      for (const auto& hole : holes)
        if (inside_polygon(p, hole)) ok = false;
      for (const auto& loop : loops)
        for (std::size_t k = 0; ok && k < loop.size(); ++k)
          if (segment_distance(p, loop[k], loop[(k + 1) % loop.size()]) < 0.6 * h) ok = false;
      if (ok) seed.push_back(p);
    }
  }

  Delaunay dt(seed);
  // Point ids in the triangulation: 3 super vertices, then the seed in order.
  std::vector<std::vector<int>> loop_ids;
  int next = 3;
  for (const auto& loop : loops) {
    std::vector<int> ids;
    for (std::size_t k = 0; k < loop.size(); ++k) ids.push_back(next++);
    loop_ids.push_back(std::move(ids));
  }

  // Split boundary segments until each is an edge of the triangulation.
  for (int pass = 0;; ++pass) {
    if (pass > 64) throw Error(ErrorCode::NonConforming, "boundary recovery did not terminate");
    bool changed = false;
    for (auto& ids : loop_ids) {
      std::vector<int> updated;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        const int a = ids[k], b = ids[(k + 1) % ids.size()];
        updated.push_back(a);
        if (!dt.has_edge(a, b)) {
          updated.push_back(dt.insert(0.5 * (dt.points()[a] + dt.points()[b])));
          changed = true;
        }
      }
      ids = std::move(updated);
    }
    if (!changed) break;
  }

  // Drop the super vertices and triangles inside holes.
  std::vector<std::array<int, 3>> triangles;
  for (const auto& t : dt.triangles()) {
    if (t[0] < 3 || t[1] < 3 || t[2] < 3) continue;
    const Vec2 c = (dt.points()[t[0]] + dt.points()[t[1]] + dt.points()[t[2]]) / 3.0;
    bool in_hole = false;
    for (const auto& hole : holes)
      if (inside_polygon(c, hole)) in_hole = true;
    if (!in_hole) triangles.push_back({t[0] - 3, t[1] - 3, t[2] - 3});
  }
  std::vector<Vec2> vertices(dt.points().begin() + 3, dt.points().end());

  const double eps = 1e-12;
  BoundaryRule rule = [eps](const Vec2& a, const Vec2& b) -> std::optional<BoundaryTag> {
    const Vec2 mid = 0.5 * (a + b);
    if (std::abs(mid.x() - 1.0) < eps) return BoundaryTag::dirichlet();
    if (std::abs(mid.x()) < eps) return BoundaryTag::neumann(kNeumannInflow);
    if (std::abs(mid.y()) < eps || std::abs(mid.y() - 1.0) < eps) return BoundaryTag::neumann(kNeumannWall);
    return BoundaryTag::neumann(kNeumannObstacle);
  };
  return build_mesh(std::move(vertices), std::move(triangles), rule);
}

} // namespace mfg
