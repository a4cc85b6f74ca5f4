#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <doctest.h>

#include "mfg/refine.hpp"
#include "oracles.hpp"

using namespace mfg;

namespace {

std::set<std::pair<long, long>> vertex_set(const Mesh& mesh, double scale) {
  std::set<std::pair<long, long>> out;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    out.insert({std::lround(mesh.vertex(v).x() * scale), std::lround(mesh.vertex(v).y() * scale)});
  return out;
}

bool conforming(const Mesh& mesh) {
  // Every boundary edge must lie on the domain boundary of the unit square.
  for (const auto& e : mesh.edges()) {
    if (!e.is_boundary()) continue;
    const Vec2 mid = 0.5 * (mesh.vertex(e.vertices[0]) + mesh.vertex(e.vertices[1]));
    const bool on = std::abs(mid.x()) < 1e-14 || std::abs(mid.y()) < 1e-14 || std::abs(mid.x() - 1) < 1e-14 ||
                    std::abs(mid.y() - 1) < 1e-14;
    if (!on) return false;
  }
  return true;
}

} // namespace

TEST_CASE("marking examples") {
  CHECK(doerfler_mark(std::vector<double>{2, 1, 1, 0}, std::vector<double>{0, 0, 0, 0}, 0.5).elements ==
        std::vector<int>{0});
  CHECK(doerfler_mark(std::vector<double>{1, 1, 1, 1}, std::vector<double>{0, 0, 0, 0}, 1.0).elements ==
        std::vector<int>{0, 1, 2, 3});
  const auto m = doerfler_mark(std::vector<double>{1, 1, 1, 1}, std::vector<double>{1, 1, 1, 1}, 0.5);
  CHECK(m.elements.size() == 1);
  CHECK(m.theta == 0.5);
  CHECK(m.achieved_fraction == doctest::Approx(0.5));
}

TEST_CASE("marking rejects bad input") {
  CHECK_THROWS_AS(doerfler_mark(std::vector<double>{}, std::vector<double>{}, 0.5), Error);
  CHECK_THROWS_AS(doerfler_mark(std::vector<double>{1}, std::vector<double>{1, 2}, 0.5), Error);
  CHECK_THROWS_AS(doerfler_mark(std::vector<double>{1}, std::vector<double>{1}, 0.0), Error);
  CHECK_THROWS_AS(doerfler_mark(std::vector<double>{1}, std::vector<double>{1}, 1.5), Error);
  CHECK_THROWS_AS(doerfler_mark(std::vector<double>{-1}, std::vector<double>{1}, 0.5), Error);
}

TEST_CASE("greedy marking satisfies the bulk criterion and is last-element minimal") {
  std::mt19937 gen(42);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 37;
    std::vector<double> e1(n), e2(n);
    for (int k = 0; k < n; ++k) {
      e1[k] = std::pow(dist(gen), 3);
      e2[k] = trial % 5 == 0 ? 0.0 : dist(gen);
    }
    const double theta = 0.05 + 0.95 * dist(gen);
    const auto marked = doerfler_mark(e1, e2, theta);
    const auto verdict = oracle::check_doerfler(e1, e2, theta, marked.elements);
    CHECK(verdict.satisfies);
    CHECK(verdict.minimal);
    std::set<int> unique(marked.elements.begin(), marked.elements.end());
    CHECK(unique.size() == marked.elements.size());
  }
}

TEST_CASE("marked mass of the full set equals the total") {
  const std::vector<double> e1{3, 4}, e2{0, 1};
  const std::vector<int> all{0, 1};
  CHECK(marked_mass(e1, e2, all) == doctest::Approx(6.0));
  CHECK(marked_mass(e1, e2, std::vector<int>{}) == 0.0);
}

TEST_CASE("bisection hand traces on the two-triangle square") {
  auto mesh = generate_structured_square(1);
  const std::vector<std::array<int, 3>> expected = {{1, 3, 4}, {1, 4, 0}, {2, 0, 4}, {2, 4, 3}};
  for (const std::vector<int>& marked : {std::vector<int>{0}, std::vector<int>{1}, std::vector<int>{0, 1}}) {
    const auto ref = refine_nvb_detailed(*mesh, marked);
    CHECK(ref.mesh->num_triangles() == 4);
    CHECK(ref.mesh->num_vertices() == 5);
    CHECK(ref.mesh->vertex(4) == Vec2(0.5, 0.5));
    CHECK(ref.mesh->triangles() == expected);
    CHECK(ref.new_vertex_parents.size() == 1);
    auto parents = ref.new_vertex_parents[0];
    std::sort(parents.begin(), parents.end());
    CHECK(parents == std::array<int, 2>{0, 3});
  }
}

TEST_CASE("empty marking leaves the mesh unchanged") {
  auto mesh = generate_l_shape(2);
  const auto ref = refine_nvb_detailed(*mesh, std::vector<int>{});
  CHECK(ref.mesh->triangles() == mesh->triangles());
  CHECK(ref.mesh->num_vertices() == mesh->num_vertices());
  for (int v = 0; v < mesh->num_vertices(); ++v) CHECK(ref.mesh->vertex(v) == mesh->vertex(v));
  CHECK(ref.mesh->refinement_edges() == mesh->refinement_edges());
}

TEST_CASE("out of range marks are rejected") {
  auto mesh = generate_structured_square(1);
  CHECK_THROWS_AS(refine_nvb_detailed(*mesh, std::vector<int>{2}), Error);
}

TEST_CASE("uniform refinement") {
  CHECK(uniform_refine(*generate_structured_square(1))->num_triangles() == 8);
  for (int n : {1, 2, 5}) {
    auto fine = uniform_refine(*generate_structured_square(n));
    auto reference = generate_structured_square(2 * n);
    CHECK(fine->num_triangles() == 8 * n * n);
    CHECK(vertex_set(*fine, 4.0 * n) == vertex_set(*reference, 4.0 * n));
    for (int t = 0; t < fine->num_triangles(); ++t) CHECK(fine->area(t) == doctest::Approx(1.0 / (8.0 * n * n)));
    CHECK(shape_regularity(*fine) == doctest::Approx(1 + std::sqrt(2.0)));
    CHECK(xu_zikatanov_check(*fine).pass);
  }
}

TEST_CASE("boundary tags are inherited") {
  auto mesh = uniform_refine(*generate_l_shape(1));
  for (const auto& e : mesh->edges()) {
    if (!e.is_boundary()) continue;
    const Vec2 mid = 0.5 * (mesh->vertex(e.vertices[0]) + mesh->vertex(e.vertices[1]));
    const bool dirichlet = std::abs(mid.x()) < 1e-14 || std::abs(mid.y()) < 1e-14;
    CHECK((e.tag.kind == BoundaryKind::Dirichlet) == dirichlet);
    if (!dirichlet)
      CHECK(e.tag.region == ((std::abs(mid.x() + 1) < 1e-14 || std::abs(mid.y() + 1) < 1e-14) ? kNeumannInflow
                                                                                                : kNeumannWall));
  }
}

TEST_CASE("random bisection keeps conformity, area and shape") {
  std::mt19937 gen(3);
  auto mesh = generate_structured_square(2);
  const double initial = shape_regularity(*mesh);
  for (int round = 0; round < 12; ++round) {
    std::vector<int> marked;
    std::bernoulli_distribution pick(0.2);
    for (int t = 0; t < mesh->num_triangles(); ++t)
      if (pick(gen)) marked.push_back(t);
    const int before = mesh->num_triangles();
    mesh = refine_nvb_detailed(*mesh, marked).mesh;
    CHECK(mesh->num_triangles() >= before + static_cast<int>(marked.size()));
    CHECK(mesh->total_area() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(conforming(*mesh));
    CHECK(xu_zikatanov_check(*mesh).pass);
    CHECK(shape_regularity(*mesh) <= 2.0 * initial);
    CHECK(mesh->num_vertices() - mesh->num_edges() + mesh->num_triangles() == 1);
  }
}

TEST_CASE("prolongation reproduces affine functions") {
  auto mesh = generate_l_shape(2);
  auto f = [](const Vec2& x) { return 2.0 * x.x() - 0.5 * x.y() + 3.0; };
  auto coarse = interpolate(mesh, f);
  std::vector<int> marked{0, 3, 7};
  const auto ref = refine_nvb_detailed(*mesh, marked);
  const Eigen::VectorXd fine = ref.prolongate(coarse.values);
  const auto exact = interpolate(ref.mesh, f);
  CHECK((fine - exact.values).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK_THROWS_AS(ref.prolongate(Eigen::VectorXd::Zero(3)), Error);
}
