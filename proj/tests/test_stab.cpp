#include <cmath>
#include <random>

#include <doctest.h>
#include <Eigen/Dense>

#include "mfg/refine.hpp"
#include "oracles.hpp"

using namespace mfg;

namespace {

BoundaryRule all_neumann() {
  return [](const Vec2&, const Vec2&) -> std::optional<BoundaryTag> { return BoundaryTag::neumann(); };
}

std::vector<MeshPtr> sample_meshes() {
  std::vector<MeshPtr> out = {generate_structured_square(4), generate_structured_square(7), generate_l_shape(3),
                              generate_perforated_square(6)};
  out.push_back(refine_nvb_detailed(*out[2], std::vector<int>{0, 5, 11}).mesh);
  return out;
}

P1Function random_function(const MeshPtr& mesh, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  P1Function f(mesh);
  for (int v = 0; v < mesh->num_vertices(); ++v) f.values[v] = dist(gen);
  return f;
}

P1Function hat(const MeshPtr& mesh, int z) {
  P1Function f(mesh);
  f.values[z] = 1.0;
  return f;
}

} // namespace

TEST_CASE("edge tensor on a single right triangle") {
  auto mesh = build_mesh({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}, {{0, 1, 2}}, all_neumann());
  const auto D = edge_tensor(*mesh, edge_length_weight());
  const double r = std::sqrt(2.0) / 2.0;
  Mat2 expected;
  expected << 1 + r, -r, -r, 1 + r;
  CHECK((D[0] - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("edge tensor vanishes without stabilized edges") {
  auto mesh = generate_structured_square(1);
  for (int e = 0; e < mesh->num_edges(); ++e) CHECK_FALSE(is_stabilized_edge(*mesh, e));
  for (const auto& D : edge_tensor(*mesh, edge_length_weight())) CHECK(D == Mat2::Zero());
}

TEST_CASE("edge tensors are symmetric positive semidefinite") {
  for (const auto& mesh : sample_meshes())
    for (const auto& D : edge_tensor(*mesh, edge_length_weight())) {
      CHECK(D == D.transpose());
      CHECK(Eigen::SelfAdjointEigenSolver<Mat2>(D).eigenvalues().minCoeff() >= -1e-14);
    }
}

TEST_CASE("negative weights are rejected") {
  auto mesh = generate_structured_square(2);
  CHECK_THROWS_AS(edge_tensor(*mesh, [](const Mesh&, int) { return -1.0; }), Error);
  CHECK_THROWS_AS(constant_isotropic(mesh, -0.5), Error);
}

TEST_CASE("isotropic stabilization preserves affine functions on every mesh") {
  for (const auto& mesh : sample_meshes()) CHECK(oracle::affine_defect(*constant_isotropic(mesh, 0.7)) <= 1e-12);
}

TEST_CASE("edge stabilization preserves affine functions on structured squares") {
  for (int n : {2, 4, 8, 16})
    CHECK(oracle::affine_defect(*edge_stabilization(generate_structured_square(n), edge_length_weight())) <= 1e-12);
}

TEST_CASE("zero state and zero coefficient give zero stabilization") {
  auto mesh = generate_l_shape(2);
  auto stab = edge_stabilization(mesh, edge_length_weight());
  P1Function zero(mesh);
  const auto v = random_function(mesh, 3);
  CHECK(stab_form(*stab, zero, zero, v, 1) == 0.0);
  const auto u = random_function(mesh, 4);
  CHECK(stab_form(*constant_isotropic(mesh, 0.0), u, u, v, 1) == 0.0);
  CHECK(stab_form(*no_stabilization(mesh), u, u, v, 2) == 0.0);
}

TEST_CASE("vector entries equal the form tested with hat functions") {
  auto mesh = generate_l_shape(2);
  auto stab = edge_stabilization(mesh, edge_length_weight());
  const auto u = random_function(mesh, 5), m = random_function(mesh, 6);
  for (int i : {1, 2}) {
    const Vector s = stab->vector(u, m, i);
    for (int z = 0; z < mesh->num_vertices(); ++z) {
      if (mesh->is_dirichlet_vertex(z)) CHECK(s[z] == 0.0);
      else CHECK(std::abs(s[z] - stab_form(*stab, u, m, hat(mesh, z), i)) <= 1e-13);
    }
  }
}

TEST_CASE("form is linear in the test function and in the state") {
  auto mesh = generate_perforated_square(5);
  auto stab = edge_stabilization(mesh, edge_length_weight());
  const auto u = random_function(mesh, 7), m = random_function(mesh, 8);
  const auto v = random_function(mesh, 9), w = random_function(mesh, 10);
  P1Function vw(mesh, 2.0 * v.values - 3.0 * w.values);
  const double lhs = stab_form(*stab, u, m, vw, 1);
  CHECK(std::abs(lhs - 2.0 * stab_form(*stab, u, m, v, 1) + 3.0 * stab_form(*stab, u, m, w, 1)) <= 1e-12);
  P1Function u2(mesh, 2.0 * u.values);
  CHECK(std::abs(stab_form(*stab, u2, m, v, 1) - 2.0 * stab_form(*stab, u, m, v, 1)) <= 1e-12);
  // S_1 depends on u only, S_2 on m only.
  CHECK(stab_form(*stab, u, w, v, 1) == stab_form(*stab, u, m, v, 1));
  CHECK(stab_form(*stab, w, m, v, 2) == stab_form(*stab, u, m, v, 2));
}

TEST_CASE("derivative blocks") {
  auto mesh = generate_structured_square(3);
  auto stab = edge_stabilization(mesh, edge_length_weight());
  const auto u = random_function(mesh, 11), m = random_function(mesh, 12);
  const auto d1 = stab->derivative(u, m, 1);
  const auto d2 = stab->derivative(u, m, 2);
  CHECK(d1.dm.norm() == 0.0);
  CHECK(d2.du.norm() == 0.0);
  const Vector s1 = d1.du * u.values;
  const Vector ref = stab->vector(u, m, 1);
  for (int z = 0; z < mesh->num_vertices(); ++z)
    if (!mesh->is_dirichlet_vertex(z)) CHECK(std::abs(s1[z] - ref[z]) <= 1e-13);
}

TEST_CASE("mismatched inputs are rejected") {
  auto mesh = generate_structured_square(2);
  auto other = generate_structured_square(2);
  auto stab = edge_stabilization(mesh, edge_length_weight());
  P1Function u(mesh), w(other);
  CHECK_THROWS_AS(stab_form(*stab, u, u, w, 1), Error);
  CHECK_THROWS_AS(stab->vector(w, w, 1), Error);
  CHECK_THROWS_AS(stab->vector(u, u, 3), Error);
}

TEST_CASE("stabilization choices") {
  CHECK(parse_stabilization_kind("edge") == StabilizationKind::Edge);
  CHECK(parse_stabilization_kind("isotropic") == StabilizationKind::Isotropic);
  CHECK(parse_stabilization_kind("none") == StabilizationKind::None);
  CHECK_THROWS_AS(parse_stabilization_kind("streamline"), Error);
  CHECK(to_string(StabilizationKind::Isotropic) == "isotropic");

  auto mesh = generate_l_shape(2);
  const auto ref = edge_tensor(*mesh, edge_length_weight());
  StabilizationChoice edge{StabilizationKind::Edge, 2.0};
  auto built = std::dynamic_pointer_cast<const TensorStabilization>(edge.build(mesh, 1.5));
  REQUIRE(built);
  for (int t = 0; t < mesh->num_triangles(); ++t)
    CHECK((built->tensors()[t] - 3.0 * ref[t]).cwiseAbs().maxCoeff() <= 1e-14);
  StabilizationChoice iso{StabilizationKind::Isotropic, 0.25};
  auto b2 = std::dynamic_pointer_cast<const TensorStabilization>(iso.build(mesh));
  CHECK(b2->tensors()[0] == 0.25 * Mat2::Identity());
}

TEST_CASE("edge stabilization scaling constant stays bounded under refinement") {
  double previous = 0.0;
  for (int n : {4, 8, 16, 32}) {
    auto mesh = generate_structured_square(n);
    auto stab = edge_stabilization(mesh, edge_length_weight());
    const double c = stab_scaling_constant(*stab, random_function(mesh, 20), random_function(mesh, 21));
    CHECK(c > 0.0);
    if (previous > 0.0) CHECK(c <= 1.5 * previous);
    previous = c;
  }
}
