#include <cmath>
#include <random>

#include <doctest.h>

#include "oracles.hpp"

using namespace mfg;

TEST_CASE("eikonal Hamiltonian values") {
  const auto H = hamiltonian_eikonal();
  const Vec2 x(0.3, 0.4);
  CHECK(H.eval(x, Vec2(0, 0)) == 1.0);
  CHECK(H.grad_p(x, Vec2(0, 0)) == Vec2(0, 0));
  CHECK(H.hess_p(x, Vec2(0, 0)) == Mat2::Identity());
  CHECK(H.eval(x, Vec2(3, 4)) == doctest::Approx(std::sqrt(26.0)).epsilon(1e-15));
  CHECK((H.grad_p(x, Vec2(3, 4)) - Vec2(3, 4) / std::sqrt(26.0)).norm() <= 1e-15);
  CHECK(H.lipschitz.value() == 1.0);
  CHECK(H.x_independent);
}

TEST_CASE("eikonal derivatives agree with finite differences and are bounded") {
  const auto H = hamiltonian_eikonal();
  std::mt19937 gen(1);
  std::normal_distribution<double> dist(0.0, 10.0);
  double largest = 0.0;
  const Vec2 x(0.5, 0.5);
  for (int k = 0; k < 10000; ++k) {
    const Vec2 p(dist(gen), dist(gen));
    largest = std::max(largest, H.grad_p(x, p).norm());
    if (k % 100 != 0) continue;
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i) {
      const Vec2 e = h * Vec2::Unit(i);
      const double fd = (H.eval(x, p + e) - H.eval(x, p - e)) / (2 * h);
      CHECK(std::abs(fd - H.grad_p(x, p)[i]) <= 1e-8);
      const Vec2 fd2 = (H.grad_p(x, p + e) - H.grad_p(x, p - e)) / (2 * h);
      CHECK((fd2 - H.hess_p(x, p).col(i)).norm() <= 1e-8);
    }
  }
  CHECK(largest < 1.0);
}

TEST_CASE("manufactured closed forms match automatic differentiation") {
  std::mt19937 gen(2);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Vec2 p(dist(gen), dist(gen));
    const auto u = manufactured::u(p);
    const auto m = manufactured::m(p);
    const auto ju = oracle::jet([](auto X, auto Y) { return oracle::exact_u(X, Y); }, p.x(), p.y());
    const auto jm = oracle::jet([](auto X, auto Y) { return oracle::exact_m(X, Y); }, p.x(), p.y());
    for (auto [a, b] : {std::pair{u.value, ju.value}, {u.dx, ju.dx}, {u.dy, ju.dy}, {u.dxx, ju.dxx},
                        {u.dxy, ju.dxy}, {u.dyy, ju.dyy}, {m.value, jm.value}, {m.dx, jm.dx},
                        {m.dy, jm.dy}, {m.dxx, jm.dxx}, {m.dxy, jm.dxy}, {m.dyy, jm.dyy}})
      CHECK(std::abs(a - b) <= 1e-10);
  }
}

TEST_CASE("manufactured data solve the strong equations") {
  CHECK(oracle::manufactured_strong_residual(100, 17) <= 1e-8);
}

TEST_CASE("manufactured solution vanishes on the boundary and m is nonnegative") {
  const auto pb = make_problem_experiment1();
  CHECK(pb.nu == 0.1);
  for (int k = 0; k <= 20; ++k) {
    const double s = k / 20.0;
    for (const Vec2& p : {Vec2(0, s), Vec2(1, s), Vec2(s, 0), Vec2(s, 1)}) {
      CHECK(pb.exact->u(p) == 0.0);
      CHECK(pb.exact->m(p) == 0.0);
    }
    for (int j = 0; j <= 20; ++j) CHECK(pb.exact->m(Vec2(s, j / 20.0)) >= 0.0);
  }
}

TEST_CASE("experiment 2 and 3 data") {
  const auto p2 = make_problem_experiment2();
  CHECK(p2.boundary.dirichlet_u(Vec2(0, 0)) == -1.0);
  CHECK(p2.boundary.neumann_m(Vec2(-1, 0.5), kNeumannInflow) == 1.0);
  CHECK(p2.boundary.neumann_m(Vec2(1, 0.5), kNeumannWall) == 0.0);
  CHECK(p2.source(Vec2(-0.5, 0.5)) == 0.0);

  const auto p3 = make_problem_experiment3();
  CHECK(p3.coupling.value(Vec2(0.5, 0.5), 2.0) == 8.0);
  CHECK(p3.coupling.derivative(Vec2(0.5, 0.5), 2.0) == 12.0);
  double previous = p3.coupling.value(Vec2::Zero(), -3.0);
  for (int k = 1; k <= 600; ++k) {
    const double value = p3.coupling.value(Vec2::Zero(), -3.0 + 0.01 * k);
    CHECK(value > previous);
    previous = value;
  }
}

TEST_CASE("couplings") {
  const Vec2 x(0.2, 0.7);
  CHECK(Coupling::identity().value(x, 1.5) == 1.5);
  CHECK(Coupling::identity().derivative(x, 1.5) == 1.0);
  const auto shifted = Coupling::shifted([](const Vec2& p) { return p.x(); });
  CHECK(shifted.value(x, 1.0) == doctest::Approx(0.8));
  CHECK(shifted.derivative(x, 1.0) == 1.0);
  const auto fixed = Coupling::fixed([](const Vec2& p) { return p.y(); });
  CHECK(fixed.value(x, 5.0) == doctest::Approx(0.7));
  CHECK(fixed.derivative(x, 5.0) == 0.0);

  auto mesh = generate_structured_square(1);
  P1Function m = interpolate(mesh, [](const Vec2& p) { return p.x() + p.y(); });
  const auto& rule = triangle_rule(6);
  const auto values = Coupling::cubic().evaluate(m, 0, rule);
  const auto points = quadrature_points(*mesh, 0, rule);
  REQUIRE(values.size() == points.size());
  for (std::size_t q = 0; q < values.size(); ++q)
    CHECK(values[q] == doctest::Approx(std::pow(points[q].x.x() + points[q].x.y(), 3)).epsilon(1e-13));
}

TEST_CASE("problem lookup and validation") {
  CHECK(make_problem("1").name == "experiment1");
  CHECK(make_problem("experiment2").name == "experiment2");
  CHECK(make_problem("3").nu == 0.25);
  CHECK_THROWS_AS(make_problem("experiment4"), Error);

  auto pb = make_problem_experiment2();
  CHECK_NOTHROW(validate(pb, *generate_l_shape(2)));
  pb.nu = 0.0;
  CHECK_THROWS_AS(validate(pb, *generate_l_shape(2)), Error);
  auto p1 = make_problem_experiment1();
  p1.boundary.neumann_m = nullptr;
  CHECK_NOTHROW(validate(p1, *generate_structured_square(2)));
  CHECK_THROWS_AS(validate(p1, *generate_l_shape(2)), Error);
}
