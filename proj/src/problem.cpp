#include "mfg/problem.hpp"

#include <cmath>

namespace mfg {

Hamiltonian hamiltonian_eikonal() {
  Hamiltonian h;
  h.eval = [](const Vec2&, const Vec2& p) { return std::sqrt(p.squaredNorm() + 1.0); };
  h.grad_p = [](const Vec2&, const Vec2& p) -> Vec2 { return p / std::sqrt(p.squaredNorm() + 1.0); };
  h.hess_p = [](const Vec2&, const Vec2& p) -> Mat2 {
    const double s = 1.0 + p.squaredNorm();
    return (Mat2::Identity() * s - p * p.transpose()) / (s * std::sqrt(s));
  };
  h.lipschitz = 1.0;
  h.grad_lipschitz = 1.0;
  h.x_independent = true;
  return h;
}

double Coupling::value(const Vec2& x, double m) const {
  switch (kind) {
  case CouplingKind::Identity: return m;
  case CouplingKind::Shifted: return m - shift(x);
  case CouplingKind::Cubic: return m * m * m;
  case CouplingKind::Fixed: return shift(x);
  }
  return 0.0;
}

double Coupling::derivative(const Vec2&, double m) const {
  switch (kind) {
  case CouplingKind::Identity:
  case CouplingKind::Shifted: return 1.0;
  case CouplingKind::Cubic: return 3.0 * m * m;
  case CouplingKind::Fixed: return 0.0;
  }
  return 0.0;
}

std::vector<double> Coupling::evaluate(const P1Function& m, int t, const QuadratureRule& rule) const {
  std::vector<double> out;
  out.reserve(rule.points.size());
  for (const auto& qp : quadrature_points(*m.mesh, t, rule)) out.push_back(value(qp.x, m.value_at(t, qp.lambda)));
  return out;
}

Coupling Coupling::identity() {
  Coupling c;
  c.kind = CouplingKind::Identity;
  c.lipschitz = 1.0;
  c.monotonicity = 1.0;
  return c;
}

Coupling Coupling::shifted(ScalarField m0) {
  Coupling c;
  c.kind = CouplingKind::Shifted;
  c.shift = std::move(m0);
  c.lipschitz = 1.0;
  c.monotonicity = 1.0;
  return c;
}

Coupling Coupling::cubic() {
  Coupling c;
  c.kind = CouplingKind::Cubic;
  return c;
}

Coupling Coupling::fixed(ScalarField f) {
  Coupling c;
  c.kind = CouplingKind::Fixed;
  c.shift = std::move(f);
  c.lipschitz = 0.0;
  return c;
}

void validate(const MfgProblem& problem, const Mesh& mesh) {
  if (!(problem.nu > 0.0)) throw Error(ErrorCode::InvalidArgument, "diffusion must be positive");
  if (!problem.hamiltonian.eval || !problem.hamiltonian.grad_p)
    throw Error(ErrorCode::InvalidArgument, "Hamiltonian needs eval and grad_p");
  if ((problem.coupling.kind == CouplingKind::Shifted || problem.coupling.kind == CouplingKind::Fixed) &&
      !problem.coupling.shift)
    throw Error(ErrorCode::InvalidArgument, "coupling needs its data field");
  if (!problem.source) throw Error(ErrorCode::InvalidArgument, "problem has no source term");
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edge(e);
    if (!edge.is_boundary()) continue;
    if (edge.tag.kind == BoundaryKind::Dirichlet && !(problem.boundary.dirichlet_u && problem.boundary.dirichlet_m))
      throw Error(ErrorCode::InvalidArgument, "mesh has Dirichlet edges but the problem has no Dirichlet data");
    if (edge.tag.kind == BoundaryKind::Neumann && !(problem.boundary.neumann_u && problem.boundary.neumann_m))
      throw Error(ErrorCode::InvalidArgument, "mesh has Neumann edges but the problem has no Neumann data");
  }
}

namespace manufactured {

// u = (50 (x-y)^2 - 1) x(1-x) y(1-y),  m = exp(-50 (x-y)^2) x(1-x) y(1-y).
// Factored derivatives were produced with a computer algebra system.

Derivatives u(const Vec2& p) {
  const double x = p.x(), y = p.y();
  const double x2 = x * x, y2 = y * y, x3 = x2 * x, y3 = y2 * y;
  const double q = x * (1 - x) * y * (1 - y);
  const double s = x - y;
  Derivatives d;
  d.value = (50 * s * s - 1) * q;
  d.dx = y * (y - 1) * (200 * x3 - 300 * x2 * y - 150 * x2 + 100 * x * y2 + 200 * x * y - 2 * x - 50 * y2 + 1);
  d.dy = x * (x - 1) * (100 * x2 * y - 50 * x2 - 300 * x * y2 + 200 * x * y + 200 * y3 - 150 * y2 - 2 * y + 1);
  d.dxx = 2 * y * (y - 1) * (300 * x2 - 300 * x * y - 150 * x + 50 * y2 + 100 * y - 1);
  d.dxy = 400 * x3 * y - 200 * x3 - 900 * x2 * y2 + 300 * x2 * y + 150 * x2 + 400 * x * y3 + 300 * x * y2 -
          404 * x * y + 2 * x - 200 * y3 + 150 * y2 + 2 * y - 1;
  d.dyy = 2 * x * (x - 1) * (50 * x2 - 300 * x * y + 100 * x + 300 * y2 - 150 * y - 1);
  return d;
}

Derivatives m(const Vec2& p) {
  const double x = p.x(), y = p.y();
  const double x2 = x * x, y2 = y * y, x3 = x2 * x, y3 = y2 * y, x4 = x2 * x2, y4 = y2 * y2;
  const double E = std::exp(-50 * (x - y) * (x - y));
  Derivatives d;
  d.value = E * x * (1 - x) * y * (1 - y);
  d.dx = -y * (y - 1) * (100 * x3 - 100 * x2 * y - 100 * x2 + 100 * x * y - 2 * x + 1) * E;
  d.dy = x * (x - 1) * (100 * x * y2 - 100 * x * y - 100 * y3 + 100 * y2 + 2 * y - 1) * E;
  d.dxx = 2 * y * (y - 1) *
          (5000 * x4 - 10000 * x3 * y - 5000 * x3 + 5000 * x2 * y2 + 10000 * x2 * y - 250 * x2 - 5000 * x * y2 +
           200 * x * y + 150 * x - 100 * y + 1) *
          E;
  d.dxy = -(10000 * x4 * y2 - 10000 * x4 * y - 20000 * x3 * y3 + 10000 * x3 * y2 + 10200 * x3 * y - 100 * x3 +
            10000 * x2 * y4 + 10000 * x2 * y3 - 20500 * x2 * y2 + 200 * x2 * y + 100 * x2 - 10000 * x * y4 +
            10200 * x * y3 + 200 * x * y2 - 304 * x * y + 2 * x - 100 * y3 + 100 * y2 + 2 * y - 1) *
          E;
  d.dyy = 2 * x * (x - 1) *
          (5000 * x2 * y2 - 5000 * x2 * y - 10000 * x * y3 + 10000 * x * y2 + 200 * x * y - 100 * x + 5000 * y4 -
           5000 * y3 - 250 * y2 + 150 * y + 1) *
          E;
  return d;
}

double m0(const Vec2& x, double nu) {
  const auto du = u(x);
  const double H = std::sqrt(1.0 + du.dx * du.dx + du.dy * du.dy);
  return m(x).value - (-nu * (du.dxx + du.dyy) + H);
}

double source(const Vec2& x, double nu) {
  const auto du = u(x);
  const auto dm = m(x);
  const Vec2 p(du.dx, du.dy);
  const double s = 1.0 + p.squaredNorm();
  const Vec2 Hp = p / std::sqrt(s);
  const Mat2 Hpp = (Mat2::Identity() * s - p * p.transpose()) / (s * std::sqrt(s));
  Mat2 hess;
  hess << du.dxx, du.dxy, du.dxy, du.dyy;
  // div(m H_p(grad u)) = grad m . H_p + m tr(H_pp hess u)
  const double div_flux = dm.dx * Hp.x() + dm.dy * Hp.y() + dm.value * (Hpp * hess).trace();
  return -nu * (dm.dxx + dm.dyy) - div_flux;
}

} // namespace manufactured

MfgProblem make_problem_experiment1() {
  MfgProblem p;
  p.name = "experiment1";
  p.nu = 0.1;
  p.hamiltonian = hamiltonian_eikonal();
  const double nu = p.nu;
  p.coupling = Coupling::shifted([nu](const Vec2& x) { return manufactured::m0(x, nu); });
  p.source = [nu](const Vec2& x) { return manufactured::source(x, nu); };
  p.boundary.dirichlet_u = [](const Vec2&) { return 0.0; };
  p.boundary.dirichlet_m = [](const Vec2&) { return 0.0; };
  p.boundary.neumann_u = [](const Vec2&, int) { return 0.0; };
  p.boundary.neumann_m = [](const Vec2&, int) { return 0.0; };
  ExactSolution exact;
  exact.u = [](const Vec2& x) { return manufactured::u(x).value; };
  exact.m = [](const Vec2& x) { return manufactured::m(x).value; };
  exact.grad_u = [](const Vec2& x) -> Vec2 {
    const auto d = manufactured::u(x);
    return {d.dx, d.dy};
  };
  exact.grad_m = [](const Vec2& x) -> Vec2 {
    const auto d = manufactured::m(x);
    return {d.dx, d.dy};
  };
  p.exact = exact;
  return p;
}

MfgProblem make_problem_experiment2() {
  MfgProblem p;
  p.name = "experiment2";
  p.nu = 1.0;
  p.hamiltonian = hamiltonian_eikonal();
  p.coupling = Coupling::identity();
  p.source = [](const Vec2&) { return 0.0; };
  p.boundary.dirichlet_u = [](const Vec2& x) { return std::abs(x.x()) + std::abs(x.y()) - 1.0; };
  p.boundary.dirichlet_m = [](const Vec2&) { return 0.0; };
  p.boundary.neumann_u = [](const Vec2&, int) { return 0.0; };
  p.boundary.neumann_m = [](const Vec2&, int region) { return region == kNeumannInflow ? 1.0 : 0.0; };
  return p;
}

MfgProblem make_problem_experiment3() {
  MfgProblem p;
  p.name = "experiment3";
  p.nu = 0.25;
  p.hamiltonian = hamiltonian_eikonal();
  p.coupling = Coupling::cubic();
  p.source = [](const Vec2& x) { return 1.0 - x.x(); };
  p.boundary.dirichlet_u = [](const Vec2&) { return 0.0; };
  p.boundary.dirichlet_m = [](const Vec2&) { return 0.0; };
  p.boundary.neumann_u = [](const Vec2&, int) { return 0.0; };
  p.boundary.neumann_m = [](const Vec2&, int region) { return region == kNeumannInflow ? 1.0 : 0.0; };
  return p;
}

MfgProblem make_problem(std::string_view name) {
  if (name == "experiment1" || name == "1") return make_problem_experiment1();
  if (name == "experiment2" || name == "2") return make_problem_experiment2();
  if (name == "experiment3" || name == "3") return make_problem_experiment3();
  throw Error(ErrorCode::InvalidArgument, "unknown problem '" + std::string(name) + "'");
}

} // namespace mfg
