#include "mfg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace mfg {

namespace {

void check_mesh(const DiscreteSystem& sys, const P1Function& u, const P1Function& m) {
  if (u.mesh != sys.mesh || m.mesh != sys.mesh) throw Error(ErrorCode::MeshMismatch, "functions do not live on the system mesh");
}

Vector neumann_load(const Mesh& mesh, const std::function<double(const Vec2&, int)>& g) {
  Vector load = Vector::Zero(mesh.num_vertices());
  if (!g) return load;
  const QuadratureRule& rule = edge_rule(2);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edge(e);
    if (!edge.is_boundary() || edge.tag.kind != BoundaryKind::Neumann) continue;
    const auto [a, b] = edge.vertices;
    const double len = mesh.edge_length(e);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const double la = rule.points[q][0], lb = rule.points[q][1];
      const Vec2 x = la * mesh.vertex(a) + lb * mesh.vertex(b);
      const double w = rule.weights[q] * len * g(x, edge.tag.region);
      load[a] += w * la;
      load[b] += w * lb;
    }
  }
  return load;
}

Mat2 hessian_p(const DiscreteSystem& sys, const Vec2& x, const Vec2& p) {
  const Hamiltonian& H = sys.problem.hamiltonian;
  if (H.hess_p) return H.hess_p(x, p);
  if (!sys.finite_difference_hessian)
    throw Error(ErrorCode::MissingHessian, "Hamiltonian has no hess_p and finite differences are disabled");
  const double h = 1e-6 * std::max(1.0, p.norm());
  Mat2 J;
  for (int k = 0; k < 2; ++k) {
    Vec2 dp = Vec2::Zero();
    dp[k] = h;
    J.col(k) = (H.grad_p(x, p + dp) - H.grad_p(x, p - dp)) / (2.0 * h);
  }
  return 0.5 * (J + J.transpose());
}

} // namespace

DiscreteSystem make_system(MeshPtr mesh, MfgProblem problem, StabilizationPtr stab) {
  validate(problem, *mesh);
  if (!stab) stab = no_stabilization(mesh);
  if (stab->mesh() != mesh) throw Error(ErrorCode::MeshMismatch, "stabilization was built for another mesh");
  DiscreteSystem sys;
  sys.mesh = mesh;
  sys.problem = std::move(problem);
  sys.stab = std::move(stab);
  sys.dirichlet_u = mesh->dirichlet_mask();
  sys.dirichlet_m = mesh->dirichlet_mask();
  sys.neumann_load_u = neumann_load(*mesh, sys.problem.boundary.neumann_u);
  sys.neumann_load_m = neumann_load(*mesh, sys.problem.boundary.neumann_m);
  sys.source_load = Vector::Zero(mesh->num_vertices());
  const QuadratureRule& rule = triangle_rule(6);
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    const auto& tri = mesh->triangle(t);
    for (const auto& qp : quadrature_points(*mesh, t, rule)) {
      const double g = qp.weight * sys.problem.source(qp.x);
      for (int i = 0; i < 3; ++i) sys.source_load[tri[i]] += g * qp.lambda[i];
    }
  }
  return sys;
}

void impose_dirichlet(const DiscreteSystem& sys, P1Function& u, P1Function& m) {
  check_mesh(sys, u, m);
  const auto& bc = sys.problem.boundary;
  for (int v = 0; v < sys.num_vertices(); ++v) {
    if (sys.dirichlet_u[v]) u.values[v] = bc.dirichlet_u(sys.mesh->vertex(v));
    if (sys.dirichlet_m[v]) m.values[v] = bc.dirichlet_m(sys.mesh->vertex(v));
  }
}

std::pair<P1Function, P1Function> initial_guess(const DiscreteSystem& sys) {
  P1Function u(sys.mesh), m(sys.mesh);
  impose_dirichlet(sys, u, m);
  return {std::move(u), std::move(m)};
}

Vector data_load(const DiscreteSystem& sys) {
  const int n = sys.num_vertices();
  Vector load(2 * n);
  load.head(n) = sys.neumann_load_u;
  load.tail(n) = sys.source_load + sys.neumann_load_m;
  for (int v = 0; v < n; ++v) {
    if (sys.dirichlet_u[v]) load[v] = 0.0;
    if (sys.dirichlet_m[v]) load[n + v] = 0.0;
  }
  return load;
}

Vector system_residual(const DiscreteSystem& sys, const P1Function& u, const P1Function& m) {
  check_mesh(sys, u, m);
  const Mesh& mesh = *sys.mesh;
  const MfgProblem& pb = sys.problem;
  const int n = mesh.num_vertices();
  const double nu = pb.nu;
  const QuadratureRule& rule = triangle_rule(6);

  Vector r = Vector::Zero(2 * n);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const auto g = mesh.basis_gradients(t);
    const double area = mesh.area(t);
    const Vec2 gu = element_gradient(mesh, u.values, t);
    const Vec2 gm = element_gradient(mesh, m.values, t);
    for (const auto& qp : quadrature_points(mesh, t, rule)) {
      const double mq = m.value_at(t, qp.lambda);
      const double Hq = pb.hamiltonian.eval(qp.x, gu);
      const double Fq = pb.coupling.value(qp.x, mq);
      const Vec2 drift = pb.hamiltonian.grad_p(qp.x, gu);
      for (int i = 0; i < 3; ++i) {
        r[tri[i]] += qp.weight * (Hq - Fq) * qp.lambda[i];
        r[n + tri[i]] += qp.weight * mq * drift.dot(g[i]);
      }
    }
    for (int i = 0; i < 3; ++i) {
      r[tri[i]] += nu * area * gu.dot(g[i]);
      r[n + tri[i]] += nu * area * gm.dot(g[i]);
    }
  }
  r.head(n) += sys.stab->vector(u, m, 1) - sys.neumann_load_u;
  r.tail(n) += sys.stab->vector(u, m, 2) - sys.source_load - sys.neumann_load_m;

  const auto& bc = pb.boundary;
  for (int v = 0; v < n; ++v) {
    if (sys.dirichlet_u[v]) r[v] = u.values[v] - bc.dirichlet_u(mesh.vertex(v));
    if (sys.dirichlet_m[v]) r[n + v] = m.values[v] - bc.dirichlet_m(mesh.vertex(v));
  }
  return r;
}

SparseMatrix system_jacobian(const DiscreteSystem& sys, const P1Function& u, const P1Function& m) {
  check_mesh(sys, u, m);
  const Mesh& mesh = *sys.mesh;
  const MfgProblem& pb = sys.problem;
  const int n = mesh.num_vertices();
  const double nu = pb.nu;
  const QuadratureRule& rule = triangle_rule(6);

  auto constrained = [&](int row) { return row < n ? sys.dirichlet_u[row] : sys.dirichlet_m[row - n]; };

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(36) * mesh.num_triangles());
  auto add = [&](int row, int col, double v) {
    if (!constrained(row)) trips.emplace_back(row, col, v);
  };

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const auto g = mesh.basis_gradients(t);
    const double area = mesh.area(t);
    const Vec2 gu = element_gradient(mesh, u.values, t);
    double a11[3][3] = {}, a12[3][3] = {}, a21[3][3] = {}, a22[3][3] = {};
    for (const auto& qp : quadrature_points(mesh, t, rule)) {
      const double mq = m.value_at(t, qp.lambda);
      const Vec2 drift = pb.hamiltonian.grad_p(qp.x, gu);
      const Mat2 hpp = hessian_p(sys, qp.x, gu);
      const double dF = pb.coupling.derivative(qp.x, mq);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          a11[i][j] += qp.weight * qp.lambda[i] * drift.dot(g[j]);
          a12[i][j] -= qp.weight * dF * qp.lambda[i] * qp.lambda[j];
          a21[i][j] += qp.weight * mq * (hpp * g[j]).dot(g[i]);
          a22[i][j] += qp.weight * qp.lambda[j] * drift.dot(g[i]);
        }
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double diffusion = nu * area * g[i].dot(g[j]);
        add(tri[i], tri[j], diffusion + a11[i][j]);
        add(tri[i], n + tri[j], a12[i][j]);
        add(n + tri[i], tri[j], a21[i][j]);
        add(n + tri[i], n + tri[j], diffusion + a22[i][j]);
      }
  }

  for (int eq = 1; eq <= 2; ++eq) {
    const auto d = sys.stab->derivative(u, m, eq);
    const int row_offset = eq == 1 ? 0 : n;
    for (int block = 0; block < 2; ++block) {
      const SparseMatrix& B = block == 0 ? d.du : d.dm;
      for (int k = 0; k < B.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(B, k); it; ++it)
          add(row_offset + static_cast<int>(it.row()), block * n + static_cast<int>(it.col()), it.value());
    }
  }

  for (int row = 0; row < 2 * n; ++row)
    if (constrained(row)) trips.emplace_back(row, row, 1.0);

  SparseMatrix J(2 * n, 2 * n);
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

namespace {

double infinity_norm(const SparseMatrix& A) {
  Vector rows = Vector::Zero(A.rows());
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.maxCoeff();
}

} // namespace

Vector linear_solve(const SparseMatrix& A, const Vector& rhs, bool spd) {
  if (A.rows() != A.cols() || A.rows() != rhs.size())
    throw Error(ErrorCode::InvalidArgument, "linear system dimensions do not match");
  if (rhs.size() == 0) return rhs;
  const double bmax = rhs.lpNorm<Eigen::Infinity>();
  if (bmax == 0.0) return Vector::Zero(rhs.size());

  auto solve_with = [&](auto& solver) -> Vector {
    solver.compute(A);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::SingularMatrix, "factorization failed");
    Vector x = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !x.allFinite())
      throw Error(ErrorCode::SingularMatrix, "triangular solves produced no finite solution");
    // Iterative refinement with the same factorization, judged by the normwise
    // backward error |r| / (|A| |x| + |b|) in the infinity norm.
    const double anorm = infinity_norm(A);
    auto backward = [&](const Vector& r) { return r.lpNorm<Eigen::Infinity>() / (anorm * x.lpNorm<Eigen::Infinity>() + bmax); };
    for (int k = 0; k < 3; ++k) {
      const Vector res = rhs - A * x;
      if (backward(res) <= 1e-14) return x;
      x += solver.solve(res);
    }
    const double err = backward(rhs - A * x);
    if (err > 1e-14) {
      std::ostringstream msg;
      msg << "backward error " << err << " after refinement";
      throw Error(ErrorCode::LinearSolveFailed, msg.str());
    }
    return x;
  };

  if (spd) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
    ldlt.compute(A);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
      throw Error(ErrorCode::SingularMatrix, "matrix is not positive definite");
    return solve_with(ldlt);
  }
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  return solve_with(lu);
}

Solution newton_solve(const DiscreteSystem& sys, P1Function u0, P1Function m0, const NewtonOptions& options) {
  check_mesh(sys, u0, m0);
  const int n = sys.num_vertices();
  impose_dirichlet(sys, u0, m0);
  Solution sol{std::move(u0), std::move(m0), {}};
  SolveReport& rep = sol.report;

  const double threshold = std::max(options.tol * (1.0 + data_load(sys).lpNorm<Eigen::Infinity>()), options.abs_tol);
  Vector r = system_residual(sys, sol.u, sol.m);
  rep.residual_history.push_back(r.norm());

  for (;;) {
    if (r.lpNorm<Eigen::Infinity>() <= threshold) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= options.max_iter) {
      std::ostringstream msg;
      msg << "no convergence after " << rep.iterations << " iterations, residual " << r.lpNorm<Eigen::Infinity>();
      throw Error(ErrorCode::NewtonDiverged, msg.str());
    }
    const SparseMatrix J = system_jacobian(sys, sol.u, sol.m);
    const Vector delta = linear_solve(J, -r);

    const double r0 = r.norm();
    double alpha = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h) {
      P1Function ut(sys.mesh, sol.u.values + alpha * delta.head(n));
      P1Function mt(sys.mesh, sol.m.values + alpha * delta.tail(n));
      Vector rt = system_residual(sys, ut, mt);
      if (rt.norm() <= (1.0 - options.armijo * alpha) * r0) {
        sol.u = std::move(ut);
        sol.m = std::move(mt);
        r = std::move(rt);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "no sufficient decrease after " << options.max_halvings << " halvings at residual " << r0;
      throw Error(ErrorCode::LineSearchStalled, msg.str());
    }
    ++rep.iterations;
    rep.step_sizes.push_back(alpha);
    rep.residual_history.push_back(r.norm());
  }

  rep.min_m = sol.m.values.minCoeff();
  rep.max_abs_m = sol.m.values.cwiseAbs().maxCoeff();
  if (rep.min_m < -1e-12) {
    std::ostringstream msg;
    msg << "discrete density has negative values (min " << rep.min_m << ")";
    rep.warnings.push_back(msg.str());
  }
  return sol;
}

Solution newton_solve(const DiscreteSystem& sys, const NewtonOptions& options) {
  auto [u, m] = initial_guess(sys);
  return newton_solve(sys, std::move(u), std::move(m), options);
}

} // namespace mfg
