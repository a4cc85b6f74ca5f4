#include "mfg/estimate.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace mfg {

namespace {

void check_mesh(const DiscreteSystem& sys, const P1Function& u, const P1Function& m) {
  if (u.mesh != sys.mesh || m.mesh != sys.mesh) throw Error(ErrorCode::MeshMismatch, "functions do not live on the system mesh");
}

/// (r_1, r_2) at the quadrature points of element t.
std::vector<std::array<double, 2>> volume_values(const DiscreteSystem& sys, const P1Function& u, const P1Function& m,
                                                 int t, const std::vector<QuadPoint>& qps) {
  const MfgProblem& pb = sys.problem;
  const Vec2 gu = element_gradient(u, t);
  const Vec2 gm = element_gradient(m, t);
  std::vector<std::array<double, 2>> out;
  out.reserve(qps.size());
  for (const auto& qp : qps) {
    const double mq = m.value_at(t, qp.lambda);
    const double r1 = pb.coupling.value(qp.x, mq) - pb.hamiltonian.eval(qp.x, gu);
    const double r2 = pb.source(qp.x) + gm.dot(pb.hamiltonian.grad_p(qp.x, gu));
    out.push_back({r1, r2});
  }
  return out;
}

/// |f - Pi f|^2 for the weighted least-squares projection onto span(basis).
double projection_defect(const Eigen::MatrixXd& basis, const Eigen::VectorXd& weights, const Eigen::VectorXd& f) {
  const Eigen::MatrixXd gram = basis.transpose() * weights.asDiagonal() * basis;
  const Eigen::VectorXd rhs = basis.transpose() * weights.asDiagonal() * f;
  const Eigen::VectorXd c = gram.ldlt().solve(rhs);
  const Eigen::VectorXd d = f - basis * c;
  return std::max(0.0, d.dot(weights.asDiagonal() * d));
}

int num_monomials_2d(int kappa) { return (kappa + 1) * (kappa + 2) / 2; }

} // namespace

VolumeResiduals volume_residuals(const DiscreteSystem& sys, const P1Function& u, const P1Function& m) {
  check_mesh(sys, u, m);
  const Mesh& mesh = *sys.mesh;
  const QuadratureRule& rule = triangle_rule(6);
  VolumeResiduals out;
  out.norm1.resize(mesh.num_triangles());
  out.norm2.resize(mesh.num_triangles());
  out.h.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto qps = quadrature_points(mesh, t, rule);
    const auto r = volume_values(sys, u, m, t, qps);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t q = 0; q < qps.size(); ++q) {
      s1 += qps[q].weight * r[q][0] * r[q][0];
      s2 += qps[q].weight * r[q][1] * r[q][1];
    }
    out.norm1[t] = std::sqrt(s1);
    out.norm2[t] = std::sqrt(s2);
    out.h[t] = mesh.diameter(t);
  }
  return out;
}

std::vector<std::array<double, 2>> jump_values(const DiscreteSystem& sys, const P1Function& u, const P1Function& m,
                                               int e, const std::vector<double>& s, bool flip_orientation) {
  const Mesh& mesh = *sys.mesh;
  const MfgProblem& pb = sys.problem;
  const Edge& edge = mesh.edge(e);
  const auto [a, b] = edge.vertices;
  const double nu = pb.nu;
  std::vector<std::array<double, 2>> out;
  out.reserve(s.size());

  if (edge.is_boundary()) {
    if (edge.tag.kind != BoundaryKind::Neumann) {
      out.assign(s.size(), {0.0, 0.0});
      return out;
    }
    const int k = edge.elements[0];
    const Vec2 n = mesh.edge_normal(e);
    const Vec2 gu = element_gradient(u, k);
    const Vec2 gm = element_gradient(m, k);
    for (double sq : s) {
      const Vec2 x = (1.0 - sq) * mesh.vertex(a) + sq * mesh.vertex(b);
      const double mx = (1.0 - sq) * m.values[a] + sq * m.values[b];
      const Vec2 hp = pb.hamiltonian.grad_p(x, gu);
      const double j1 = nu * gu.dot(n) - pb.boundary.neumann_u(x, edge.tag.region);
      const double j2 = nu * gm.dot(n) + mx * hp.dot(n) - pb.boundary.neumann_m(x, edge.tag.region);
      out.push_back({j1, j2});
    }
    return out;
  }

  int k1 = edge.elements[0], k2 = edge.elements[1];
  Vec2 n = mesh.edge_normal(e);
  if (flip_orientation) {
    std::swap(k1, k2);
    n = -n;
  }
  const Vec2 du = element_gradient(u, k1) - element_gradient(u, k2);
  const Vec2 dm = element_gradient(m, k1) - element_gradient(m, k2);
  const Vec2 gu1 = element_gradient(u, k1), gu2 = element_gradient(u, k2);
  for (double sq : s) {
    const Vec2 x = (1.0 - sq) * mesh.vertex(a) + sq * mesh.vertex(b);
    const double mx = (1.0 - sq) * m.values[a] + sq * m.values[b];
    const Vec2 dhp = pb.hamiltonian.grad_p(x, gu1) - pb.hamiltonian.grad_p(x, gu2);
    out.push_back({nu * du.dot(n), nu * dm.dot(n) + mx * dhp.dot(n)});
  }
  return out;
}

JumpResiduals jump_residuals(const DiscreteSystem& sys, const P1Function& u, const P1Function& m,
                             bool flip_orientation) {
  check_mesh(sys, u, m);
  const Mesh& mesh = *sys.mesh;
  const QuadratureRule& rule = edge_rule(3);
  std::vector<double> s;
  for (const auto& p : rule.points) s.push_back(p[1]);
  JumpResiduals out;
  out.norm1.assign(mesh.num_edges(), 0.0);
  out.norm2.assign(mesh.num_edges(), 0.0);
  out.active.assign(mesh.num_edges(), false);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edge(e);
    if (edge.is_boundary() && edge.tag.kind != BoundaryKind::Neumann) continue;
    out.active[e] = true;
    const auto j = jump_values(sys, u, m, e, s, flip_orientation);
    const double len = mesh.edge_length(e);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t q = 0; q < s.size(); ++q) {
      s1 += rule.weights[q] * len * j[q][0] * j[q][0];
      s2 += rule.weights[q] * len * j[q][1] * j[q][1];
    }
    out.norm1[e] = std::sqrt(s1);
    out.norm2[e] = std::sqrt(s2);
  }
  return out;
}

ElementEstimators element_estimators(const Mesh& mesh, const VolumeResiduals& volume, const JumpResiduals& jumps) {
  if (static_cast<int>(volume.norm1.size()) != mesh.num_triangles() ||
      static_cast<int>(jumps.norm1.size()) != mesh.num_edges())
    throw Error(ErrorCode::MeshMismatch, "residual tables do not match the mesh");
  ElementEstimators out;
  out.eta1.resize(mesh.num_triangles());
  out.eta2.resize(mesh.num_triangles());
  double sum1 = 0.0, sum2 = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double h = volume.h[t];
    double e1 = h * h * volume.norm1[t] * volume.norm1[t];
    double e2 = h * h * volume.norm2[t] * volume.norm2[t];
    for (int e : mesh.triangle_edges(t)) {
      if (!jumps.active[e]) continue;
      const double hf = mesh.edge_length(e);
      e1 += hf * jumps.norm1[e] * jumps.norm1[e];
      e2 += hf * jumps.norm2[e] * jumps.norm2[e];
    }
    out.eta1[t] = std::sqrt(e1);
    out.eta2[t] = std::sqrt(e2);
    sum1 += e1;
    sum2 += e2;
  }
  out.res1 = std::sqrt(sum1);
  out.res2 = std::sqrt(sum2);
  double j1 = 0.0, j2 = 0.0;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (!jumps.active[e]) continue;
    const double hf = mesh.edge_length(e);
    j1 += hf * jumps.norm1[e] * jumps.norm1[e];
    j2 += hf * jumps.norm2[e] * jumps.norm2[e];
  }
  out.jump1 = std::sqrt(j1);
  out.jump2 = std::sqrt(j2);
  return out;
}

double dual_norm(const Mesh& mesh, const Vector& s, const StabEstimatorOptions& options) {
  const FreeDofs dofs = free_dofs(mesh.dirichlet_mask());
  const int nf = static_cast<int>(dofs.free.size());
  if (nf == 0) return 0.0;
  Vector sf(nf);
  for (int k = 0; k < nf; ++k) sf[k] = s[dofs.free[k]];
  if (sf.lpNorm<Eigen::Infinity>() == 0.0) return 0.0;
  const SparseMatrix A = restrict_matrix(assemble_laplace(mesh).matrix, dofs);

  Vector w;
  switch (options.mode) {
  case StabEstimatorMode::Exact: w = linear_solve(A, sf, true); break;
  case StabEstimatorMode::Diagonal: w = sf.cwiseQuotient(Vector(A.diagonal())); break;
  case StabEstimatorMode::SymmetricGaussSeidel: {
    const Eigen::SparseMatrix<double, Eigen::RowMajor> R = A;
    const Vector diag = A.diagonal();
    w = Vector::Zero(nf);
    auto relax = [&](int i) {
      double acc = sf[i];
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(R, i); it; ++it)
        if (it.col() != i) acc -= it.value() * w[it.col()];
      w[i] = acc / diag[i];
    };
    for (int k = 0; k < std::max(1, options.sweeps); ++k) {
      for (int i = 0; i < nf; ++i) relax(i);
      for (int i = nf - 1; i >= 0; --i) relax(i);
    }
    break;
  }
  }
  return std::sqrt(std::max(0.0, sf.dot(w)));
}

std::array<double, 2> stabilization_estimator(const DiscreteSystem& sys, const P1Function& u, const P1Function& m,
                                              const StabEstimatorOptions& options) {
  check_mesh(sys, u, m);
  return {dual_norm(*sys.mesh, sys.stab->vector(u, m, 1), options),
          dual_norm(*sys.mesh, sys.stab->vector(u, m, 2), options)};
}

Oscillation oscillation(const DiscreteSystem& sys, const P1Function& u, const P1Function& m, int kappa) {
  check_mesh(sys, u, m);
  if (kappa < 0 || kappa > 2) throw Error(ErrorCode::InvalidArgument, "oscillation degree must be 0, 1 or 2");
  const Mesh& mesh = *sys.mesh;
  const QuadratureRule& rule = triangle_rule(6);
  const int nb = num_monomials_2d(kappa);

  // Element defects h_K^2 |(I - Pi) r_K|^2.
  std::vector<std::array<double, 2>> element_defect(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto qps = quadrature_points(mesh, t, rule);
    const auto r = volume_values(sys, u, m, t, qps);
    const int nq = static_cast<int>(qps.size());
    Eigen::MatrixXd B(nq, nb);
    Eigen::VectorXd w(nq), f1(nq), f2(nq);
    for (int q = 0; q < nq; ++q) {
      const double l1 = qps[q].lambda[1], l2 = qps[q].lambda[2];
      const double mono[6] = {1.0, l1, l2, l1 * l1, l1 * l2, l2 * l2};
      for (int k = 0; k < nb; ++k) B(q, k) = mono[k];
      w[q] = qps[q].weight;
      f1[q] = r[q][0];
      f2[q] = r[q][1];
    }
    const double h2 = mesh.diameter(t) * mesh.diameter(t);
    element_defect[t] = {h2 * projection_defect(B, w, f1), h2 * projection_defect(B, w, f2)};
  }

  // Face defects h_F |(I - Pi) j_F|^2 on interior and Neumann edges.
  const QuadratureRule& erule = edge_rule(4);
  std::vector<double> s;
  for (const auto& p : erule.points) s.push_back(p[1]);
  const int nq = static_cast<int>(s.size());
  Eigen::MatrixXd Be(nq, kappa + 1);
  for (int q = 0; q < nq; ++q)
    for (int k = 0; k <= kappa; ++k) Be(q, k) = std::pow(s[q], k);
  std::vector<std::array<double, 2>> face_defect(mesh.num_edges(), {0.0, 0.0});
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edge(e);
    if (edge.is_boundary() && edge.tag.kind != BoundaryKind::Neumann) continue;
    const auto j = jump_values(sys, u, m, e, s);
    const double len = mesh.edge_length(e);
    Eigen::VectorXd w(nq), f1(nq), f2(nq);
    for (int q = 0; q < nq; ++q) {
      w[q] = erule.weights[q] * len;
      f1[q] = j[q][0];
      f2[q] = j[q][1];
    }
    face_defect[e] = {len * projection_defect(Be, w, f1), len * projection_defect(Be, w, f2)};
  }

  Oscillation out;
  out.osc1.resize(mesh.num_triangles());
  out.osc2.resize(mesh.num_triangles());
  double g1 = 0.0, g2 = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    double o1 = element_defect[t][0], o2 = element_defect[t][1];
    for (int e : mesh.triangle_edges(t)) {
      o1 += face_defect[e][0];
      o2 += face_defect[e][1];
      // Face neighbours of t.
      for (int k : mesh.edge(e).elements) {
        if (k < 0 || k == t) continue;
        o1 += element_defect[k][0];
        o2 += element_defect[k][1];
      }
    }
    out.osc1[t] = std::sqrt(o1);
    out.osc2[t] = std::sqrt(o2);
    g1 += o1;
    g2 += o2;
  }
  out.global1 = std::sqrt(g1);
  out.global2 = std::sqrt(g2);
  return out;
}

EstimatorReport estimate(const DiscreteSystem& sys, const P1Function& u, const P1Function& m,
                         const EstimatorOptions& options) {
  const auto vol = volume_residuals(sys, u, m);
  const auto jumps = jump_residuals(sys, u, m);
  auto el = element_estimators(*sys.mesh, vol, jumps);
  const auto st = stabilization_estimator(sys, u, m, options.stab);
  EstimatorReport rep;
  rep.eta1 = std::move(el.eta1);
  rep.eta2 = std::move(el.eta2);
  rep.res1 = el.res1;
  rep.res2 = el.res2;
  rep.jump1 = el.jump1;
  rep.jump2 = el.jump2;
  rep.stab1 = st[0];
  rep.stab2 = st[1];
  rep.total = total_estimator(rep);
  if (options.oscillation) {
    auto osc = oscillation(sys, u, m, options.kappa);
    rep.osc1 = std::move(osc.osc1);
    rep.osc2 = std::move(osc.osc2);
    rep.osc = std::hypot(osc.global1, osc.global2);
  }
  return rep;
}

double total_estimator(const EstimatorReport& report) {
  return report.res1 + report.stab1 + report.res2 + report.stab2;
}

std::array<double, 2> stab_jump_check(const EstimatorReport& report) {
  auto ratio = [](double stab, double jump) {
    if (stab == 0.0) return 0.0;
    if (!(jump > 0.0)) throw Error(ErrorCode::InvalidArgument, "jump component is zero");
    return stab / jump;
  };
  return {ratio(report.stab1, report.jump1), ratio(report.stab2, report.jump2)};
}

} // namespace mfg
