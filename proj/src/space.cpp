#include "mfg/space.hpp"

#include <cmath>

namespace mfg {

namespace {

QuadratureRule make_triangle_rule(int degree) {
  QuadratureRule r;
  r.degree = degree;
  auto add3 = [&](double a, double w) { // (1-2a, a, a) and permutations
    const double b = 1.0 - 2.0 * a;
    r.points.push_back({b, a, a});
    r.points.push_back({a, b, a});
    r.points.push_back({a, a, b});
    for (int k = 0; k < 3; ++k) r.weights.push_back(w);
  };
  auto add6 = [&](double a, double b, double w) {
    const double c = 1.0 - a - b;
    for (const auto& p : {std::array{a, b, c}, std::array{a, c, b}, std::array{b, a, c}, std::array{b, c, a},
                          std::array{c, a, b}, std::array{c, b, a}}) {
      r.points.push_back(p);
      r.weights.push_back(w);
    }
  };
  switch (degree) {
  case 1:
    r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    r.weights.push_back(1.0);
    break;
  case 2:
    add3(1.0 / 6.0, 1.0 / 3.0);
    break;
  case 6: // Dunavant, 12 points
    add3(0.24928674517091042129, 0.11678627572637936603);
    add3(0.063089014491502228340, 0.050844906370206816921);
    add6(0.053145049844816947353, 0.31035245103378440542, 0.082851075618373575194);
    break;
  default:
    throw Error(ErrorCode::InvalidArgument, "no triangle rule of degree " + std::to_string(degree));
  }
  return r;
}

QuadratureRule make_edge_rule(int points) {
  QuadratureRule r;
  auto add = [&](double xi, double w) { // xi in [-1,1], w on [-1,1]
    r.points.push_back({0.5 * (1.0 - xi), 0.5 * (1.0 + xi), 0.0});
    r.weights.push_back(0.5 * w);
  };
  switch (points) {
  case 2:
    add(-1.0 / std::sqrt(3.0), 1.0);
    add(1.0 / std::sqrt(3.0), 1.0);
    r.degree = 3;
    break;
  case 3:
    add(-std::sqrt(0.6), 5.0 / 9.0);
    add(0.0, 8.0 / 9.0);
    add(std::sqrt(0.6), 5.0 / 9.0);
    r.degree = 5;
    break;
  case 4:
    add(-0.86113631159405257522, 0.34785484513745385737);
    add(-0.33998104358485626480, 0.65214515486254614263);
    add(0.33998104358485626480, 0.65214515486254614263);
    add(0.86113631159405257522, 0.34785484513745385737);
    r.degree = 7;
    break;
  default:
    throw Error(ErrorCode::InvalidArgument, "no edge rule with " + std::to_string(points) + " points");
  }
  return r;
}

} // namespace

const QuadratureRule& triangle_rule(int degree) {
  static const QuadratureRule r1 = make_triangle_rule(1);
  static const QuadratureRule r2 = make_triangle_rule(2);
  static const QuadratureRule r6 = make_triangle_rule(6);
  switch (degree) {
  case 1: return r1;
  case 2: return r2;
  case 6: return r6;
  default: throw Error(ErrorCode::InvalidArgument, "no triangle rule of degree " + std::to_string(degree));
  }
}

const QuadratureRule& edge_rule(int points) {
  static const QuadratureRule g2 = make_edge_rule(2);
  static const QuadratureRule g3 = make_edge_rule(3);
  static const QuadratureRule g4 = make_edge_rule(4);
  switch (points) {
  case 2: return g2;
  case 3: return g3;
  case 4: return g4;
  default: throw Error(ErrorCode::InvalidArgument, "no edge rule with " + std::to_string(points) + " points");
  }
}

std::vector<QuadPoint> quadrature_points(const Mesh& mesh, int t, const QuadratureRule& rule) {
  const auto& tri = mesh.triangle(t);
  const Vec2 &a = mesh.vertex(tri[0]), &b = mesh.vertex(tri[1]), &c = mesh.vertex(tri[2]);
  std::vector<QuadPoint> out;
  out.reserve(rule.points.size());
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const auto& l = rule.points[q];
    out.push_back({l[0] * a + l[1] * b + l[2] * c, rule.weights[q] * mesh.area(t), l});
  }
  return out;
}

P1Function::P1Function(MeshPtr m, Vector v) : mesh(std::move(m)), values(std::move(v)) {
  if (values.size() != mesh->num_vertices())
    throw Error(ErrorCode::MeshMismatch, "coefficient count does not match vertex count");
}

double P1Function::value_at(int t, const std::array<double, 3>& lambda) const {
  const auto& tri = mesh->triangle(t);
  return lambda[0] * values[tri[0]] + lambda[1] * values[tri[1]] + lambda[2] * values[tri[2]];
}

P1Function interpolate(MeshPtr mesh, const ScalarField& f) {
  P1Function out(mesh);
  for (int v = 0; v < mesh->num_vertices(); ++v) out.values[v] = f(mesh->vertex(v));
  return out;
}

Vec2 element_gradient(const Mesh& mesh, const Vector& values, int t) {
  const auto g = mesh.basis_gradients(t);
  const auto& tri = mesh.triangle(t);
  return values[tri[0]] * g[0] + values[tri[1]] * g[1] + values[tri[2]] * g[2];
}

Vec2 element_gradient(const P1Function& f, int t) { return element_gradient(*f.mesh, f.values, t); }

void require_same_mesh(const P1Function& a, const P1Function& b) {
  if (a.mesh != b.mesh) throw Error(ErrorCode::MeshMismatch, "functions live on different meshes");
}

SparseOperator assemble_diffusion(const Mesh& mesh, std::span<const Mat2> tensors) {
  const int nt = mesh.num_triangles();
  if (static_cast<int>(tensors.size()) != nt) throw Error(ErrorCode::MeshMismatch, "one tensor per element expected");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(9 * nt));
  for (int t = 0; t < nt; ++t) {
    const Mat2& D = tensors[t];
    if (std::abs(D(0, 1) - D(1, 0)) > 1e-14 * (D.cwiseAbs().maxCoeff() + 1e-300))
      throw Error(ErrorCode::NonSymmetricTensor, "tensor on element " + std::to_string(t) + " is not symmetric");
    const auto g = mesh.basis_gradients(t);
    const auto& tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(tri[i], tri[j], mesh.area(t) * (D * g[j]).dot(g[i]));
  }
  SparseOperator op;
  op.matrix.resize(mesh.num_vertices(), mesh.num_vertices());
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  op.symmetric = true;
  return op;
}

SparseOperator assemble_laplace(const Mesh& mesh, double scale) {
  std::vector<Mat2> tensors(mesh.num_triangles(), scale * Mat2::Identity());
  return assemble_diffusion(mesh, tensors);
}

SparseOperator assemble_convection(const Mesh& mesh, std::span<const Vec2> drift) {
  const int nt = mesh.num_triangles();
  if (static_cast<int>(drift.size()) != nt) throw Error(ErrorCode::MeshMismatch, "one drift vector per element expected");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(9 * nt));
  for (int t = 0; t < nt; ++t) {
    const auto g = mesh.basis_gradients(t);
    const auto& tri = mesh.triangle(t);
    // int_K psi_j = |K|/3 and the remaining factor is constant on K.
    for (int i = 0; i < 3; ++i) {
      const double row = drift[t].dot(g[i]) * mesh.area(t) / 3.0;
      for (int j = 0; j < 3; ++j) trips.emplace_back(tri[i], tri[j], row);
    }
  }
  SparseOperator op;
  op.matrix.resize(mesh.num_vertices(), mesh.num_vertices());
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  return op;
}

SparseOperator assemble_mass(const Mesh& mesh, const std::function<double(int t, const QuadPoint&)>& weight) {
  const int nt = mesh.num_triangles();
  const auto& rule = triangle_rule(6);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(9 * nt));
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangle(t);
    Eigen::Matrix3d local = Eigen::Matrix3d::Zero();
    for (const auto& qp : quadrature_points(mesh, t, rule)) {
      const double w = qp.weight * weight(t, qp);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) local(i, j) += w * qp.lambda[i] * qp.lambda[j];
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(tri[i], tri[j], local(i, j));
  }
  SparseOperator op;
  op.matrix.resize(mesh.num_vertices(), mesh.num_vertices());
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  op.symmetric = true;
  return op;
}

Norms norms(const P1Function& f) {
  const Mesh& mesh = *f.mesh;
  const auto& rule = triangle_rule(2);
  double l2 = 0.0, semi = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (const auto& qp : quadrature_points(mesh, t, rule)) {
      const double v = f.value_at(t, qp.lambda);
      l2 += qp.weight * v * v;
    }
    semi += mesh.area(t) * element_gradient(f, t).squaredNorm();
  }
  return {std::sqrt(l2), std::sqrt(semi), std::sqrt(l2 + semi)};
}

Norms error_norms(const P1Function& f, const ScalarField& exact, const VectorField& exact_gradient) {
  const Mesh& mesh = *f.mesh;
  const auto& rule = triangle_rule(6);
  double l2 = 0.0, semi = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 grad = element_gradient(f, t);
    for (const auto& qp : quadrature_points(mesh, t, rule)) {
      const double e = exact(qp.x) - f.value_at(t, qp.lambda);
      l2 += qp.weight * e * e;
      semi += qp.weight * (exact_gradient(qp.x) - grad).squaredNorm();
    }
  }
  return {std::sqrt(l2), std::sqrt(semi), std::sqrt(l2 + semi)};
}

void apply_dirichlet(SparseMatrix& A, Vector& rhs, const std::vector<bool>& constrained, const Vector& values) {
  Vector lift = Vector::Zero(A.rows());
  for (Eigen::Index k = 0; k < A.rows(); ++k)
    if (constrained[k]) lift[k] = values[k];
  rhs -= A * lift;
  for (int col = 0; col < A.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(A, col); it; ++it)
      if (constrained[it.row()] || constrained[it.col()]) it.valueRef() = it.row() == it.col() ? 1.0 : 0.0;
  for (Eigen::Index k = 0; k < A.rows(); ++k)
    if (constrained[k]) {
      if (A.coeff(k, k) != 1.0) A.coeffRef(k, k) = 1.0;
      rhs[k] = values[k];
    }
  A.prune(0.0);
}

FreeDofs free_dofs(const std::vector<bool>& constrained) {
  FreeDofs d;
  d.position.assign(constrained.size(), -1);
  for (std::size_t k = 0; k < constrained.size(); ++k)
    if (!constrained[k]) {
      d.position[k] = static_cast<int>(d.free.size());
      d.free.push_back(static_cast<int>(k));
    }
  return d;
}

SparseMatrix restrict_matrix(const SparseMatrix& A, const FreeDofs& dofs) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(A.nonZeros()));
  for (int col = 0; col < A.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) {
      const int r = dofs.position[it.row()];
      const int c = dofs.position[it.col()];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  const auto n = static_cast<Eigen::Index>(dofs.free.size());
  SparseMatrix out(n, n);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

} // namespace mfg
