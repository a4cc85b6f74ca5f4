#include "mfg/stab.hpp"

#include <algorithm>
#include <cmath>

namespace mfg {

void Stabilization::check(const P1Function& u, const P1Function& m, int equation) const {
  if (u.mesh != mesh_ || m.mesh != mesh_) throw Error(ErrorCode::MeshMismatch, "functions and stabilization differ in mesh");
  if (equation != 1 && equation != 2) throw Error(ErrorCode::InvalidArgument, "equation index must be 1 or 2");
}

TensorStabilization::TensorStabilization(MeshPtr mesh, std::vector<Mat2> tensors)
    : Stabilization(std::move(mesh)), tensors_(std::move(tensors)) {
  matrix_ = assemble_diffusion(*mesh_, tensors_).matrix;
}

double TensorStabilization::apply(const P1Function& u, const P1Function& m, const P1Function& v, int equation) const {
  check(u, m, equation);
  if (v.mesh != mesh_) throw Error(ErrorCode::MeshMismatch, "test function lives on another mesh");
  const Vector& w = equation == 1 ? u.values : m.values;
  double s = 0.0;
  for (int t = 0; t < mesh_->num_triangles(); ++t)
    s += mesh_->area(t) * (tensors_[t] * element_gradient(*mesh_, w, t)).dot(element_gradient(v, t));
  return s;
}

Vector TensorStabilization::vector(const P1Function& u, const P1Function& m, int equation) const {
  check(u, m, equation);
  Vector s = matrix_ * (equation == 1 ? u.values : m.values);
  for (int v = 0; v < mesh_->num_vertices(); ++v)
    if (mesh_->is_dirichlet_vertex(v)) s[v] = 0.0;
  return s;
}

Stabilization::Derivative TensorStabilization::derivative(const P1Function& u, const P1Function& m,
                                                         int equation) const {
  check(u, m, equation);
  Derivative d;
  SparseMatrix zero(mesh_->num_vertices(), mesh_->num_vertices());
  d.du = equation == 1 ? matrix_ : zero;
  d.dm = equation == 2 ? matrix_ : zero;
  return d;
}

EdgeWeight edge_length_weight(double scale) {
  return [scale](const Mesh& mesh, int e) { return scale * mesh.edge_length(e); };
}

bool is_stabilized_edge(const Mesh& mesh, int edge) {
  const auto [a, b] = mesh.edge(edge).vertices;
  return !mesh.is_dirichlet_vertex(a) || !mesh.is_dirichlet_vertex(b);
}

std::vector<Mat2> edge_tensor(const Mesh& mesh, const EdgeWeight& weight) {
  std::vector<double> gamma(mesh.num_edges(), 0.0);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (!is_stabilized_edge(mesh, e)) continue;
    gamma[e] = weight(mesh, e);
    if (!(gamma[e] >= 0.0))
      throw Error(ErrorCode::NegativeWeight, "edge weight on edge " + std::to_string(e) + " is negative");
  }
  std::vector<Mat2> D(mesh.num_triangles(), Mat2::Zero());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int e : mesh.triangle_edges(t)) {
      if (gamma[e] == 0.0) continue;
      const Vec2 te = mesh.edge_tangent(e);
      const double off = gamma[e] * te.x() * te.y();
      D[t](0, 0) += gamma[e] * te.x() * te.x();
      D[t](1, 1) += gamma[e] * te.y() * te.y();
      D[t](0, 1) += off;
      D[t](1, 0) += off;
    }
  }
  return D;
}

std::shared_ptr<const TensorStabilization> edge_stabilization(MeshPtr mesh, const EdgeWeight& weight) {
  auto D = edge_tensor(*mesh, weight);
  return std::make_shared<const TensorStabilization>(std::move(mesh), std::move(D));
}

std::shared_ptr<const TensorStabilization> constant_isotropic(MeshPtr mesh, double rho) {
  if (!(rho >= 0.0)) throw Error(ErrorCode::NegativeWeight, "isotropic coefficient must be nonnegative");
  std::vector<Mat2> D(mesh->num_triangles(), rho * Mat2::Identity());
  return std::make_shared<const TensorStabilization>(std::move(mesh), std::move(D));
}

std::shared_ptr<const TensorStabilization> no_stabilization(MeshPtr mesh) { return constant_isotropic(std::move(mesh), 0.0); }

double stab_form(const Stabilization& stab, const P1Function& u, const P1Function& m, const P1Function& v,
                 int equation) {
  require_same_mesh(u, m);
  require_same_mesh(u, v);
  return stab.apply(u, m, v, equation);
}

StabilizationKind parse_stabilization_kind(std::string_view name) {
  if (name == "edge") return StabilizationKind::Edge;
  if (name == "isotropic") return StabilizationKind::Isotropic;
  if (name == "none") return StabilizationKind::None;
  throw Error(ErrorCode::InvalidArgument, "unknown stabilization '" + std::string(name) + "'");
}

std::string_view to_string(StabilizationKind kind) {
  switch (kind) {
  case StabilizationKind::Edge: return "edge";
  case StabilizationKind::Isotropic: return "isotropic";
  case StabilizationKind::None: return "none";
  }
  return "?";
}

StabilizationPtr StabilizationChoice::build(MeshPtr mesh, double lipschitz_h) const {
  switch (kind) {
  case StabilizationKind::Edge: return edge_stabilization(std::move(mesh), edge_length_weight(scale * lipschitz_h));
  case StabilizationKind::Isotropic: return constant_isotropic(std::move(mesh), scale);
  case StabilizationKind::None: return no_stabilization(std::move(mesh));
  }
  return nullptr;
}

double stab_scaling_constant(const Stabilization& stab, const P1Function& dv, const P1Function& dw) {
  const Mesh& mesh = *stab.mesh();
  const Vector s1 = stab.vector(dv, dw, 1);
  const Vector s2 = stab.vector(dv, dw, 2);
  std::vector<double> gv(mesh.num_triangles()), gw(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    gv[t] = mesh.area(t) * element_gradient(dv, t).squaredNorm();
    gw[t] = mesh.area(t) * element_gradient(dw, t).squaredNorm();
  }
  double C = 0.0;
  for (int z = 0; z < mesh.num_vertices(); ++z) {
    if (mesh.is_dirichlet_vertex(z)) continue;
    double area = 0.0, nv = 0.0, nw = 0.0;
    for (int t : mesh.vertex_patch(z)) {
      area += mesh.area(t);
      nv += gv[t];
      nw += gw[t];
    }
    const double denom = std::sqrt(area) * (std::sqrt(nv) + std::sqrt(nw));
    if (denom <= 0.0) continue;
    C = std::max({C, std::abs(s1[z]) / denom, std::abs(s2[z]) / denom});
  }
  return C;
}

} // namespace mfg
