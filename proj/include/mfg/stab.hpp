#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mfg/mesh.hpp"
#include "mfg/space.hpp"

namespace mfg {

/// Stabilization forms S_1(u,m;v) and S_2(u,m;v), linear in the test function v.
class Stabilization {
public:
  explicit Stabilization(MeshPtr mesh) : mesh_(std::move(mesh)) {}
  virtual ~Stabilization() = default;

  const MeshPtr& mesh() const { return mesh_; }

  /// S_i(u, m; v) for equation i in {1, 2}.
  virtual double apply(const P1Function& u, const P1Function& m, const P1Function& v, int equation) const = 0;

  /// S_i(u, m; psi_z) for every vertex z, zero at Dirichlet vertices.
  virtual Vector vector(const P1Function& u, const P1Function& m, int equation) const = 0;

  /// Derivatives of the full-length vector S_i(u, m; psi_z) with respect to the
  /// coefficients of u and of m.
  struct Derivative {
    SparseMatrix du;
    SparseMatrix dm;
  };
  virtual Derivative derivative(const P1Function& u, const P1Function& m, int equation) const = 0;

protected:
  void check(const P1Function& u, const P1Function& m, int equation) const;

  MeshPtr mesh_;
};

using StabilizationPtr = std::shared_ptr<const Stabilization>;

/// Linear stabilization S_1 = int D grad u . grad v, S_2 = int D grad m . grad v
/// with a piecewise constant symmetric positive semidefinite tensor D.
class TensorStabilization final : public Stabilization {
public:
  TensorStabilization(MeshPtr mesh, std::vector<Mat2> tensors);

  const std::vector<Mat2>& tensors() const { return tensors_; }
  /// Full stiffness matrix of D over all vertices.
  const SparseMatrix& matrix() const { return matrix_; }

  double apply(const P1Function& u, const P1Function& m, const P1Function& v, int equation) const override;
  Vector vector(const P1Function& u, const P1Function& m, int equation) const override;
  Derivative derivative(const P1Function& u, const P1Function& m, int equation) const override;

private:
  std::vector<Mat2> tensors_;
  SparseMatrix matrix_;
};

/// gamma_E for edge e; must be nonnegative.
using EdgeWeight = std::function<double(const Mesh& mesh, int edge)>;

/// gamma_E = diam E.
EdgeWeight edge_length_weight(double scale = 1.0);

/// An edge takes part in the edge tensor when at least one endpoint is not a
/// Dirichlet vertex (interior vertices and vertices of the Neumann boundary).
bool is_stabilized_edge(const Mesh& mesh, int edge);

/// D_K = sum over stabilized edges E of K of gamma_E t_E t_E^T.  Throws NegativeWeight.
std::vector<Mat2> edge_tensor(const Mesh& mesh, const EdgeWeight& weight);

std::shared_ptr<const TensorStabilization> edge_stabilization(MeshPtr mesh, const EdgeWeight& weight);
std::shared_ptr<const TensorStabilization> constant_isotropic(MeshPtr mesh, double rho);
std::shared_ptr<const TensorStabilization> no_stabilization(MeshPtr mesh);

/// S_i(u, m; v).  Throws MeshMismatch if the functions live on different meshes.
double stab_form(const Stabilization& stab, const P1Function& u, const P1Function& m, const P1Function& v,
                 int equation);

enum class StabilizationKind { Edge, Isotropic, None };

StabilizationKind parse_stabilization_kind(std::string_view name);
std::string_view to_string(StabilizationKind kind);

/// Recipe applied to each mesh of a refinement sequence.
/// Edge: gamma_E = scale * L_H * diam E.  Isotropic: D = scale * I.
struct StabilizationChoice {
  StabilizationKind kind = StabilizationKind::Edge;
  double scale = 1.0;

  StabilizationPtr build(MeshPtr mesh, double lipschitz_h = 1.0) const;
};

/// Largest observed C in
///   |S_i(v,w;psi_z) - S_i(v~,w~;psi_z)| <= C |omega_z|^(1/2) (|grad(v-v~)|_omega_z + |grad(w-w~)|_omega_z)
/// over free vertices z and i = 1, 2, with (dv, dw) = (v - v~, w - w~).
double stab_scaling_constant(const Stabilization& stab, const P1Function& dv, const P1Function& dw);

} // namespace mfg
