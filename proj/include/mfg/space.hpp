#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mfg/mesh.hpp"

namespace mfg {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Quadrature on the reference triangle (barycentric points, weights summing to 1)
/// or the reference segment (points in [0,1], weights summing to 1).
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;
};

const QuadratureRule& triangle_rule(int degree); // degree 1, 2 or 6
const QuadratureRule& edge_rule(int points);     // Gauss-Legendre with 2, 3 or 4 points

/// Physical quadrature point and weight on triangle t for reference point q.
struct QuadPoint {
  Vec2 x;
  double weight;
  std::array<double, 3> lambda;
};
std::vector<QuadPoint> quadrature_points(const Mesh& mesh, int t, const QuadratureRule& rule);

/// Coefficient vector over the vertices of a mesh.
struct P1Function {
  MeshPtr mesh;
  Vector values;

  P1Function() = default;
  explicit P1Function(MeshPtr m) : mesh(std::move(m)), values(Vector::Zero(mesh->num_vertices())) {}
  P1Function(MeshPtr m, Vector v);

  double value_at(int t, const std::array<double, 3>& lambda) const;
};

using ScalarField = std::function<double(const Vec2&)>;
using VectorField = std::function<Vec2(const Vec2&)>;

P1Function interpolate(MeshPtr mesh, const ScalarField& f);

/// Constant gradient of f on triangle t.
Vec2 element_gradient(const P1Function& f, int t);
Vec2 element_gradient(const Mesh& mesh, const Vector& values, int t);

void require_same_mesh(const P1Function& a, const P1Function& b);

/// Square sparse operator over the vertex dofs.
struct SparseOperator {
  SparseMatrix matrix;
  bool symmetric = false;

  Eigen::Index size() const { return matrix.rows(); }
};

/// A[z,z'] = sum_K int_K (D_K grad psi_z') . grad psi_z.
SparseOperator assemble_diffusion(const Mesh& mesh, std::span<const Mat2> tensors);
SparseOperator assemble_laplace(const Mesh& mesh, double scale = 1.0);

/// C[z,z'] = sum_K int_K psi_z' (b_K . grad psi_z).
SparseOperator assemble_convection(const Mesh& mesh, std::span<const Vec2> drift);

/// M[z,z'] = sum_K int_K w(x) psi_z' psi_z with w given at the degree-6 quadrature points.
SparseOperator assemble_mass(const Mesh& mesh, const std::function<double(int t, const QuadPoint&)>& weight);

struct Norms {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double h1 = 0.0;
};

Norms norms(const P1Function& f);

/// Norms of (exact - f), using the degree-6 rule.
Norms error_norms(const P1Function& f, const ScalarField& exact, const VectorField& exact_gradient);

/// Moves the known Dirichlet values to the right-hand side and replaces the
/// constrained rows and columns by the identity.
void apply_dirichlet(SparseMatrix& A, Vector& rhs, const std::vector<bool>& constrained, const Vector& values);

/// Indices of unconstrained dofs in ascending order and the inverse map (-1 for constrained).
struct FreeDofs {
  std::vector<int> free;
  std::vector<int> position;
};
FreeDofs free_dofs(const std::vector<bool>& constrained);

/// Restriction of A to rows/columns in `dofs`.
SparseMatrix restrict_matrix(const SparseMatrix& A, const FreeDofs& dofs);

} // namespace mfg
