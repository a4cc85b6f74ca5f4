#pragma once

#include <string>
#include <vector>

#include "mfg/mesh.hpp"
#include "mfg/problem.hpp"
#include "mfg/space.hpp"
#include "mfg/stab.hpp"

namespace mfg {

/// The stabilized P1 system on one mesh.  Unknowns are stacked as [U; M],
/// each of length num_vertices.
struct DiscreteSystem {
  MeshPtr mesh;
  MfgProblem problem;
  StabilizationPtr stab;
  std::vector<bool> dirichlet_u;
  std::vector<bool> dirichlet_m;
  Vector neumann_load_u; // int_{Gamma_N} g2 psi_z
  Vector neumann_load_m; // int_{Gamma_N} g3 psi_z
  Vector source_load;    // int G psi_z
  /// Difference H_pp from grad_p when the Hamiltonian has no hess_p.
  bool finite_difference_hessian = true;

  int num_vertices() const { return mesh->num_vertices(); }
};

DiscreteSystem make_system(MeshPtr mesh, MfgProblem problem, StabilizationPtr stab);

/// Overwrites the Dirichlet coefficients of U and M with the boundary data.
void impose_dirichlet(const DiscreteSystem& sys, P1Function& u, P1Function& m);

/// Zero interior values with the Dirichlet data on the boundary.
std::pair<P1Function, P1Function> initial_guess(const DiscreteSystem& sys);

/// Free entries: the weak residuals of both equations tested with psi_z.
/// Dirichlet entries: U_z - g_D^u(z) and M_z - g_D^m(z).
Vector system_residual(const DiscreteSystem& sys, const P1Function& u, const P1Function& m);

/// Derivative of system_residual, with identity rows at Dirichlet dofs.
SparseMatrix system_jacobian(const DiscreteSystem& sys, const P1Function& u, const P1Function& m);

/// Data part of the right-hand side (source and Neumann loads) at free dofs.
Vector data_load(const DiscreteSystem& sys);

struct NewtonOptions {
  double tol = 1e-10;      // relative to 1 + |data load|_inf
  double abs_tol = 1e-12;
  int max_iter = 50;
  int max_halvings = 30;
  double armijo = 1e-4;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history; // Euclidean norms, initial guess first
  std::vector<double> step_sizes;
  bool converged = false;
  double min_m = 0.0;
  double max_abs_m = 0.0;
  std::vector<std::string> warnings;
};

struct Solution {
  P1Function u;
  P1Function m;
  SolveReport report;
};

/// Damped Newton on the coupled system.  Throws NewtonDiverged,
/// LinearSolveFailed or LineSearchStalled.
Solution newton_solve(const DiscreteSystem& sys, P1Function u0, P1Function m0, const NewtonOptions& options = {});
Solution newton_solve(const DiscreteSystem& sys, const NewtonOptions& options = {});

/// Sparse direct solve.  With spd = true a Cholesky factorization is used.
/// Throws SingularMatrix; LinearSolveFailed if the normwise backward error stays above 1e-14.
Vector linear_solve(const SparseMatrix& A, const Vector& rhs, bool spd = false);

} // namespace mfg
