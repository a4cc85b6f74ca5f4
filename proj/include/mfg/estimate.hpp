#pragma once

#include <array>
#include <vector>

#include "mfg/solver.hpp"

namespace mfg {

/// Elementwise L2 norms of the volume residuals
///   r_1 = F[m] - H(grad u),  r_2 = G + grad m . H_p(grad u).
struct VolumeResiduals {
  std::vector<double> norm1, norm2;
  std::vector<double> h; // longest edge of each element
};
VolumeResiduals volume_residuals(const DiscreteSystem& sys, const P1Function& u, const P1Function& m);

/// Edge L2 norms of the jump residuals, indexed by edge.  Interior edges carry
///   j_1 = nu [[grad u . n]],  j_2 = nu [[grad m . n]] + m [[H_p . n]],
/// Neumann edges carry
///   j_1 = nu grad u . n - g2,  j_2 = nu grad m . n + m H_p . n - g3,
/// and Dirichlet edges are zero with active = false.
struct JumpResiduals {
  std::vector<double> norm1, norm2;
  std::vector<bool> active;
};
/// With flip_orientation the opposite normal is used on every interior edge.
JumpResiduals jump_residuals(const DiscreteSystem& sys, const P1Function& u, const P1Function& m,
                             bool flip_orientation = false);

/// Values (j_1, j_2) at points s in [0,1] along edge e, measured from its lower vertex.
std::vector<std::array<double, 2>> jump_values(const DiscreteSystem& sys, const P1Function& u, const P1Function& m,
                                               int e, const std::vector<double>& s, bool flip_orientation = false);

/// eta_K,i^2 = h_K^2 |r_K,i|^2 + sum over interior and Neumann edges F of K of h_F |j_F,i|^2.
struct ElementEstimators {
  std::vector<double> eta1, eta2;
  double res1 = 0.0, res2 = 0.0;     // (sum_K eta_K,i^2)^(1/2)
  double jump1 = 0.0, jump2 = 0.0;   // (sum_F h_F |j_F,i|^2)^(1/2)
};
ElementEstimators element_estimators(const Mesh& mesh, const VolumeResiduals& volume, const JumpResiduals& jumps);

enum class StabEstimatorMode { Exact, Diagonal, SymmetricGaussSeidel };

struct StabEstimatorOptions {
  StabEstimatorMode mode = StabEstimatorMode::Exact;
  int sweeps = 2; // symmetric Gauss-Seidel sweeps
};

/// sup over v in V(T) of S_i(u,m;v) / |grad v|, i.e. (s^T A^{-1} s)^(1/2) with A the
/// Laplace stiffness on the free dofs.  The preconditioned modes replace A^{-1}
/// by a diagonal or symmetric Gauss-Seidel approximation.  Zero without free dofs.
std::array<double, 2> stabilization_estimator(const DiscreteSystem& sys, const P1Function& u, const P1Function& m,
                                              const StabEstimatorOptions& options = {});

/// Same, given the stab vector s over all vertices.
double dual_norm(const Mesh& mesh, const Vector& s, const StabEstimatorOptions& options = {});

struct Oscillation {
  std::vector<double> osc1, osc2; // per element
  double global1 = 0.0, global2 = 0.0;
};
/// Data oscillation with local L2 projections onto polynomials of degree kappa in {0,1,2}.
Oscillation oscillation(const DiscreteSystem& sys, const P1Function& u, const P1Function& m, int kappa = 1);

struct EstimatorReport {
  std::vector<double> eta1, eta2;
  double res1 = 0.0, res2 = 0.0;
  double stab1 = 0.0, stab2 = 0.0;
  double jump1 = 0.0, jump2 = 0.0;
  double total = 0.0;
  std::vector<double> osc1, osc2;
  double osc = 0.0; // (sum_i sum_K osc_K,i^2)^(1/2), when computed

  double eta() const { return res1 + res2; }
  double stab() const { return stab1 + stab2; }
  double jump() const { return jump1 + jump2; }
};

struct EstimatorOptions {
  StabEstimatorOptions stab;
  bool oscillation = false;
  int kappa = 1;
};

EstimatorReport estimate(const DiscreteSystem& sys, const P1Function& u, const P1Function& m,
                         const EstimatorOptions& options = {});

/// sum_i (eta_res,i + eta_stab,i).
double total_estimator(const EstimatorReport& report);

/// eta_stab,i / J_i, taken as 0 when eta_stab,i = 0.
std::array<double, 2> stab_jump_check(const EstimatorReport& report);

} // namespace mfg
