#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mfg/mesh.hpp"
#include "mfg/space.hpp"

namespace mfg {

/// H(x,p) with its p-derivatives.  hess_p may be left empty, in which case
/// the solver differentiates grad_p numerically.
struct Hamiltonian {
  std::function<double(const Vec2& x, const Vec2& p)> eval;
  std::function<Vec2(const Vec2& x, const Vec2& p)> grad_p;
  std::function<Mat2(const Vec2& x, const Vec2& p)> hess_p;
  std::optional<double> lipschitz;      // L_H: sup |grad_p|
  std::optional<double> grad_lipschitz; // L_{H_p}
  bool x_independent = true;
};

/// H(p) = sqrt(|p|^2 + 1).
Hamiltonian hamiltonian_eikonal();

enum class CouplingKind { Identity, Shifted, Cubic, Fixed };

/// Local coupling F[m](x) = f(x, m(x)).
struct Coupling {
  CouplingKind kind = CouplingKind::Identity;
  ScalarField shift; // m0 for Shifted (F[m] = m - m0), f for Fixed (F[m] = f)

  // Analysis-only metadata, carried for reporting.
  std::optional<double> lipschitz;
  std::optional<double> monotonicity;

  double value(const Vec2& x, double m) const;
  double derivative(const Vec2& x, double m) const;
  /// F[m] at the points of `rule` on element t.
  std::vector<double> evaluate(const P1Function& m, int t, const QuadratureRule& rule) const;

  static Coupling identity();
  static Coupling shifted(ScalarField m0);
  static Coupling cubic();
  /// F[m] = f independent of m (decouples the HJB equation).
  static Coupling fixed(ScalarField f);
};

/// Dirichlet values on Gamma_D and Neumann data g2 (HJB) and g3 (KFP) on
/// Gamma_N, the latter keyed by boundary region id.
struct BoundarySpec {
  ScalarField dirichlet_u;
  ScalarField dirichlet_m;
  std::function<double(const Vec2&, int region)> neumann_u;
  std::function<double(const Vec2&, int region)> neumann_m;
};

struct ExactSolution {
  ScalarField u, m;
  VectorField grad_u, grad_m;
};

struct MfgProblem {
  std::string name;
  double nu = 1.0;
  Hamiltonian hamiltonian;
  Coupling coupling;
  ScalarField source; // G
  BoundarySpec boundary;
  std::optional<ExactSolution> exact;
};

/// Throws InvalidArgument if nu <= 0 or the mesh has boundary regions without data.
void validate(const MfgProblem& problem, const Mesh& mesh);

/// Closed forms of the manufactured solution on the unit square.
namespace manufactured {
struct Derivatives {
  double value, dx, dy, dxx, dxy, dyy;
};
Derivatives u(const Vec2& x);
Derivatives m(const Vec2& x);
/// Shift m0 making (u, m) solve the HJB equation with F[m] = m - m0.
double m0(const Vec2& x, double nu);
/// Source G making (u, m) solve the KFP equation.
double source(const Vec2& x, double nu);
} // namespace manufactured

MfgProblem make_problem_experiment1();
MfgProblem make_problem_experiment2();
MfgProblem make_problem_experiment3();

/// "experiment1" / "1", "experiment2" / "2", "experiment3" / "3".
MfgProblem make_problem(std::string_view name);

} // namespace mfg
