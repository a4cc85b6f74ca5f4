// Command-line front end: experiment runs, config-file runs and the oracle checks.

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "mfg/drive.hpp"

namespace {

using namespace mfg;

constexpr int kExitOk = 0;
constexpr int kExitSolver = 1;
constexpr int kExitUsage = 2;

void print_records(const std::vector<AdaptRecord>& records, bool with_ratio) {
  std::cout << std::setw(6) << "level" << std::setw(10) << "dofs" << std::setw(14) << "H1_error" << std::setw(14)
            << "eta" << std::setw(14) << "stab" << std::setw(14) << "jump" << std::setw(14) << "eta+stab"
            << std::setw(8) << "newton";
  if (with_ratio) std::cout << std::setw(12) << "stab1/J1" << std::setw(12) << "stab2/J2";
  std::cout << '\n';
  for (const auto& r : records) {
    std::cout << std::setw(6) << r.level << std::setw(10) << r.num_dofs << std::setw(14) << std::setprecision(5)
              << (r.h1_error ? std::to_string(*r.h1_error) : std::string("-")) << std::setw(14) << r.eta
              << std::setw(14) << r.stab << std::setw(14) << r.jump << std::setw(14) << r.total << std::setw(8)
              << r.newton_iterations;
    if (with_ratio)
      std::cout << std::setw(12) << (r.jump1 > 0 ? r.stab1 / r.jump1 : 0.0) << std::setw(12)
                << (r.jump2 > 0 ? r.stab2 / r.jump2 : 0.0);
    std::cout << '\n';
  }
}

void print_slopes(const std::vector<AdaptRecord>& records) {
  if (records.size() < 2) return;
  auto show = [&](const char* name, RecordField f) {
    try {
      const double slope = convergence_rate(records, f);
      std::cout << "slope(" << name << ") = " << std::setprecision(4) << slope << '\n';
    } catch (const Error&) {
    }
  };
  show("H1_error", RecordField::H1Error);
  show("eta", RecordField::Eta);
  show("eta+stab", RecordField::Total);
}

int run_config(const RunConfig& config) {
  const AdaptiveRun run = adaptive_loop(config);
  print_records(run.records, config.problem == "experiment3");
  print_slopes(run.records);
  if (!config.output_dir.empty()) std::cout << "output written to " << config.output_dir << '\n';
  return kExitOk;
}

// Oracle checks ----------------------------------------------------------

bool check_jacobian() {
  auto mesh = generate_structured_square(4);
  auto pb = make_problem_experiment1();
  auto sys = make_system(mesh, pb, edge_stabilization(mesh, edge_length_weight()));
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  P1Function u(mesh), m(mesh);
  for (int v = 0; v < mesh->num_vertices(); ++v) {
    u.values[v] = dist(gen) - 0.5;
    m.values[v] = dist(gen);
  }
  impose_dirichlet(sys, u, m);
  const Eigen::MatrixXd J = Eigen::MatrixXd(system_jacobian(sys, u, m));
  const int n = mesh->num_vertices();
  Eigen::MatrixXd Jfd(2 * n, 2 * n);
  const double step = 1e-6;
  for (int k = 0; k < 2 * n; ++k) {
    P1Function up = u, um = u, mp = m, mm = m;
    if (k < n) {
      up.values[k] += step;
      um.values[k] -= step;
    } else {
      mp.values[k - n] += step;
      mm.values[k - n] -= step;
    }
    Jfd.col(k) = (system_residual(sys, up, mp) - system_residual(sys, um, mm)) / (2 * step);
  }
  const double rel = (J - Jfd).norm() / J.norm();
  std::cout << "jacobian vs finite differences: relative difference " << rel << '\n';
  return rel <= 1e-5;
}

bool check_stab_estimator() {
  auto mesh = generate_structured_square(4);
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector s(mesh->num_vertices());
  for (int v = 0; v < s.size(); ++v) s[v] = mesh->is_dirichlet_vertex(v) ? 0.0 : dist(gen);
  const FreeDofs dofs = free_dofs(mesh->dirichlet_mask());
  const Eigen::MatrixXd A = Eigen::MatrixXd(restrict_matrix(assemble_laplace(*mesh).matrix, dofs));
  Eigen::VectorXd sf(dofs.free.size());
  for (std::size_t k = 0; k < dofs.free.size(); ++k) sf[k] = s[dofs.free[k]];
  const double oracle = std::sqrt(sf.dot(A.inverse() * sf));
  const double value = dual_norm(*mesh, s);
  const double rel = std::abs(value - oracle) / oracle;
  std::cout << "stabilization estimator vs dense inverse: relative difference " << rel << '\n';
  return rel <= 1e-10;
}

bool check_nvb() {
  auto mesh = generate_structured_square(1);
  const std::vector<int> marked = {0};
  const auto ref = refine_nvb_detailed(*mesh, marked);
  const std::vector<std::array<int, 3>> expected = {{1, 3, 4}, {1, 4, 0}, {2, 0, 4}, {2, 4, 3}};
  const bool ok = ref.mesh->triangles() == expected && ref.mesh->num_vertices() == 5 &&
                  ref.mesh->vertex(4).isApprox(Vec2(0.5, 0.5));
  std::cout << "newest vertex bisection trace: " << (ok ? "matches" : "differs") << '\n';
  return ok;
}

int run_checks() {
  bool ok = true;
  ok &= check_jacobian();
  ok &= check_stab_estimator();
  ok &= check_nvb();
  std::cout << (ok ? "all checks passed" : "some checks failed") << '\n';
  return ok ? kExitOk : kExitSolver;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive stabilized finite elements for stationary mean field games"};
  app.require_subcommand(1);

  auto* experiment = app.add_subcommand("experiment", "Run one of the three reference experiments");
  int number = 1;
  bool uniform = false, adaptive = false;
  RunConfig config;
  experiment->add_option("number", number, "Experiment number")->required()->check(CLI::Range(1, 3));
  auto* uni = experiment->add_flag("--uniform", uniform, "Uniform refinement");
  experiment->add_flag("--adaptive", adaptive, "Adaptive refinement (default)")->excludes(uni);
  experiment->add_option("--theta", config.theta, "Bulk-chasing parameter")->check(CLI::Range(1e-12, 1.0));
  experiment->add_option("--max-dofs", config.max_dofs, "Stop once the vertex count reaches this value")
      ->check(CLI::PositiveNumber);
  experiment->add_option("--max-levels", config.max_levels, "Maximum number of refinements")
      ->check(CLI::NonNegativeNumber);
  experiment->add_option("--resolution", config.initial_resolution, "Initial mesh resolution")
      ->check(CLI::NonNegativeNumber);
  experiment->add_option("--out", config.output_dir, "Output directory for CSV and VTK files");

  auto* run = app.add_subcommand("run", "Run from a key=value configuration file");
  std::string config_path;
  run->add_option("--config", config_path, "Configuration file")->required();

  app.add_subcommand("check", "Run the oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*experiment) {
      config.problem = "experiment" + std::to_string(number);
      config.mode = uniform ? RefinementMode::Uniform : RefinementMode::Adaptive;
      config.validate();
      return run_config(config);
    }
    if (*run) return run_config(load_config(config_path));
    return run_checks();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
      return kExitUsage;
    default:
      return kExitSolver;
    }
  }
}
