#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfg/estimate.hpp"
#include "mfg/refine.hpp"
#include "mfg/solver.hpp"
#include "mfg/stab.hpp"

namespace mfg {

enum class RefinementMode { Adaptive, Uniform };

struct RunConfig {
  std::string problem = "experiment1";
  RefinementMode mode = RefinementMode::Adaptive;
  double theta = 0.3;
  int max_levels = 400;
  long max_dofs = 20000;
  StabilizationChoice stabilization;
  NewtonOptions newton;
  bool warm_start = true;
  /// Resolution of the generated initial mesh; 0 selects the problem default.
  int initial_resolution = 0;
  EstimatorOptions estimator;
  /// Directory for CSV and VTK output; empty disables file output.
  std::string output_dir;
  bool write_vtk = true;

  /// Throws InvalidArgument when theta is outside (0,1] or a cap is not positive.
  void validate() const;
};

struct AdaptRecord {
  int level = 0;
  long num_dofs = 0; // vertex count
  std::optional<double> h1_error;
  double eta = 0.0;   // sum_i eta_res,i
  double stab = 0.0;  // sum_i eta_stab,i
  double jump = 0.0;  // sum_i J_i
  double total = 0.0; // eta + stab
  double res1 = 0.0, res2 = 0.0, stab1 = 0.0, stab2 = 0.0, jump1 = 0.0, jump2 = 0.0;
  int newton_iterations = 0;
  double wall_time = 0.0; // seconds
  double min_m = 0.0;
  double max_abs_m = 0.0;
  bool xu_zikatanov = true;
  double min_diameter = 0.0;
  Vec2 min_diameter_centroid = Vec2::Zero();
};

struct AdaptiveRun {
  std::vector<AdaptRecord> records;
  MeshPtr mesh;
  Solution solution;
  EstimatorReport report;
};

/// Solver failure inside the loop, carrying the records of the completed levels.
class AdaptiveLoopError : public Error {
public:
  AdaptiveLoopError(const Error& cause, std::vector<AdaptRecord> records)
      : Error(cause), records_(std::move(records)) {}
  const std::vector<AdaptRecord>& records() const { return records_; }

private:
  std::vector<AdaptRecord> records_;
};

/// Initial mesh of a named experiment at the given resolution (0: default).
MeshPtr initial_mesh(const std::string& problem, int resolution = 0);

/// solve, estimate, record, then mark and refine (or refine uniformly) until
/// max_levels refinements were done or the vertex count reached max_dofs.
AdaptiveRun adaptive_loop(const RunConfig& config);
AdaptiveRun adaptive_loop(const RunConfig& config, MeshPtr mesh, const MfgProblem& problem);

enum class RecordField { H1Error, Eta, Stab, Jump, Total };

/// Least-squares slope of log(field) against log(num_dofs) over the last `tail` records.
double convergence_rate(std::span<const AdaptRecord> records, RecordField field, int tail = 3);

/// Cell flux b = -nu grad m - m H_p(grad u), with m taken at the centroid.
std::vector<Vec2> element_flux(const DiscreteSystem& sys, const P1Function& u, const P1Function& m);

void write_csv(std::span<const AdaptRecord> records, std::ostream& out);
void write_csv(std::span<const AdaptRecord> records, const std::string& path);

/// Parses the CSV written by write_csv back into records (only the CSV columns are set).
std::vector<AdaptRecord> read_csv(std::istream& in);

void write_vtk(const Mesh& mesh, const P1Function& u, const P1Function& m, std::span<const Vec2> flux,
               std::span<const double> eta1, std::span<const double> eta2, std::ostream& out);
void write_vtk(const Mesh& mesh, const P1Function& u, const P1Function& m, std::span<const Vec2> flux,
               std::span<const double> eta1, std::span<const double> eta2, const std::string& path);

/// Flat "key = value" configuration; '#' starts a comment.  Throws ParseError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

} // namespace mfg
