#include "mfg/drive.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mfg {

void RunConfig::validate() const {
  if (!(theta > 0.0 && theta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "theta must lie in (0,1]");
  if (max_levels < 0) throw Error(ErrorCode::InvalidArgument, "max_levels must be nonnegative");
  if (max_dofs <= 0) throw Error(ErrorCode::InvalidArgument, "max_dofs must be positive");
  if (newton.max_iter <= 0 || newton.max_halvings < 0 || !(newton.tol > 0.0))
    throw Error(ErrorCode::InvalidArgument, "invalid Newton options");
  if (!(stabilization.scale >= 0.0)) throw Error(ErrorCode::InvalidArgument, "stab_scale must be nonnegative");
}

MeshPtr initial_mesh(const std::string& problem, int resolution) {
  const MfgProblem pb = make_problem(problem); // validates the name
  if (pb.name == "experiment1") return generate_structured_square(resolution > 0 ? resolution : 4);
  if (pb.name == "experiment2") return generate_l_shape(resolution > 0 ? resolution : 2);
  return generate_perforated_square(resolution > 0 ? resolution : 10);
}

namespace {

std::string mode_name(RefinementMode mode) { return mode == RefinementMode::Adaptive ? "adaptive" : "uniform"; }

AdaptRecord make_record(int level, const DiscreteSystem& sys, const Solution& sol, const EstimatorReport& rep) {
  const Mesh& mesh = *sys.mesh;
  AdaptRecord r;
  r.level = level;
  r.num_dofs = mesh.num_vertices();
  if (sys.problem.exact) {
    const auto& ex = *sys.problem.exact;
    r.h1_error = error_norms(sol.u, ex.u, ex.grad_u).h1 + error_norms(sol.m, ex.m, ex.grad_m).h1;
  }
  r.eta = rep.eta();
  r.stab = rep.stab();
  r.jump = rep.jump();
  r.total = rep.total;
  r.res1 = rep.res1;
  r.res2 = rep.res2;
  r.stab1 = rep.stab1;
  r.stab2 = rep.stab2;
  r.jump1 = rep.jump1;
  r.jump2 = rep.jump2;
  r.newton_iterations = sol.report.iterations;
  r.min_m = sol.report.min_m;
  r.max_abs_m = sol.report.max_abs_m;
  r.xu_zikatanov = xu_zikatanov_check(mesh).pass;
  int tmin = 0;
  for (int t = 1; t < mesh.num_triangles(); ++t)
    if (mesh.diameter(t) < mesh.diameter(tmin)) tmin = t;
  r.min_diameter = mesh.diameter(tmin);
  r.min_diameter_centroid = mesh.centroid(tmin);
  return r;
}

void write_outputs(const RunConfig& config, const std::vector<AdaptRecord>& records, const DiscreteSystem* sys,
                   const Solution* sol, const EstimatorReport* rep) {
  if (config.output_dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + config.output_dir + ": " + ec.message());
  const std::string stem =
      (std::filesystem::path(config.output_dir) / (config.problem + "_" + mode_name(config.mode))).string();
  write_csv(records, stem + ".csv");
  if (config.write_vtk && sys && sol && rep) {
    const auto flux = element_flux(*sys, sol->u, sol->m);
    write_vtk(*sys->mesh, sol->u, sol->m, flux, rep->eta1, rep->eta2, stem + ".vtk");
  }
}

} // namespace

AdaptiveRun adaptive_loop(const RunConfig& config) {
  return adaptive_loop(config, initial_mesh(config.problem, config.initial_resolution), make_problem(config.problem));
}

AdaptiveRun adaptive_loop(const RunConfig& config, MeshPtr mesh, const MfgProblem& problem) {
  config.validate();
  using clock = std::chrono::steady_clock;
  const double lipschitz = problem.hamiltonian.lipschitz.value_or(1.0);

  AdaptiveRun run;
  std::optional<Vector> warm_u, warm_m;
  for (int level = 0;; ++level) {
    const auto start = clock::now();
    DiscreteSystem sys = make_system(mesh, problem, config.stabilization.build(mesh, lipschitz));
    Solution sol;
    try {
      if (config.warm_start && warm_u) {
        try {
          sol = newton_solve(sys, P1Function(mesh, *warm_u), P1Function(mesh, *warm_m), config.newton);
        } catch (const Error&) {
          sol = newton_solve(sys, config.newton);
        }
      } else {
        sol = newton_solve(sys, config.newton);
      }
    } catch (const Error& e) {
      write_outputs(config, run.records, nullptr, nullptr, nullptr);
      throw AdaptiveLoopError(e, run.records);
    }
    EstimatorReport rep = estimate(sys, sol.u, sol.m, config.estimator);
    AdaptRecord rec = make_record(level, sys, sol, rep);
    rec.wall_time = std::chrono::duration<double>(clock::now() - start).count();
    run.records.push_back(rec);

    bool done = level >= config.max_levels || mesh->num_vertices() >= config.max_dofs;
    Refinement ref;
    if (!done) {
      if (config.mode == RefinementMode::Uniform) {
        ref = uniform_refine_detailed(*mesh);
      } else {
        const MarkedSet marked = doerfler_mark(rep.eta1, rep.eta2, config.theta);
        if (marked.elements.empty()) done = true;
        else ref = refine_nvb_detailed(*mesh, marked.elements);
      }
    }
    if (done) {
      run.mesh = mesh;
      write_outputs(config, run.records, &sys, &sol, &rep);
      run.solution = std::move(sol);
      run.report = std::move(rep);
      return run;
    }
    warm_u = ref.prolongate(sol.u.values);
    warm_m = ref.prolongate(sol.m.values);
    mesh = ref.mesh;
  }
}

double convergence_rate(std::span<const AdaptRecord> records, RecordField field, int tail) {
  if (records.size() < 2 || tail < 2) throw Error(ErrorCode::InsufficientData, "need at least two records");
  const std::size_t k = std::min<std::size_t>(records.size(), static_cast<std::size_t>(tail));
  const auto window = records.subspan(records.size() - k);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& r : window) {
    double v = 0.0;
    switch (field) {
    case RecordField::H1Error:
      if (!r.h1_error) throw Error(ErrorCode::InsufficientData, "records carry no H1 error");
      v = *r.h1_error;
      break;
    case RecordField::Eta: v = r.eta; break;
    case RecordField::Stab: v = r.stab; break;
    case RecordField::Jump: v = r.jump; break;
    case RecordField::Total: v = r.total; break;
    }
    if (!(v > 0.0) || r.num_dofs <= 0) throw Error(ErrorCode::InsufficientData, "values must be positive");
    const double x = std::log(static_cast<double>(r.num_dofs));
    const double y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(k);
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0) throw Error(ErrorCode::InsufficientData, "dof counts do not vary");
  return (n * sxy - sx * sy) / denom;
}

std::vector<Vec2> element_flux(const DiscreteSystem& sys, const P1Function& u, const P1Function& m) {
  const Mesh& mesh = *sys.mesh;
  std::vector<Vec2> flux(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 gu = element_gradient(u, t);
    const Vec2 gm = element_gradient(m, t);
    const double mc = m.value_at(t, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    flux[t] = -sys.problem.nu * gm - mc * sys.problem.hamiltonian.grad_p(mesh.centroid(t), gu);
  }
  return flux;
}

void write_csv(std::span<const AdaptRecord> records, std::ostream& out) {
  if (records.empty()) throw Error(ErrorCode::InvalidArgument, "no records to write");
  out << "num_dofs,H1_error,eta,stab,jump,eta+stab\n";
  out << std::setprecision(17);
  for (const auto& r : records) {
    out << r.num_dofs << ',';
    if (r.h1_error) out << *r.h1_error;
    out << ',' << r.eta << ',' << r.stab << ',' << r.jump << ',' << r.total << '\n';
  }
}

void write_csv(std::span<const AdaptRecord> records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_csv(records, out);
  if (!out) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

std::vector<AdaptRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "num_dofs,H1_error,eta,stab,jump,eta+stab")
    throw Error(ErrorCode::ParseError, "unexpected CSV header");
  std::vector<AdaptRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (line.back() == ',') cols.emplace_back();
    if (cols.size() != 6) throw Error(ErrorCode::ParseError, "expected 6 columns in '" + line + "'");
    AdaptRecord r;
    try {
      r.level = static_cast<int>(records.size());
      r.num_dofs = std::stol(cols[0]);
      if (!cols[1].empty()) r.h1_error = std::stod(cols[1]);
      r.eta = std::stod(cols[2]);
      r.stab = std::stod(cols[3]);
      r.jump = std::stod(cols[4]);
      r.total = std::stod(cols[5]);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, "bad number in '" + line + "'");
    }
    records.push_back(r);
  }
  return records;
}

void write_vtk(const Mesh& mesh, const P1Function& u, const P1Function& m, std::span<const Vec2> flux,
               std::span<const double> eta1, std::span<const double> eta2, std::ostream& out) {
  const int nv = mesh.num_vertices(), nt = mesh.num_triangles();
  if (u.values.size() != nv || m.values.size() != nv || static_cast<int>(flux.size()) != nt ||
      static_cast<int>(eta1.size()) != nt || static_cast<int>(eta2.size()) != nt)
    throw Error(ErrorCode::MeshMismatch, "VTK fields do not match the mesh");
  out << std::setprecision(17);
  out << "# vtk DataFile Version 3.0\nmfg solution\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << " 0\n";
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (int t = 0; t < nt; ++t) out << "5\n";
  out << "POINT_DATA " << nv << '\n';
  for (const auto& [name, f] : {std::pair<const char*, const Vector*>{"u", &u.values}, {"m", &m.values}}) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int v = 0; v < nv; ++v) out << (*f)[v] << '\n';
  }
  out << "CELL_DATA " << nt << '\n';
  for (const auto& [name, f] : {std::pair<const char*, std::span<const double>>{"eta1", eta1}, {"eta2", eta2}}) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int t = 0; t < nt; ++t) out << f[t] << '\n';
  }
  out << "VECTORS flux double\n";
  for (const auto& b : flux) out << b.x() << ' ' << b.y() << " 0\n";
}

void write_vtk(const Mesh& mesh, const P1Function& u, const P1Function& m, std::span<const Vec2> flux,
               std::span<const double> eta1, std::span<const double> eta2, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_vtk(mesh, u, m, flux, eta1, eta2, out);
  if (!out) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::logic_error&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw Error(ErrorCode::ParseError, key + ": expected a number, got '" + v + "'");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long x = 0;
  try {
    x = std::stol(v, &pos);
  } catch (const std::logic_error&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw Error(ErrorCode::ParseError, key + ": expected an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::ParseError, key + ": expected a boolean, got '" + v + "'");
}

} // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "problem") {
      try {
        c.problem = make_problem(value).name;
      } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, e.what());
      }
    } else if (key == "mode") {
      if (value == "adaptive") c.mode = RefinementMode::Adaptive;
      else if (value == "uniform") c.mode = RefinementMode::Uniform;
      else throw Error(ErrorCode::ParseError, "mode: expected adaptive or uniform, got '" + value + "'");
    } else if (key == "theta") {
      c.theta = to_double(key, value);
    } else if (key == "max_levels") {
      c.max_levels = static_cast<int>(to_long(key, value));
    } else if (key == "max_dofs") {
      c.max_dofs = to_long(key, value);
    } else if (key == "stabilization") {
      try {
        c.stabilization.kind = parse_stabilization_kind(value);
      } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, e.what());
      }
    } else if (key == "stab_scale") {
      c.stabilization.scale = to_double(key, value);
    } else if (key == "newton_tol") {
      c.newton.tol = to_double(key, value);
    } else if (key == "newton_max_iter") {
      c.newton.max_iter = static_cast<int>(to_long(key, value));
    } else if (key == "linesearch_max_halvings") {
      c.newton.max_halvings = static_cast<int>(to_long(key, value));
    } else if (key == "warm_start") {
      c.warm_start = to_bool(key, value);
    } else if (key == "output_dir") {
      c.output_dir = value;
    } else if (key == "initial_resolution") {
      c.initial_resolution = static_cast<int>(to_long(key, value));
    } else if (key == "write_vtk") {
      c.write_vtk = to_bool(key, value);
    } else {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return parse_config(in);
}

} // namespace mfg
