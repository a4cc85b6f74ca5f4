// Acceptance runs: the three experiments in both refinement modes plus the
// oracle suites.  Prints one PASS/FAIL line per criterion; exits nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "mfg/refine.hpp"
#include "oracles.hpp"

using namespace mfg;

namespace {

using clock_type = std::chrono::steady_clock;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

struct Run {
  std::vector<AdaptRecord> records;
  double seconds = 0.0;
  std::string error;
};

Run run(const std::string& problem, RefinementMode mode, long max_dofs = 20000) {
  RunConfig c;
  c.problem = problem;
  c.mode = mode;
  c.max_dofs = max_dofs;
  Run r;
  const auto start = clock_type::now();
  try {
    r.records = adaptive_loop(c).records;
  } catch (const AdaptiveLoopError& e) {
    r.records = e.records();
    r.error = e.what();
  } catch (const Error& e) {
    r.error = e.what();
  }
  r.seconds = seconds_since(start);
  std::printf("  ran %s %s: %zu levels, N = %ld, %.1f s%s%s\n", problem.c_str(),
              mode == RefinementMode::Uniform ? "uniform" : "adaptive", r.records.size(),
              r.records.empty() ? 0L : r.records.back().num_dofs, r.seconds, r.error.empty() ? "" : ", error: ",
              r.error.c_str());
  return r;
}

double slope(const Run& r, RecordField f) {
  try {
    return convergence_rate(r.records, f);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

bool in(double x, double lo, double hi) { return x >= lo && x <= hi; }

std::string csv_of(const std::vector<AdaptRecord>& recs) {
  std::ostringstream out;
  write_csv(recs, out);
  return out.str();
}

/// Largest factor between consecutive-level values of stab_i / J_i over both i.
double ratio_variation(const Run& r, double& lo, double& hi) {
  double worst = 1.0;
  lo = std::numeric_limits<double>::infinity();
  hi = 0.0;
  for (int i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < r.records.size(); ++k) {
      const auto& a = r.records[k];
      const double ra = (i == 0 ? a.stab1 / a.jump1 : a.stab2 / a.jump2);
      lo = std::min(lo, ra);
      hi = std::max(hi, ra);
      if (k == 0) continue;
      const auto& b = r.records[k - 1];
      const double rb = (i == 0 ? b.stab1 / b.jump1 : b.stab2 / b.jump2);
      worst = std::max(worst, std::max(ra / rb, rb / ra));
    }
  return worst;
}

void timed_oracle(const std::string& name, const std::function<std::pair<bool, std::string>()>& f) {
  const auto start = clock_type::now();
  bool ok = false;
  std::string detail;
  try {
    std::tie(ok, detail) = f();
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double s = seconds_since(start);
  report(ok && s < 30.0, name, detail + fmt(" (%.2f s)", s));
}

void oracle_suites() {
  timed_oracle("7a Jacobian vs finite differences", [] {
    double worst = 0.0;
    auto m1 = generate_structured_square(4), m2 = generate_l_shape(2), m3 = generate_perforated_square(4);
    const std::vector<DiscreteSystem> systems = {
        make_system(m1, make_problem_experiment1(), edge_stabilization(m1, edge_length_weight())),
        make_system(m2, make_problem_experiment2(), edge_stabilization(m2, edge_length_weight())),
        make_system(m3, make_problem_experiment3(), edge_stabilization(m3, edge_length_weight()))};
    for (const auto& sys : systems)
      for (unsigned seed : {11u, 12u, 13u}) worst = std::max(worst, oracle::jacobian_fd_error(sys, seed));
    return std::pair{worst <= 1e-5, fmt("max relative difference %.2e <= 1e-5 over 9 states", worst)};
  });

  timed_oracle("7b exact stabilization estimator vs dense inverse", [] {
    double worst = 0.0;
    std::mt19937 gen(21);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (const auto& mesh : {generate_structured_square(4), generate_structured_square(6), generate_l_shape(2)}) {
      auto stab = edge_stabilization(mesh, edge_length_weight());
      for (int trial = 0; trial < 10; ++trial) {
        P1Function u(mesh), m(mesh);
        for (int v = 0; v < mesh->num_vertices(); ++v) {
          u.values[v] = dist(gen);
          m.values[v] = dist(gen);
        }
        for (int i : {1, 2}) {
          const Vector s = stab->vector(u, m, i);
          const double ref = oracle::dense_dual_norm(*mesh, s);
          worst = std::max(worst, std::abs(dual_norm(*mesh, s) - ref) / ref);
        }
      }
    }
    return std::pair{worst <= 1e-10, fmt("max relative difference %.2e <= 1e-10 on meshes with <= 49 dofs", worst)};
  });

  timed_oracle("7c jump norms invariant under normal flip", [] {
    bool same = true;
    for (int which : {1, 2, 3}) {
      auto mesh = which == 1 ? generate_structured_square(8) : which == 2 ? generate_l_shape(4)
                                                                          : generate_perforated_square(8);
      auto sys = make_system(mesh, make_problem(std::to_string(which)), no_stabilization(mesh));
      std::mt19937 gen(which);
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      P1Function u(mesh), m(mesh);
      for (int v = 0; v < mesh->num_vertices(); ++v) {
        u.values[v] = dist(gen);
        m.values[v] = dist(gen);
      }
      const auto a = jump_residuals(sys, u, m, false), b = jump_residuals(sys, u, m, true);
      same = same && a.norm1 == b.norm1 && a.norm2 == b.norm2;
    }
    return std::pair{same, std::string(same ? "bitwise identical on three meshes" : "norms differ")};
  });

  timed_oracle("7d Galerkin residual equals stabilization vector", [] {
    const double e1 = oracle::galerkin_identity_error(generate_structured_square(8), make_problem_experiment1());
    const double e2 = oracle::galerkin_identity_error(generate_l_shape(3), make_problem_experiment2());
    const double e3 = oracle::galerkin_identity_error(generate_perforated_square(5), make_problem_experiment3());
    const double worst = std::max({e1, e2, e3});
    return std::pair{worst <= 1e-10, fmt("max relative difference %.2e <= 1e-10", worst)};
  });

  timed_oracle("7e bisection hand traces", [] {
    auto mesh = generate_structured_square(1);
    const std::vector<std::array<int, 3>> expected = {{1, 3, 4}, {1, 4, 0}, {2, 0, 4}, {2, 4, 3}};
    bool ok = true;
    for (const std::vector<int>& marked : {std::vector<int>{0}, std::vector<int>{1}, std::vector<int>{0, 1}}) {
      const auto ref = refine_nvb_detailed(*mesh, marked);
      ok = ok && ref.mesh->triangles() == expected && ref.mesh->vertex(4) == Vec2(0.5, 0.5);
    }
    ok = ok && refine_nvb_detailed(*mesh, std::vector<int>{}).mesh->triangles() == mesh->triangles();
    ok = ok && uniform_refine(*mesh)->num_triangles() == 8;
    return std::pair{ok, std::string(ok ? "all traces match" : "trace differs")};
  });

  timed_oracle("7f bulk criterion and last-element minimality", [] {
    std::mt19937 gen(31);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    int bad = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const int n = 1 + trial % 61;
      std::vector<double> e1(n), e2(n);
      for (int k = 0; k < n; ++k) {
        e1[k] = std::pow(dist(gen), 4);
        e2[k] = dist(gen);
      }
      const double theta = 0.01 + 0.99 * dist(gen);
      const auto verdict = oracle::check_doerfler(e1, e2, theta, doerfler_mark(e1, e2, theta).elements);
      bad += verdict.satisfies && verdict.minimal ? 0 : 1;
    }
    return std::pair{bad == 0, fmt("%d of 500 random cases violate", bad)};
  });

  timed_oracle("7g manufactured strong residual", [] {
    const double r = oracle::manufactured_strong_residual(100, 41);
    return std::pair{r <= 1e-8, fmt("max pointwise residual %.2e <= 1e-8 at 100 points", r)};
  });

  timed_oracle("7h affine preservation", [] {
    double iso = 0.0, edge = 0.0;
    std::vector<MeshPtr> meshes = {generate_structured_square(5), generate_l_shape(3), generate_perforated_square(8)};
    meshes.push_back(refine_nvb_detailed(*meshes[1], std::vector<int>{0, 4, 9}).mesh);
    meshes.push_back(uniform_refine(*meshes[2]));
    for (const auto& mesh : meshes) iso = std::max(iso, oracle::affine_defect(*constant_isotropic(mesh, 1.3)));
    for (int n : {2, 4, 8, 16, 32})
      edge = std::max(edge, oracle::affine_defect(*edge_stabilization(generate_structured_square(n),
                                                                      edge_length_weight())));
    return std::pair{iso <= 1e-12 && edge <= 1e-12,
                     fmt("isotropic %.2e, edge on structured squares %.2e (both <= 1e-12)", iso, edge)};
  });
}

} // namespace

int main() {
  std::printf("running experiments (max_dofs 20000)\n");
  const Run e1u = run("experiment1", RefinementMode::Uniform);
  const Run e1a = run("experiment1", RefinementMode::Adaptive);
  const Run e2u = run("experiment2", RefinementMode::Uniform);
  const Run e2a = run("experiment2", RefinementMode::Adaptive);
  const Run e3u = run("experiment3", RefinementMode::Uniform);
  const Run e3a = run("experiment3", RefinementMode::Adaptive);

  {
    const double sh = slope(e1u, RecordField::H1Error), se = slope(e1u, RecordField::Eta);
    const bool ok = e1u.error.empty() && e1u.records.back().num_dofs >= 20000 && in(sh, -0.6, -0.4) &&
                    in(se, -0.6, -0.4) && e1u.seconds < 120.0;
    report(ok, "1 experiment 1 uniform rates",
           fmt("slope(H1 error) = %.3f, slope(eta) = %.3f, target -0.5 +- 0.1, final N = %ld, %.1f s < 120 s", sh,
               se, e1u.records.empty() ? 0L : e1u.records.back().num_dofs, e1u.seconds));
  }
  {
    double lo = 1e300, hi = 0.0;
    const std::size_t n = e1u.records.size();
    for (std::size_t k = n >= 4 ? n - 4 : 0; k < n; ++k) {
      const double eff = e1u.records[k].eta / *e1u.records[k].h1_error;
      lo = std::min(lo, eff);
      hi = std::max(hi, eff);
    }
    report(n >= 4 && lo > 0.0 && hi / lo <= 3.0, "2 experiment 1 effectivity",
           fmt("eta / H1 error in [%.3f, %.3f] over the last 4 levels, max/min = %.3f <= 3", lo, hi, hi / lo));
  }
  {
    const double sa = slope(e2a, RecordField::Eta), su = slope(e2u, RecordField::Eta);
    const bool ok = e2a.error.empty() && e2u.error.empty() && in(sa, -0.6, -0.4) && in(su, -0.40, -0.26) &&
                    e2a.seconds < 300.0 && e2u.seconds < 300.0;
    report(ok, "3 experiment 2 adaptive vs uniform",
           fmt("adaptive slope %.3f (target -0.5 +- 0.1), uniform slope %.3f (target -0.33 +- 0.07), %.1f s / %.1f s",
               sa, su, e2a.seconds, e2u.seconds));
  }
  {
    const double sa = slope(e3a, RecordField::Eta), su = slope(e3u, RecordField::Eta);
    const bool ok =
        e3a.error.empty() && e3u.error.empty() && in(sa, -0.6, -0.4) && in(su, -0.55, -0.30) && sa < su;
    report(ok, "4 experiment 3 adaptive vs uniform",
           fmt("adaptive slope %.3f (target -0.5 +- 0.1), uniform slope %.3f (in [-0.55, -0.30]), adaptive steeper", sa,
               su));
  }
  {
    std::string detail;
    bool ok = true;
    for (const auto& [name, r] : {std::pair<const char*, const Run*>{"1u", &e1u}, {"1a", &e1a}, {"3u", &e3u},
                                  {"3a", &e3a}}) {
      double lo = 0, hi = 0;
      const double v = ratio_variation(*r, lo, hi);
      ok = ok && r->error.empty() && v <= 3.0 && std::isfinite(hi);
      detail += fmt("%s: ratios in [%.3f, %.3f], max step factor %.3f; ", name, lo, hi, v);
    }
    report(ok, "5 stabilization estimator bounded by jumps", detail + "limit 3");
  }
  {
    double worst = 0.0;
    std::string detail;
    for (const auto& [name, r] : {std::pair<const char*, const Run*>{"1u", &e1u}, {"1a", &e1a}, {"2u", &e2u},
                                  {"2a", &e2a}, {"3u", &e3u}, {"3a", &e3a}}) {
      double lo = 0.0;
      int xz = 0;
      for (const auto& rec : r->records) {
        lo = std::min(lo, rec.min_m);
        xz += rec.xu_zikatanov ? 1 : 0;
      }
      worst = std::min(worst, lo);
      detail += fmt("%s: min m %.2e, angle condition on %d of %zu meshes; ", name, lo, xz, r->records.size());
    }
    report(worst >= -1e-12, "6 nonnegative density", detail + fmt("limit -1e-12, worst %.3e", worst));
  }

  oracle_suites();

  {
    double early = 0.0, late = 0.0;
    for (std::size_t k = 0; k < e2u.records.size(); ++k)
      (k < 3 ? early : late) = std::max(k < 3 ? early : late, e2u.records[k].max_abs_m);
    report(e2u.error.empty() && late <= 1.1 * early, "witness: density stays bounded (experiment 2 uniform)",
           fmt("max |m| after level 2 = %.4f <= 1.1 x %.4f", late, early));
  }
  {
    bool ok = e2a.records.size() > 10;
    double dist = 0.0;
    if (ok) {
      dist = e2a.records[10].min_diameter_centroid.norm();
      ok = dist <= 0.1;
    }
    report(ok, "witness: refinement concentrates at the re-entrant corner",
           fmt("smallest element at level 10 has centroid %.4f from the origin (<= 0.1)", dist));
  }
  {
    const Run again = run("experiment2", RefinementMode::Adaptive, 3000);
    const Run first = run("experiment2", RefinementMode::Adaptive, 3000);
    const bool ok = !first.records.empty() && csv_of(first.records) == csv_of(again.records);
    report(ok, "witness: determinism", ok ? "two identical runs give identical CSV output" : "CSV output differs");
  }

  std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
