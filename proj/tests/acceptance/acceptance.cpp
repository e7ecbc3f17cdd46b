// Acceptance checks. Usage: selcov_acceptance [all | 1..9]
// Prints one PASS/FAIL line per criterion; exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "selcov/coverage.hpp"
#include "selcov/mc_oracle.hpp"
#include "selcov/minimizer.hpp"
#include "selcov/parallel.hpp"

using namespace selcov;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const int kGridM[] = {1, 2, 5, 10, 40, 100};
const double kGridRho[] = {0.0, 0.3, 0.6, 0.8};
const double kGridNominal[] = {0.9, 0.95, 0.98};
const double kGridSize[] = {0.02, 0.05, 0.1};

Outcome decomposition_identity() {
  std::mt19937_64 gen(20240501);
  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Point {
    Scenario s;
    double gamma;
  };
  std::vector<Point> points;
  for (int i = 0; i < 500; ++i) {
    Scenario s{DegreesOfFreedom(kGridM[pick(gen)]), -0.8 + 1.6 * unit(gen),
               0.9 + 0.08 * unit(gen), 0.02 + 0.08 * unit(gen)};
    points.push_back({s, -15.0 + 30.0 * unit(gen)});
  }
  std::vector<double> err(points.size());
  parallel_for(points.size(), 0, [&](std::size_t i) {
    const DeficitBreakdown d = deficits(points[i].s, points[i].gamma);
    err[i] = std::abs(points[i].s.nominal_coverage - d.d_wm - d.d_rd - d.coverage_K);
  });
  const double worst = *std::max_element(err.begin(), err.end());
  return {worst <= 1e-9, fmt("500 points, max |(1-alpha) - d_wm - d_rd - coverage_K| = %.3g", worst)};
}

Outcome quadrature_vs_monte_carlo() {
  MonteCarloConfig mc;
  mc.replications = 10'000'000;
  mc.seed = 42;
  mc.stream_count = static_cast<int>(default_thread_count());
  double worst_z = 0.0;
  std::string worst;
  int failures = 0;
  for (double rho : {0.3, 0.6, 0.8}) {
    for (double gamma : {0.0, 1.0, 2.0, 4.0}) {
      const Scenario s{DegreesOfFreedom(40), rho, 0.95, 0.1};
      const DeficitBreakdown q = deficits(s, gamma);
      const MCEstimates e = simulate_reduced(s, gamma, mc);
      for (const auto& f : kValidatedFields) {
        const Estimate est = e.*f.mc;
        const double z = (est.value - q.*f.quadrature) / est.se;
        if (std::abs(z) > 4.0) ++failures;
        if (std::abs(z) > std::abs(worst_z)) {
          worst_z = z;
          worst = std::string(f.name) + fmt(" at rho=%g gamma=%g", rho, gamma);
        }
      }
    }
  }
  return {failures == 0, fmt("12 points x 8 fields at N=1e7, %g beyond 4 SE, max |z| = %.2f (",
                             failures, std::abs(worst_z)) + worst + ")"};
}

Outcome evenness() {
  const double tol = 2.0 * QuadratureConfig{}.abs_tol;
  double worst = 0.0;
  for (int m : {1, 10, 40}) {
    for (double rho : {0.0, 0.3, 0.6, 0.8}) {
      const CoverageModel pos({DegreesOfFreedom(m), rho, 0.95, 0.05});
      const CoverageModel neg({DegreesOfFreedom(m), -rho, 0.95, 0.05});
      for (double g : {0.5, 1.0, 2.0, 4.0}) {
        const DeficitBreakdown a = pos.deficits(g);
        const DeficitBreakdown b = pos.deficits(-g);
        const DeficitBreakdown c = neg.deficits(g);
        for (auto field : {&DeficitBreakdown::p_accept, &DeficitBreakdown::p_J,
                           &DeficitBreakdown::p_J_and_accept, &DeficitBreakdown::p_I_and_accept,
                           &DeficitBreakdown::d_wm, &DeficitBreakdown::d_rd,
                           &DeficitBreakdown::coverage_K, &DeficitBreakdown::coverage_K_star}) {
          worst = std::max({worst, std::abs(a.*field - b.*field), std::abs(a.*field - c.*field)});
        }
      }
    }
  }
  return {worst <= tol, fmt("3x4x4 lattice, max field difference = %.3g (limit %.3g)", worst, tol)};
}

Outcome gamma_zero_exactness() {
  const auto grid = default_min_grid();
  std::vector<double> wm(grid.size());
  parallel_for(grid.size(), 0, [&](std::size_t i) {
    wm[i] = std::abs(CoverageModel(grid[i]).deficits(0.0).d_wm);
  });
  const double worst = *std::max_element(wm.begin(), wm.end());
  return {worst <= 2e-9, fmt("216 scenarios, max |d_wm(0)| = %.3g", worst)};
}

Outcome rho_zero_flatness() {
  const CoverageModel model({DegreesOfFreedom(40), 0.0, 0.95, 0.1});
  const auto grid = inclusive_grid(0.0, 10.0, 0.1);
  double wm = 0.0, rd = 0.0;
  for (double g : grid) {
    const DeficitBreakdown d = model.deficits(g);
    wm = std::max(wm, std::abs(d.d_wm));
    rd = std::max(rd, std::abs(d.d_rd));
  }
  return {wm <= 0.005 && rd <= 0.005, fmt("max |d_wm| = %.5f, max |d_rd| = %.5f", wm, rd)};
}

Outcome sweep_properties() {
  bool pass = true;
  std::string detail;
  for (double rho : {0.3, 0.6, 0.8}) {
    const CoverageModel model({DegreesOfFreedom(40), rho, 0.95, 0.1});
    const auto grid = inclusive_grid(0.0, 10.0, 0.1);
    std::vector<DeficitBreakdown> rows(grid.size());
    parallel_for(grid.size(), 0, [&](std::size_t i) { rows[i] = model.deficits(grid[i]); });
    double wm = -1.0, rd = -1.0;
    for (const auto& d : rows) {
      wm = std::max(wm, d.d_wm);
      rd = std::max(rd, d.d_rd);
    }
    const double end = rows.back().coverage_K;
    const bool dominance = rho < 0.5 || wm > rd;
    pass = pass && dominance && std::abs(end - 0.95) <= 1e-4;
    detail += fmt("rho=%g: max d_wm %.5f", rho, wm) + fmt(", max d_rd %.5f", rd) +
              fmt(", coverage(10) %.8f; ", end);
  }
  return {pass, detail};
}

Outcome dominance() {
  const auto grid = default_min_grid();
  const auto table = min_table(grid);
  int qualifying = 0;
  std::vector<std::string> violations;
  int errors = 0;
  for (const auto& row : table) {
    if (!row.result) {
      ++errors;
      continue;
    }
    const auto& r = *row.result;
    const Scenario& s = row.scenario;
    if (r.min_coverage < s.nominal_coverage - 0.02) {
      ++qualifying;
      if (!(r.breakdown_at_min.d_wm > r.breakdown_at_min.d_rd)) {
        violations.push_back(fmt("m=%g rho=%g ", s.m.value(), s.rho) +
                             fmt("1-a=%g size=%g ", s.nominal_coverage, s.test_size) +
                             fmt("min=%.4f d_wm=%.4f d_rd=%.4f", r.min_coverage,
                                 r.breakdown_at_min.d_wm, r.breakdown_at_min.d_rd));
      }
    }
  }
  std::string detail = fmt("%g of %g rows below nominal - 0.02 have d_wm <= d_rd", violations.size(),
                           qualifying);
  if (errors) detail += fmt(", %g rows failed", errors);
  for (const auto& v : violations) detail += "\n    " + v;
  return {violations.empty() && errors == 0, detail};
}

Outcome reduction_invariance() {
  MonteCarloConfig mc;
  mc.replications = 1'000'000;
  mc.seed = 2024;
  mc.stream_count = static_cast<int>(default_thread_count());
  const auto a = simulate_regression(regression_fixture(0), 0.95, 0.1, mc);
  mc.seed = 2025;
  const auto b = simulate_regression(regression_fixture(1), 0.95, 0.1, mc);
  const Scenario s{DegreesOfFreedom(a.derived.m), a.derived.rho, 0.95, 0.1};
  const DeficitBreakdown q = deficits(s, a.derived.gamma);

  const bool same_reduction = a.derived.m == b.derived.m &&
                              std::abs(a.derived.rho - b.derived.rho) <= 1e-12 &&
                              std::abs(a.derived.gamma - b.derived.gamma) <= 1e-12;
  double pair_z = 0.0, quad_z = 0.0;
  for (const auto& f : kValidatedFields) {
    const Estimate ea = a.estimates.*f.mc;
    const Estimate eb = b.estimates.*f.mc;
    pair_z = std::max(pair_z, std::abs(ea.value - eb.value) / std::hypot(ea.se, eb.se));
    quad_z = std::max({quad_z, std::abs(ea.value - q.*f.quadrature) / ea.se,
                       std::abs(eb.value - q.*f.quadrature) / eb.se});
  }
  return {same_reduction && pair_z <= 4.0 && quad_z <= 4.0,
          fmt("derived (gamma, rho, m) = (%.6f, %.6f, %g); ", a.derived.gamma, a.derived.rho,
              a.derived.m) +
              fmt("max joint |z| between fixtures %.2f, max |z| vs quadrature %.2f", pair_z, quad_z)};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "selcov_acceptance";
  fs::create_directories(dir);
  auto run_to_file = [&](std::vector<std::string> args, const std::string& name) {
    const fs::path path = dir / name;
    args.push_back("--out");
    args.push_back(path.string());
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    std::ifstream in(path, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    return std::pair{code, text.str()};
  };
  bool pass = true;
  int files = 0;
  for (const auto& [cmd, base] :
       std::vector<std::pair<std::vector<std::string>, std::string>>{
           {{"validate", "--seed", "42"}, "validate"},
           {{"sweep", "--m", "40", "--rho", "0.6", "--gamma-max", "10"}, "sweep"}}) {
    std::string reference;
    for (const char* streams : {"1", "1", "1", "4", "8"}) {
      auto args = cmd;
      args.push_back("--streams");
      args.push_back(streams);
      const auto [code, text] = run_to_file(args, base + "_" + std::to_string(files++));
      if (code != 0 || text.empty()) pass = false;
      if (reference.empty()) reference = text;
      if (text != reference) pass = false;
    }
  }
  return {pass, fmt("validate (N=1e7) and sweep outputs, 3 repeats + streams {4, 8}: %g files compared",
                    files)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

const std::vector<Criterion> kCriteria{
    {1, "decomposition identity", decomposition_identity},
    {2, "quadrature vs Monte Carlo", quadrature_vs_monte_carlo},
    {3, "evenness in gamma and rho", evenness},
    {4, "gamma = 0 exactness", gamma_zero_exactness},
    {5, "rho = 0 flatness", rho_zero_flatness},
    {6, "sweep properties", sweep_properties},
    {7, "wrong-model deficit dominates", dominance},
    {8, "reduction invariance", reduction_invariance},
    {9, "determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
  const std::string which = argc > 1 ? argv[1] : "all";
  bool all_pass = true;
  bool ran = false;
  for (const auto& c : kCriteria) {
    if (which != "all" && which != std::to_string(c.id)) continue;
    ran = true;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d (%s): %s [%.1f s] %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  if (!ran) {
    std::fprintf(stderr, "usage: %s [all | 1..9]\n", argv[0]);
    return 2;
  }
  return all_pass ? 0 : 1;
}
