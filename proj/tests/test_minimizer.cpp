#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "selcov/minimizer.hpp"

using namespace selcov;

namespace {

Scenario make(int m, double rho, double nominal = 0.95, double size = 0.1) {
  return {DegreesOfFreedom(m), rho, nominal, size};
}

const double kTol = QuadratureConfig{}.abs_tol;

}  // namespace

TEST_CASE("MinSearchConfig validation") {
  MinSearchConfig c;
  CHECK_NOTHROW(c.validate());
  c.coarse_step = 20.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.refine_tol = 0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.gamma_max = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("inclusive grid") {
  const auto g = inclusive_grid(0.0, 1.0, 0.3);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == 0.0);
  CHECK(g[3] == doctest::Approx(0.9));
  CHECK(g.back() == 1.0);
  CHECK(inclusive_grid(0.0, 1.0, 0.25).size() == 5);
  CHECK(inclusive_grid(2.0, 2.0, 0.1) == std::vector<double>{2.0});
  CHECK_THROWS_AS(inclusive_grid(0.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(inclusive_grid(1.0, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(inclusive_grid(0.0, 10.0, 1e-6), std::invalid_argument);
}

TEST_CASE("rho = 0, m = 40 stays close to nominal") {
  const MinResult r = min_coverage(make(40, 0.0));
  CHECK(r.min_coverage >= 0.945);
  CHECK(r.gamma_star >= 0.0);
  CHECK_FALSE(r.at_gamma_max);
}

TEST_CASE("dense brute-force grid agrees with the search") {
  const Scenario s = make(40, 0.8);
  const MinResult r = min_coverage(s);
  const CoverageModel model(s);
  const auto values = coverage_grid(model, 15.0, 0.005);
  const auto it = std::min_element(values.begin(), values.end());
  const std::size_t i = static_cast<std::size_t>(it - values.begin());
  REQUIRE(i > 0);
  REQUIRE(i + 1 < values.size());
  // Parabolic vertex through the three smallest neighbouring grid values.
  const double h = 0.005;
  const double f0 = values[i - 1], f1 = values[i], f2 = values[i + 1];
  const double shift = 0.5 * h * (f0 - f2) / (f0 - 2.0 * f1 + f2);
  const double g_brute = i * h + shift;
  CHECK(std::abs(r.gamma_star - g_brute) <= 1e-3);
  CHECK(std::abs(r.min_coverage - *it) <= 2e-6);
  CHECK(r.min_coverage <= *it + 2.0 * kTol);
}

TEST_CASE("search over [-gamma_max, gamma_max] gives the same minimum") {
  for (double rho : {0.3, 0.8}) {
    const Scenario s = make(10, rho, 0.9, 0.05);
    const MinResult r = min_coverage(s);
    const CoverageModel model(s);
    double lowest = 1.0;
    for (double g : inclusive_grid(-15.0, 15.0, 0.05)) lowest = std::min(lowest, model.coverage(g));
    CHECK(r.min_coverage <= lowest + 2.0 * kTol);
    CHECK(lowest - r.min_coverage <= 1e-4);
  }
}

TEST_CASE("the minimum never exceeds any coarse grid value or the range ends") {
  const Scenario s = make(5, 0.6, 0.98, 0.02);
  const MinResult r = min_coverage(s);
  const CoverageModel model(s);
  const auto values = coverage_grid(model, 15.0, 0.05);
  for (double v : values) CHECK(r.min_coverage <= v + 2.0 * kTol);
  CHECK(r.min_coverage <= model.coverage(0.0) + 2.0 * kTol);
  CHECK(r.min_coverage <= model.coverage(15.0) + 2.0 * kTol);
}

TEST_CASE("refinement trace only improves") {
  const MinResult r = min_coverage(make(40, 0.6));
  REQUIRE_FALSE(r.refine_trace.empty());
  for (std::size_t k = 1; k < r.refine_trace.size(); ++k) {
    CHECK(r.refine_trace[k] <= r.refine_trace[k - 1]);
  }
  CHECK(r.refine_trace.back() == r.min_coverage);
}

TEST_CASE("sign of rho does not matter") {
  for (int m : {2, 40}) {
    const MinResult a = min_coverage(make(m, 0.6, 0.95, 0.05));
    const MinResult b = min_coverage(make(m, -0.6, 0.95, 0.05));
    CHECK(std::abs(a.min_coverage - b.min_coverage) <= 2.0 * kTol);
    CHECK(a.gamma_star == b.gamma_star);
    CHECK(std::abs(a.breakdown_at_min.d_wm - b.breakdown_at_min.d_wm) <= 2.0 * kTol);
    CHECK(std::abs(a.breakdown_at_min.d_rd - b.breakdown_at_min.d_rd) <= 2.0 * kTol);
  }
}

TEST_CASE("flags a minimum at the end of a short search range") {
  MinSearchConfig c;
  c.gamma_max = 1.0;
  const MinResult r = min_coverage(make(40, 0.8), c);
  CHECK(r.at_gamma_max);
  CHECK(r.gamma_star <= 1.0);
}

TEST_CASE("min_table") {
  CHECK(min_table({}).empty());

  std::vector<Scenario> rows{make(40, 0.6), make(10, 0.3, 0.9, 0.02)};
  QuadratureConfig tight;
  tight.abs_tol = 1e-15;
  tight.rel_tol = 1e-15;
  tight.max_subdivisions = 2;
  const auto failing = min_table(rows, {}, tight);
  REQUIRE(failing.size() == 2);
  CHECK_FALSE(failing[0].result.has_value());
  CHECK_FALSE(failing[0].error.empty());

  const auto table = min_table(rows);
  REQUIRE(table.size() == 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(table[i].result.has_value());
    CHECK(table[i].scenario.m.value() == rows[i].m.value());
    const auto& b = table[i].result->breakdown_at_min;
    CHECK(std::abs(rows[i].nominal_coverage - b.d_wm - b.d_rd - table[i].result->min_coverage) <=
          1e-9);
  }
  CHECK(table[0].result->min_coverage == min_coverage(rows[0]).min_coverage);
}

TEST_CASE("default grid layout") {
  const auto grid = default_min_grid();
  REQUIRE(grid.size() == 216);
  CHECK(grid.front().m.value() == 1);
  CHECK(grid.back().m.value() == 100);
  CHECK(grid.back().rho == 0.8);
  CHECK(grid[1].test_size == 0.05);
}

TEST_CASE("wrong-model deficit dominates well below nominal for m >= 5, |rho| >= 0.6") {
  std::vector<Scenario> rows;
  for (const Scenario& s : default_min_grid()) {
    if (s.m.value() >= 5 && s.rho >= 0.6) rows.push_back(s);
  }
  const auto table = min_table(rows);
  int checked = 0;
  for (const auto& row : table) {
    REQUIRE(row.result.has_value());
    if (row.result->min_coverage < row.scenario.nominal_coverage - 0.02) {
      ++checked;
      CAPTURE(row.scenario.m.value());
      CAPTURE(row.scenario.rho);
      CAPTURE(row.scenario.nominal_coverage);
      CAPTURE(row.scenario.test_size);
      CHECK(row.result->breakdown_at_min.d_wm > row.result->breakdown_at_min.d_rd);
    }
  }
  CHECK(checked > 50);
}
