#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selcov/coverage.hpp"

namespace selcov {

struct MinSearchConfig {
  double gamma_max = 15.0;
  double coarse_step = 0.05;
  double refine_tol = 1e-4;  // on gamma
  unsigned threads = 0;      // 0: hardware concurrency

  void validate() const;
};

struct MinResult {
  double gamma_star = 0.0;
  double min_coverage = 0.0;
  DeficitBreakdown breakdown_at_min;
  /// The minimising gamma sits on the upper end of the search range.
  bool at_gamma_max = false;
  /// Best coverage after each refinement step, starting from the coarse grid.
  std::vector<double> refine_trace;
};

/// min over gamma of P(theta in K). Coverage is even in gamma and rho, so
/// the search runs over gamma in [0, gamma_max] with |rho|; the returned
/// breakdown is evaluated at the caller's rho.
MinResult min_coverage(const Scenario& scenario, const MinSearchConfig& search = {},
                       const QuadratureConfig& quadrature = {});

/// Coverage on the inclusive grid {0, step, 2 step, ..., gamma_max}.
std::vector<double> coverage_grid(const CoverageModel& model, double gamma_max, double step,
                                  unsigned threads = 0);

/// Grid points 0, step, ..., with the last point clamped to gamma_max.
std::vector<double> inclusive_grid(double gamma_min, double gamma_max, double step);

struct MinTableRow {
  Scenario scenario;
  std::optional<MinResult> result;
  std::string error;  // set when result is empty
};

/// One row per scenario, in input order. A failing scenario records its
/// error and leaves the other rows untouched.
std::vector<MinTableRow> min_table(std::span<const Scenario> scenarios,
                                   const MinSearchConfig& search = {},
                                   const QuadratureConfig& quadrature = {});

/// The 216 scenarios m x rho x (1 - alpha) x test size used for the
/// minimum-coverage study.
std::vector<Scenario> default_min_grid();

}  // namespace selcov
