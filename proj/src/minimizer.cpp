#include "selcov/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "selcov/parallel.hpp"

namespace selcov {

namespace {

// 1 / golden ratio
constexpr double kInvPhi = 0.6180339887498948482;

struct Best {
  double gamma;
  double value;
};

}  // namespace

void MinSearchConfig::validate() const {
  if (!(gamma_max > 0.0)) throw std::invalid_argument("gamma_max must be > 0");
  if (!(coarse_step > 0.0 && coarse_step < gamma_max)) {
    throw std::invalid_argument("coarse_step must lie in (0, gamma_max)");
  }
  if (!(refine_tol > 0.0 && refine_tol < coarse_step)) {
    throw std::invalid_argument("refine_tol must lie in (0, coarse_step)");
  }
}

std::vector<double> inclusive_grid(double gamma_min, double gamma_max, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be > 0");
  if (!(gamma_min <= gamma_max)) throw std::invalid_argument("grid needs gamma_min <= gamma_max");
  const double span = gamma_max - gamma_min;
  if (span / step > 1e6) throw std::invalid_argument("grid would exceed 1e6 steps");
  const auto steps = static_cast<std::size_t>(std::floor(span / step + 1e-9));
  std::vector<double> grid;
  grid.reserve(steps + 2);
  for (std::size_t i = 0; i <= steps; ++i) {
    grid.push_back(std::min(gamma_min + static_cast<double>(i) * step, gamma_max));
  }
  if (gamma_max - grid.back() > 1e-12 * std::max(1.0, std::abs(gamma_max))) {
    grid.push_back(gamma_max);
  }
  return grid;
}

std::vector<double> coverage_grid(const CoverageModel& model, double gamma_max, double step,
                                  unsigned threads) {
  const std::vector<double> grid = inclusive_grid(0.0, gamma_max, step);
  std::vector<double> values(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) { values[i] = model.coverage(grid[i]); });
  return values;
}

MinResult min_coverage(const Scenario& scenario, const MinSearchConfig& search,
                       const QuadratureConfig& quadrature) {
  scenario.validate();
  search.validate();
  quadrature.validate();

  Scenario folded = scenario;
  folded.rho = std::abs(scenario.rho);
  const CoverageModel model(folded, quadrature);

  const std::vector<double> grid = inclusive_grid(0.0, search.gamma_max, search.coarse_step);
  const std::vector<double> values =
      coverage_grid(model, search.gamma_max, search.coarse_step, search.threads);

  const auto lowest = std::min_element(values.begin(), values.end());
  const std::size_t last = grid.size() - 1;
  const double tie = 2.0 * quadrature.abs_tol;

  // Golden-section search inside [grid[i-1], grid[i+1]], starting from the
  // grid point itself. Records every strict improvement.
  auto refine = [&](std::size_t i, std::vector<double>& trace) {
    double a = grid[i == 0 ? 0 : i - 1];
    double b = grid[std::min(i + 1, last)];
    Best cell{grid[i], values[i]};
    trace.assign(1, cell.value);
    auto consider = [&](double g, double f) {
      if (f < cell.value) {
        cell = {g, f};
        trace.push_back(f);
      }
    };
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = model.coverage(c);
    double fd = model.coverage(d);
    consider(c, fc);
    consider(d, fd);
    while (b - a > search.refine_tol) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - kInvPhi * (b - a);
        fc = model.coverage(c);
        consider(c, fc);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + kInvPhi * (b - a);
        fd = model.coverage(d);
        consider(d, fd);
      }
    }
    return cell;
  };

  // Every grid point within the tie band of the global minimum gets refined;
  // a cell at larger gamma must win by more than the band.
  MinResult result;
  std::optional<Best> best;
  std::vector<double> trace;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (values[i] > *lowest + tie) continue;
    const Best cell = refine(i, trace);
    if (!best || cell.value < best->value - tie) {
      best = cell;
      result.refine_trace = trace;
    }
  }

  result.gamma_star = best->gamma;
  result.breakdown_at_min = CoverageModel(scenario, quadrature).deficits(best->gamma);
  result.min_coverage = result.breakdown_at_min.coverage_K;
  result.at_gamma_max = best->gamma >= search.gamma_max - search.coarse_step;
  return result;
}

std::vector<MinTableRow> min_table(std::span<const Scenario> scenarios,
                                   const MinSearchConfig& search,
                                   const QuadratureConfig& quadrature) {
  std::vector<MinTableRow> rows(scenarios.size());
  MinSearchConfig per_row = search;
  per_row.threads = 1;  // parallelism goes across rows
  parallel_for(scenarios.size(), search.threads, [&](std::size_t i) {
    rows[i].scenario = scenarios[i];
    try {
      rows[i].result = min_coverage(scenarios[i], per_row, quadrature);
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  });
  return rows;
}

std::vector<Scenario> default_min_grid() {
  std::vector<Scenario> grid;
  for (int m : {1, 2, 5, 10, 40, 100}) {
    for (double rho : {0.0, 0.3, 0.6, 0.8}) {
      for (double nominal : {0.9, 0.95, 0.98}) {
        for (double size : {0.02, 0.05, 0.1}) {
          grid.push_back({DegreesOfFreedom(m), rho, nominal, size});
        }
      }
    }
  }
  return grid;
}

}  // namespace selcov
