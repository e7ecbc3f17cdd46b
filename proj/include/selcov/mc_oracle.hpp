#pragma once

// Monte Carlo estimates of the coverage probabilities, either from the
// reduced (G, H, W) representation or from a full linear regression with a
// genie replicate of the response.

#include <array>
#include <cstdint>

#include <Eigen/Dense>

#include "selcov/coverage.hpp"
#include "selcov/random.hpp"

namespace selcov {

struct MonteCarloConfig {
  std::uint64_t replications = 10'000'000;
  std::uint64_t seed = 42;
  int stream_count = 1;  // worker threads; does not affect the output

  static constexpr std::uint64_t kMinReplications = 10'000;
  /// Rejects fewer than kMinReplications replications or stream_count < 1.
  void validate() const;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct MCEstimates {
  std::uint64_t replications = 0;
  Estimate p_accept;
  Estimate p_J;
  Estimate p_J_and_accept;
  Estimate p_I_and_accept;
  Estimate coverage_K;
  Estimate coverage_K_star;
  Estimate d_wm;
  Estimate d_rd;
  Estimate p_I;

  // Moments of the first draw, for sanity checks on the generator.
  double mean_g = 0.0;
  double mean_h = 0.0;
  double corr_gh = 0.0;
  double corr_zh = 0.0;
};

/// The eight estimates that have a quadrature counterpart.
struct ValidatedField {
  const char* name;
  Estimate MCEstimates::*mc;
  double DeficitBreakdown::*quadrature;
};

inline constexpr std::array<ValidatedField, 8> kValidatedFields{{
    {"p_accept", &MCEstimates::p_accept, &DeficitBreakdown::p_accept},
    {"p_J", &MCEstimates::p_J, &DeficitBreakdown::p_J},
    {"p_J_and_accept", &MCEstimates::p_J_and_accept, &DeficitBreakdown::p_J_and_accept},
    {"p_I_and_accept", &MCEstimates::p_I_and_accept, &DeficitBreakdown::p_I_and_accept},
    {"coverage_K", &MCEstimates::coverage_K, &DeficitBreakdown::coverage_K},
    {"coverage_K_star", &MCEstimates::coverage_K_star, &DeficitBreakdown::coverage_K_star},
    {"d_wm", &MCEstimates::d_wm, &DeficitBreakdown::d_wm},
    {"d_rd", &MCEstimates::d_rd, &DeficitBreakdown::d_rd},
}};

/// One realisation of the reduced representation.
struct ReducedDraw {
  double g;  // (theta_hat - theta) / (sigma v_theta^(1/2))
  double h;  // tau_hat / (sigma v_tau^(1/2))
  double w;  // sigma_hat / sigma
  double z;  // (g - rho (h - gamma)) / (1 - rho^2)^(1/2)
};

ReducedDraw draw_reduced(ReplicationRng& rng, DegreesOfFreedom m, double rho, double gamma);

MCEstimates simulate_reduced(const Scenario& scenario, double gamma,
                             const MonteCarloConfig& config = {});

/// Full-model ingredients: Y = X beta + eps, eps ~ N(0, sigma^2 I),
/// theta = a' beta, tau = c' beta - r.
struct RegressionSpec {
  Eigen::MatrixXd X;
  Eigen::VectorXd beta;
  double sigma = 1.0;
  Eigen::VectorXd a;
  Eigen::VectorXd c;
  double r = 0.0;
};

/// Quantities implied by a RegressionSpec.
struct RegressionDerived {
  int m = 0;
  double v_theta = 0.0;
  double v_tau = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
  double theta = 0.0;
  double tau = 0.0;
};

/// Rejects n <= p, rank-deficient X, a = 0 and collinear (a, c).
RegressionDerived derive(const RegressionSpec& spec);

struct RegressionEstimates {
  MCEstimates estimates;
  RegressionDerived derived;
};

RegressionEstimates simulate_regression(const RegressionSpec& spec, double nominal_coverage,
                                        double test_size, const MonteCarloConfig& config = {});

/// Test fixtures with n = 45, p = 5 (intercept plus four centred
/// covariates) tuned to the requested (gamma, rho). Variants 0 and 1 use
/// different designs, contrasts, coefficients and error scales.
RegressionSpec regression_fixture(int variant, double gamma = 2.0, double rho = 0.6);

}  // namespace selcov
