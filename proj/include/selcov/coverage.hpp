#pragma once

// Coverage of the confidence interval built after a preliminary two-sided
// t test of tau = 0, and its split into the wrong-model deficit D_wm and
// the data-reuse deficit D_rd.

#include "selcov/distributions.hpp"

namespace selcov {

/// The four known quantities that, together with gamma, fix every
/// probability in the problem.
struct Scenario {
  DegreesOfFreedom m{40};
  double rho = 0.0;               // corr(theta_hat, tau_hat)
  double nominal_coverage = 0.95; // 1 - alpha
  double test_size = 0.1;         // size of the preliminary t test

  /// Rejects |rho| >= 1, and coverage or size within 1e-12 of 0 or 1.
  void validate() const;
};

struct DeficitBreakdown {
  double gamma = 0.0;
  double p_accept = 0.0;        // P(|T| < t_{m, 1 - test_size/2})
  double p_J = 0.0;             // P(theta in J)
  double p_J_and_accept = 0.0;
  double p_I_and_accept = 0.0;
  double d_wm = 0.0;
  double d_rd = 0.0;
  double coverage_K = 0.0;
  double coverage_K_star = 0.0;
};

struct PsiArgs {
  double x;  // value of W, > 0
  double u;  // value of H / W
};

double g1(PsiArgs args, const Scenario& scenario, double gamma);
double g2(PsiArgs args, const Scenario& scenario, double gamma);
/// Phi(g2) - Phi(g1): conditional probability that J covers theta.
double psi(PsiArgs args, const Scenario& scenario, double gamma);

/// Precomputes the quantiles and the W axis for one scenario; every member
/// is a pure function of gamma.
class CoverageModel {
 public:
  explicit CoverageModel(const Scenario& scenario, const QuadratureConfig& config = {});

  const Scenario& scenario() const { return scenario_; }
  const QuadratureConfig& config() const { return config_; }

  double interval_quantile() const { return t_full_; }   // t_{m, 1 - alpha/2}
  double submodel_quantile() const { return t_sub_; }    // t_{m+1, 1 - alpha/2}
  double test_quantile() const { return t_test_; }       // t_{m, 1 - test_size/2}

  double psi(double x, double u, double gamma) const;

  double prob_accept(double gamma) const;
  double prob_J(double gamma) const;
  double prob_J_and_accept(double gamma) const;
  double prob_I_and_accept(double gamma) const;

  /// (1 - alpha) + P(J, accept) - P(I, accept); skips P(J) and P(accept).
  double coverage(double gamma) const;
  DeficitBreakdown deficits(double gamma) const;

 private:
  Scenario scenario_;
  QuadratureConfig config_;
  ScaledChiAxis axis_;
  double t_full_;
  double t_sub_;
  double t_test_;
  double shift_scale_;  // rho / sqrt(1 - rho^2)
};

double prob_accept(const Scenario& scenario, double gamma, const QuadratureConfig& config = {});
double prob_J(const Scenario& scenario, double gamma, const QuadratureConfig& config = {});
double prob_J_and_accept(const Scenario& scenario, double gamma,
                         const QuadratureConfig& config = {});
double prob_I_and_accept(const Scenario& scenario, double gamma,
                         const QuadratureConfig& config = {});
DeficitBreakdown deficits(const Scenario& scenario, double gamma,
                          const QuadratureConfig& config = {});

}  // namespace selcov
