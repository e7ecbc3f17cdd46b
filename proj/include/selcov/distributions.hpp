#pragma once

// Distribution primitives for the reduced (G, H, W) representation:
// standard normal, Student t quantiles, the law of W = sqrt(chi2_m / m),
// bivariate normal rectangles and their chi-scaled mixtures (the
// Kshirsagar bivariate noncentral t).

#include <span>
#include <vector>

#include "selcov/quadrature.hpp"

namespace selcov {

/// Residual degrees of freedom m = n - p (m >= 1).
class DegreesOfFreedom {
 public:
  explicit DegreesOfFreedom(int m);
  int value() const { return m_; }
  friend bool operator==(DegreesOfFreedom, DegreesOfFreedom) = default;

 private:
  int m_;
};

/// Error budget and truncation settings shared by all integrals.
struct QuadratureConfig {
  double abs_tol = 1e-9;
  double rel_tol = 1e-8;
  double w_trunc_prob = 1e-10;      // tail mass dropped at each end of the W axis
  double h_trunc_halfwidth = 8.5;   // in standard deviations
  int max_subdivisions = 200;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
  Tolerance outer() const { return {abs_tol, rel_tol, max_subdivisions}; }
  /// Tolerance for integrals nested inside a W-axis integral.
  Tolerance inner() const {
    return {0.1 * abs_tol, 0.1 * rel_tol, max_subdivisions};
  }
};

double std_normal_pdf(double x);
double std_normal_cdf(double x);
/// Phi(hi) - Phi(lo), evaluated in the tail that avoids cancellation.
double std_normal_interval(double lo, double hi);

double central_t_cdf(DegreesOfFreedom m, double t);
/// t_{m,a}: P(T <= t_{m,a}) = a for T ~ t_m. Rejects a outside (0, 1).
double t_quantile(DegreesOfFreedom m, double a);

/// Density of W = sqrt(R / m), R ~ chi2_m. Zero for w <= 0.
double scaled_chi_pdf(double w, DegreesOfFreedom m);
double scaled_chi_cdf(double w, DegreesOfFreedom m);
/// Rejects p outside (0, 1).
double scaled_chi_quantile(double p, DegreesOfFreedom m);

/// P(x_lo <= X <= x_hi, y_lo <= Y <= y_hi) for a unit-variance bivariate
/// normal with the given means and correlation. Bounds may be infinite.
/// Rejects |corr| >= 1 and reversed bounds.
double bvn_rect(double x_lo, double x_hi, double y_lo, double y_hi,
                double mean_x, double mean_y, double corr);

/// Same as bvn_rect with an explicit error target, for use inside other
/// integrals. `halfwidth` truncates the X axis to mean_x +- halfwidth.
double bvn_rect(double x_lo, double x_hi, double y_lo, double y_hi,
                double mean_x, double mean_y, double corr,
                const Tolerance& tol, double halfwidth);

/// The W axis truncated to [q(p), q(1 - p)], with the dropped tails
/// accounted for by the integrand's value at each cut point.
class ScaledChiAxis {
 public:
  ScaledChiAxis(DegreesOfFreedom m, const QuadratureConfig& config);

  DegreesOfFreedom dof() const { return m_; }
  double lower() const { return lo_; }
  double upper() const { return hi_; }

  /// E[f(W)] where f is a bounded function of w. `extra_breaks` are
  /// locations where f changes quickly; points outside the axis are ignored.
  template <class F>
  double expectation(F&& f, std::span<const double> extra_breaks = {}) const {
    const auto breaks = merge_breaks(extra_breaks);
    const DegreesOfFreedom m = m_;
    auto weighted = [&f, m](double w) { return f(w) * scaled_chi_pdf(w, m); };
    const double body = integrate(weighted, std::span<const double>(breaks), tol_).value;
    return body + tail_ * (f(lo_) + f(hi_));
  }

 private:
  std::vector<double> merge_breaks(std::span<const double> extra) const;

  DegreesOfFreedom m_;
  Tolerance tol_;
  double lo_;
  double hi_;
  double tail_;
  std::vector<double> breaks_;
};

/// P(T <= t) for T ~ noncentral t with m degrees of freedom and
/// noncentrality gamma, as E[Phi(t W - gamma)].
double noncentral_t_cdf(double t, DegreesOfFreedom m, double gamma,
                        const QuadratureConfig& config = {});

/// P(g_lo <= G/W <= g_hi, h_lo <= H/W <= h_hi) where (G, H) is bivariate
/// normal with means (0, gamma), unit variances and correlation rho, and W
/// is independent of (G, H). Rejects |rho| >= 1.
double bvnt_rect(double g_lo, double g_hi, double h_lo, double h_hi,
                 DegreesOfFreedom m, double rho, double gamma,
                 const QuadratureConfig& config = {});

/// As above, reusing a precomputed W axis.
double bvnt_rect(double g_lo, double g_hi, double h_lo, double h_hi,
                 const ScaledChiAxis& axis, double rho, double gamma,
                 const QuadratureConfig& config);

}  // namespace selcov
