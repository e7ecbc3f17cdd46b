#include "selcov/distributions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace selcov {

namespace {

void require_probability(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument(std::string(what) + ": probability must lie in (0, 1), got " +
                                std::to_string(p));
  }
}

}  // namespace

DegreesOfFreedom::DegreesOfFreedom(int m) : m_(m) {
  if (m < 1) {
    throw std::invalid_argument("degrees of freedom must be >= 1, got " + std::to_string(m));
  }
}

void QuadratureConfig::validate() const {
  if (!(abs_tol > 0.0)) throw std::invalid_argument("abs_tol must be > 0");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
  if (!(w_trunc_prob > 0.0 && w_trunc_prob <= 1e-6)) {
    throw std::invalid_argument("w_trunc_prob must lie in (0, 1e-6]");
  }
  if (!(h_trunc_halfwidth > 0.0)) throw std::invalid_argument("h_trunc_halfwidth must be > 0");
  if (max_subdivisions < 1) throw std::invalid_argument("max_subdivisions must be >= 1");
}

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * (0.5 * std::numbers::sqrt2)); }

double std_normal_interval(double lo, double hi) {
  if (hi <= lo) return 0.0;
  if (lo > 0.0) return std_normal_cdf(-lo) - std_normal_cdf(-hi);
  return std_normal_cdf(hi) - std_normal_cdf(lo);
}

double central_t_cdf(DegreesOfFreedom m, double t) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  return boost::math::cdf(boost::math::students_t_distribution<double>(m.value()), t);
}

double t_quantile(DegreesOfFreedom m, double a) {
  require_probability(a, "t_quantile");
  if (a == 0.5) return 0.0;
  return boost::math::quantile(boost::math::students_t_distribution<double>(m.value()), a);
}

double scaled_chi_pdf(double w, DegreesOfFreedom m) {
  if (!(w > 0.0) || std::isinf(w)) return 0.0;
  // R = m w^2 has the chi2_m density; dR/dw = 2 m w.
  const double k = 0.5 * m.value();
  const double r = m.value() * w * w;
  const double log_pdf = std::log(2.0 * m.value() * w) + (k - 1.0) * std::log(r) - 0.5 * r -
                         k * std::numbers::ln2 - std::lgamma(k);
  return std::exp(log_pdf);
}

double scaled_chi_cdf(double w, DegreesOfFreedom m) {
  if (!(w > 0.0)) return 0.0;
  if (std::isinf(w)) return 1.0;
  return boost::math::gamma_p(0.5 * m.value(), 0.5 * m.value() * w * w);
}

double scaled_chi_quantile(double p, DegreesOfFreedom m) {
  require_probability(p, "scaled_chi_quantile");
  const double r = boost::math::quantile(boost::math::chi_squared_distribution<double>(m.value()), p);
  return std::sqrt(r / m.value());
}

double bvn_rect(double x_lo, double x_hi, double y_lo, double y_hi, double mean_x,
                double mean_y, double corr, const Tolerance& tol, double halfwidth) {
  if (!(std::abs(corr) < 1.0)) {
    throw std::invalid_argument("bvn_rect: |corr| must be < 1");
  }
  if (x_lo > x_hi || y_lo > y_hi) {
    throw std::invalid_argument("bvn_rect: lower bound exceeds upper bound");
  }
  const double a = std::max(x_lo - mean_x, -halfwidth);
  const double b = std::min(x_hi - mean_x, halfwidth);
  if (!(a < b)) return 0.0;
  const double c = y_lo - mean_y;
  const double d = y_hi - mean_y;

  if (corr == 0.0) return std_normal_interval(a, b) * std_normal_interval(c, d);

  // Condition on X = s: Y | s ~ N(corr s, 1 - corr^2).
  const double scale = 1.0 / std::sqrt((1.0 - corr) * (1.0 + corr));
  auto conditional = [=](double s) {
    return std_normal_pdf(s) * std_normal_interval((c - corr * s) * scale, (d - corr * s) * scale);
  };
  double value;
  if (a < 0.0 && b > 0.0) {
    const std::array<double, 3> breaks{a, 0.0, b};
    value = integrate(conditional, std::span<const double>(breaks), tol).value;
  } else {
    value = integrate(conditional, a, b, tol).value;
  }
  return std::clamp(value, 0.0, 1.0);
}

double bvn_rect(double x_lo, double x_hi, double y_lo, double y_hi, double mean_x,
                double mean_y, double corr) {
  return bvn_rect(x_lo, x_hi, y_lo, y_hi, mean_x, mean_y, corr, Tolerance{1e-14, 1e-13, 400},
                  9.0);
}

ScaledChiAxis::ScaledChiAxis(DegreesOfFreedom m, const QuadratureConfig& config)
    : m_(m), tol_(config.outer()), tail_(config.w_trunc_prob) {
  config.validate();
  lo_ = scaled_chi_quantile(config.w_trunc_prob, m);
  hi_ = scaled_chi_quantile(1.0 - config.w_trunc_prob, m);
  breaks_ = {lo_};
  // Interior mode sqrt((m-1)/m); for m = 1 the density peaks at the w = 0 boundary.
  const double mode = std::sqrt((m.value() - 1.0) / m.value());
  if (mode > lo_ && mode < hi_) breaks_.push_back(mode);
  breaks_.push_back(hi_);
}

std::vector<double> ScaledChiAxis::merge_breaks(std::span<const double> extra) const {
  std::vector<double> out(breaks_);
  for (double x : extra) {
    if (x > lo_ && x < hi_) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double noncentral_t_cdf(double t, DegreesOfFreedom m, double gamma,
                        const QuadratureConfig& config) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const ScaledChiAxis axis(m, config);
  // Phi(t w - gamma) moves fastest near t w = gamma.
  std::array<double, 1> kink{t != 0.0 ? gamma / t : -1.0};
  const double p = axis.expectation([=](double w) { return std_normal_cdf(t * w - gamma); },
                                    kink);
  return std::clamp(p, 0.0, 1.0);
}

double bvnt_rect(double g_lo, double g_hi, double h_lo, double h_hi,
                 const ScaledChiAxis& axis, double rho, double gamma,
                 const QuadratureConfig& config) {
  if (!(std::abs(rho) < 1.0)) {
    throw std::invalid_argument("bvnt_rect: |rho| must be < 1");
  }
  if (g_lo > g_hi || h_lo > h_hi) {
    throw std::invalid_argument("bvnt_rect: lower bound exceeds upper bound");
  }
  const Tolerance inner = config.inner();
  const double halfwidth = config.h_trunc_halfwidth;
  // w * (+-inf) must stay infinite for every w > 0.
  auto scaled = [](double bound, double w) { return std::isinf(bound) ? bound : bound * w; };
  auto conditional = [&](double w) {
    return bvn_rect(scaled(g_lo, w), scaled(g_hi, w), scaled(h_lo, w), scaled(h_hi, w), 0.0,
                    gamma, rho, inner, halfwidth);
  };
  // The H window [h_lo w, h_hi w] sweeps past the H mean where h w = gamma.
  std::vector<double> kinks;
  for (double h : {h_lo, h_hi}) {
    if (std::isfinite(h) && h != 0.0) kinks.push_back(gamma / h);
  }
  return std::clamp(axis.expectation(conditional, kinks), 0.0, 1.0);
}

double bvnt_rect(double g_lo, double g_hi, double h_lo, double h_hi, DegreesOfFreedom m,
                 double rho, double gamma, const QuadratureConfig& config) {
  const ScaledChiAxis axis(m, config);
  return bvnt_rect(g_lo, g_hi, h_lo, h_hi, axis, rho, gamma, config);
}

}  // namespace selcov
