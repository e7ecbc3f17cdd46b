#include "selcov/coverage.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace selcov {

namespace {

constexpr double kEdge = 1e-12;

double submodel_halfwidth(double t_sub, int m, double x, double u) {
  return t_sub * x * std::sqrt((m + u * u) / (m + 1.0));
}

double shift_of(const Scenario& s, double gamma) {
  return s.rho * gamma / std::sqrt((1.0 - s.rho) * (1.0 + s.rho));
}

void require_positive_x(const PsiArgs& args) {
  if (!(args.x > 0.0)) throw std::invalid_argument("psi: x must be > 0");
}

double submodel_t(const Scenario& s) {
  return t_quantile(DegreesOfFreedom(s.m.value() + 1), 1.0 - 0.5 * (1.0 - s.nominal_coverage));
}

}  // namespace

void Scenario::validate() const {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("scenario: |rho| must be < 1");
  if (!(nominal_coverage > kEdge && nominal_coverage < 1.0 - kEdge)) {
    throw std::invalid_argument("scenario: nominal coverage must lie strictly inside (0, 1)");
  }
  if (!(test_size > kEdge && test_size < 1.0 - kEdge)) {
    throw std::invalid_argument("scenario: test size must lie strictly inside (0, 1)");
  }
}

double g1(PsiArgs args, const Scenario& scenario, double gamma) {
  scenario.validate();
  require_positive_x(args);
  return -submodel_halfwidth(submodel_t(scenario), scenario.m.value(), args.x, args.u) +
         shift_of(scenario, gamma);
}

double g2(PsiArgs args, const Scenario& scenario, double gamma) {
  scenario.validate();
  require_positive_x(args);
  return submodel_halfwidth(submodel_t(scenario), scenario.m.value(), args.x, args.u) +
         shift_of(scenario, gamma);
}

double psi(PsiArgs args, const Scenario& scenario, double gamma) {
  return std_normal_interval(g1(args, scenario, gamma), g2(args, scenario, gamma));
}

CoverageModel::CoverageModel(const Scenario& scenario, const QuadratureConfig& config)
    : scenario_((scenario.validate(), scenario)),
      config_(config),
      axis_(scenario.m, config) {
  const double alpha = 1.0 - scenario.nominal_coverage;
  t_full_ = t_quantile(scenario.m, 1.0 - 0.5 * alpha);
  t_sub_ = submodel_t(scenario);
  t_test_ = t_quantile(scenario.m, 1.0 - 0.5 * scenario.test_size);
  shift_scale_ = scenario.rho / std::sqrt((1.0 - scenario.rho) * (1.0 + scenario.rho));
}

double CoverageModel::psi(double x, double u, double gamma) const {
  const double half = submodel_halfwidth(t_sub_, scenario_.m.value(), x, u);
  const double shift = shift_scale_ * gamma;
  return std_normal_interval(shift - half, shift + half);
}

double CoverageModel::prob_accept(double gamma) const {
  const double t = t_test_;
  auto inside = [t, gamma](double w) { return std_normal_interval(-t * w - gamma, t * w - gamma); };
  const std::array<double, 1> kink{std::abs(gamma) / t};
  return std::clamp(axis_.expectation(inside, kink), 0.0, 1.0);
}

double CoverageModel::prob_J(double gamma) const {
  const int m = scenario_.m.value();
  const double halfwidth = config_.h_trunc_halfwidth;
  const Tolerance inner = config_.inner();
  const double shift = shift_scale_ * gamma;
  const double t_sub = t_sub_;

  // h = gamma + z; Psi(w, h/w) uses (m w^2 + h^2) directly.
  auto given_w = [=](double w) {
    auto integrand = [=](double z) {
      const double h = gamma + z;
      const double half = t_sub * std::sqrt((m * w * w + h * h) / (m + 1.0));
      return std_normal_interval(shift - half, shift + half) * std_normal_pdf(z);
    };
    std::vector<double> breaks{-halfwidth, 0.0, halfwidth};
    if (-gamma > -halfwidth && -gamma < halfwidth && gamma != 0.0) breaks.push_back(-gamma);
    std::sort(breaks.begin(), breaks.end());
    return integrate(integrand, std::span<const double>(breaks), inner).value;
  };
  return std::clamp(axis_.expectation(given_w), 0.0, 1.0);
}

double CoverageModel::prob_J_and_accept(double gamma) const {
  const int m = scenario_.m.value();
  const double halfwidth = config_.h_trunc_halfwidth;
  const Tolerance inner = config_.inner();
  const double shift = shift_scale_ * gamma;
  const double t_sub = t_sub_;
  const double t_test = t_test_;

  // Conditional on W = w: t_test w * int_{-1}^{1} Psi(w, t_test y) phi(t_test w y - gamma) dy.
  auto given_w = [=](double w) {
    const double scale = t_test * w;
    // phi(scale y - gamma) is negligible outside gamma +- halfwidth.
    const double lo = std::max(-1.0, (gamma - halfwidth) / scale);
    const double hi = std::min(1.0, (gamma + halfwidth) / scale);
    if (!(lo < hi)) return 0.0;
    auto integrand = [=](double y) {
      const double u = t_test * y;
      const double half = t_sub * w * std::sqrt((m + u * u) / (m + 1.0));
      return std_normal_interval(shift - half, shift + half) * std_normal_pdf(scale * y - gamma);
    };
    std::vector<double> breaks{lo, hi};
    for (double y : {0.0, gamma / scale}) {
      if (y > lo && y < hi) breaks.push_back(y);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    return scale * integrate(integrand, std::span<const double>(breaks), inner).value;
  };
  const double g = std::abs(gamma);
  const std::array<double, 3> kinks{g / t_test, (g - halfwidth) / t_test, (g + halfwidth) / t_test};
  return std::clamp(axis_.expectation(given_w, kinks), 0.0, 1.0);
}

double CoverageModel::prob_I_and_accept(double gamma) const {
  return bvnt_rect(-t_full_, t_full_, -t_test_, t_test_, axis_, scenario_.rho, gamma, config_);
}

double CoverageModel::coverage(double gamma) const {
  return scenario_.nominal_coverage + prob_J_and_accept(gamma) - prob_I_and_accept(gamma);
}

DeficitBreakdown CoverageModel::deficits(double gamma) const {
  const double nominal = scenario_.nominal_coverage;
  DeficitBreakdown out;
  out.gamma = gamma;
  out.p_accept = prob_accept(gamma);
  out.p_J = prob_J(gamma);
  out.p_J_and_accept = prob_J_and_accept(gamma);
  out.p_I_and_accept = prob_I_and_accept(gamma);
  out.d_wm = out.p_accept * (nominal - out.p_J);
  out.d_rd = out.p_I_and_accept - out.p_J_and_accept + out.p_accept * (out.p_J - nominal);
  out.coverage_K = nominal + out.p_J_and_accept - out.p_I_and_accept;
  out.coverage_K_star = nominal - out.d_wm;
  return out;
}

double prob_accept(const Scenario& scenario, double gamma, const QuadratureConfig& config) {
  return CoverageModel(scenario, config).prob_accept(gamma);
}

double prob_J(const Scenario& scenario, double gamma, const QuadratureConfig& config) {
  return CoverageModel(scenario, config).prob_J(gamma);
}

double prob_J_and_accept(const Scenario& scenario, double gamma, const QuadratureConfig& config) {
  return CoverageModel(scenario, config).prob_J_and_accept(gamma);
}

double prob_I_and_accept(const Scenario& scenario, double gamma, const QuadratureConfig& config) {
  return CoverageModel(scenario, config).prob_I_and_accept(gamma);
}

DeficitBreakdown deficits(const Scenario& scenario, double gamma, const QuadratureConfig& config) {
  return CoverageModel(scenario, config).deficits(gamma);
}

}  // namespace selcov
