#pragma once

// Globally adaptive 21-point Gauss-Kronrod integration (QUADPACK QAG style).
// Panels are kept in a max-heap on their error estimate; the worst panel is
// bisected until the summed error meets the tolerance or the panel budget is
// exhausted.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace selcov {

struct Tolerance {
  double abs = 1e-9;
  double rel = 1e-8;
  int max_subdivisions = 200;
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int panels = 0;
};

/// Raised when the panel budget runs out before the error target is met.
/// Carries the panel with the largest remaining error estimate.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double estimate, double abs_error,
                  double worst_lo, double worst_hi, double worst_error)
      : std::runtime_error(what),
        estimate_(estimate),
        abs_error_(abs_error),
        worst_lo_(worst_lo),
        worst_hi_(worst_hi),
        worst_error_(worst_error) {}

  double estimate() const { return estimate_; }
  double abs_error() const { return abs_error_; }
  double worst_lo() const { return worst_lo_; }
  double worst_hi() const { return worst_hi_; }
  double worst_error() const { return worst_error_; }

 private:
  double estimate_;
  double abs_error_;
  double worst_lo_;
  double worst_hi_;
  double worst_error_;
};

namespace gk21 {

// Kronrod abscissae on [0, 1]; odd indices are the 10-point Gauss nodes.
inline constexpr std::array<double, 11> kNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double lo;
  double hi;
  double value;
  double error;
};

/// One 21-point Kronrod evaluation with the QUADPACK error heuristic.
template <class F>
Panel evaluate(F& f, double lo, double hi) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double tiny = std::numeric_limits<double>::min();

  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double abs_half = std::abs(half);

  std::array<double, 10> f1{};
  std::array<double, 10> f2{};
  const double fc = f(center);
  double gauss = 0.0;
  double kronrod = fc * kKronrodWeights[10];
  double abs_k = std::abs(kronrod);

  for (int j = 0; j < 10; ++j) {
    const double dx = half * kNodes[j];
    const double v1 = f(center - dx);
    const double v2 = f(center + dx);
    f1[j] = v1;
    f2[j] = v2;
    const double sum = v1 + v2;
    kronrod += kKronrodWeights[j] * sum;
    abs_k += kKronrodWeights[j] * (std::abs(v1) + std::abs(v2));
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
  }

  const double mean = 0.5 * kronrod;
  double asc = kKronrodWeights[10] * std::abs(fc - mean);
  for (int j = 0; j < 10; ++j) {
    asc += kKronrodWeights[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
  }

  const double result = kronrod * half;
  abs_k *= abs_half;
  asc *= abs_half;
  double err = std::abs((kronrod - gauss) * half);
  if (asc != 0.0 && err != 0.0) {
    err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  }
  if (abs_k > tiny / (50.0 * eps)) {
    err = std::max(50.0 * eps * abs_k, err);
  }
  return {lo, hi, result, err};
}

}  // namespace gk21

/// Integrates f over [breaks.front(), breaks.back()], starting from the
/// panels delimited by `breaks` (must be sorted ascending, size >= 2).
/// Throws QuadratureError when `tol.max_subdivisions` panels do not suffice.
template <class F>
QuadratureResult integrate(F&& f, std::span<const double> breaks,
                           const Tolerance& tol) {
  if (breaks.size() < 2) {
    throw std::invalid_argument("integrate: need at least two break points");
  }
  auto by_error = [](const gk21::Panel& a, const gk21::Panel& b) {
    return a.error < b.error;
  };

  std::vector<gk21::Panel> heap;
  heap.reserve(static_cast<std::size_t>(tol.max_subdivisions) + breaks.size());
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] < breaks[i]) {
      throw std::invalid_argument("integrate: break points must be sorted");
    }
    if (breaks[i + 1] == breaks[i]) continue;
    heap.push_back(gk21::evaluate(f, breaks[i], breaks[i + 1]));
  }
  if (heap.empty()) return {};
  std::make_heap(heap.begin(), heap.end(), by_error);

  auto totals = [&heap]() {
    double v = 0.0;
    double e = 0.0;
    for (const auto& p : heap) {
      v += p.value;
      e += p.error;
    }
    return std::pair{v, e};
  };

  auto [value, error] = totals();
  while (error > std::max(tol.abs, tol.rel * std::abs(value))) {
    const gk21::Panel& worst = heap.front();
    const double mid = 0.5 * (worst.lo + worst.hi);
    const bool unsplittable = !(mid > worst.lo && mid < worst.hi) ||
                              std::abs(worst.hi - worst.lo) <=
                                  1e3 * std::numeric_limits<double>::epsilon() *
                                      std::max(std::abs(mid), 1e-300);
    if (static_cast<int>(heap.size()) >= tol.max_subdivisions || unsplittable) {
      throw QuadratureError(
          "adaptive quadrature did not converge within " +
              std::to_string(tol.max_subdivisions) + " panels",
          value, error, worst.lo, worst.hi, worst.error);
    }
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const gk21::Panel parent = heap.back();
    heap.pop_back();
    heap.push_back(gk21::evaluate(f, parent.lo, mid));
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back(gk21::evaluate(f, mid, parent.hi));
    std::push_heap(heap.begin(), heap.end(), by_error);
    std::tie(value, error) = totals();
  }
  return {value, error, static_cast<int>(heap.size())};
}

template <class F>
QuadratureResult integrate(F&& f, double lo, double hi, const Tolerance& tol) {
  const std::array<double, 2> breaks{lo, hi};
  return integrate(std::forward<F>(f), std::span<const double>(breaks), tol);
}

}  // namespace selcov
