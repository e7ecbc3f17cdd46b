#include "selcov/mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "selcov/parallel.hpp"

namespace selcov {

namespace {

// Replications per summation block. Blocks are tallied independently and
// merged in index order, so worker count never changes the result.
constexpr std::uint64_t kBlockSize = 1u << 16;

struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  void merge(const CompensatedSum& other) {
    add(other.sum);
    add(-other.carry);
  }
};

struct Outcome {
  bool accept;
  bool in_I;
  bool in_J;
  bool in_K_star;
  double g;
  double h;
  double z;
};

struct Tally {
  std::uint64_t n = 0;
  std::uint64_t accept = 0;
  std::uint64_t in_I = 0;
  std::uint64_t in_J = 0;
  std::uint64_t J_and_accept = 0;
  std::uint64_t I_and_accept = 0;
  std::uint64_t in_K = 0;
  std::uint64_t in_K_star = 0;
  std::uint64_t K_differs = 0;  // K and K* disagree on covering theta
  CompensatedSum g, h, gg, hh, gh, z, zz, zh;

  void add(const Outcome& o) {
    const bool covered = o.accept ? o.in_J : o.in_I;
    ++n;
    accept += o.accept;
    in_I += o.in_I;
    in_J += o.in_J;
    J_and_accept += o.accept && o.in_J;
    I_and_accept += o.accept && o.in_I;
    in_K += covered;
    in_K_star += o.in_K_star;
    K_differs += covered != o.in_K_star;
    g.add(o.g);
    h.add(o.h);
    gg.add(o.g * o.g);
    hh.add(o.h * o.h);
    gh.add(o.g * o.h);
    z.add(o.z);
    zz.add(o.z * o.z);
    zh.add(o.z * o.h);
  }

  void merge(const Tally& o) {
    n += o.n;
    accept += o.accept;
    in_I += o.in_I;
    in_J += o.in_J;
    J_and_accept += o.J_and_accept;
    I_and_accept += o.I_and_accept;
    in_K += o.in_K;
    in_K_star += o.in_K_star;
    K_differs += o.K_differs;
    g.merge(o.g);
    h.merge(o.h);
    gg.merge(o.gg);
    hh.merge(o.hh);
    gh.merge(o.gh);
    z.merge(o.z);
    zz.merge(o.zz);
    zh.merge(o.zh);
  }
};

Estimate proportion(std::uint64_t count, std::uint64_t n) {
  const double p = static_cast<double>(count) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

double correlation(const CompensatedSum& x, const CompensatedSum& y, const CompensatedSum& xx,
                   const CompensatedSum& yy, const CompensatedSum& xy, double n) {
  const double mx = x.sum / n;
  const double my = y.sum / n;
  const double cxy = xy.sum / n - mx * my;
  const double vx = xx.sum / n - mx * mx;
  const double vy = yy.sum / n - my * my;
  return cxy / std::sqrt(vx * vy);
}

MCEstimates finalize(const Tally& t, double nominal) {
  const double n = static_cast<double>(t.n);
  MCEstimates out;
  out.replications = t.n;
  out.p_accept = proportion(t.accept, t.n);
  out.p_J = proportion(t.in_J, t.n);
  out.p_I = proportion(t.in_I, t.n);
  out.p_J_and_accept = proportion(t.J_and_accept, t.n);
  out.p_I_and_accept = proportion(t.I_and_accept, t.n);
  out.coverage_K = proportion(t.in_K, t.n);
  out.coverage_K_star = proportion(t.in_K_star, t.n);

  // D_wm = (1 - alpha) - P(K*): same standard error as P(K*).
  out.d_wm = {nominal - out.coverage_K_star.value, out.coverage_K_star.se};

  // D_rd = mean of (1{K*} - 1{K}); its square is 1{K* != K}.
  const double diff = (static_cast<double>(t.in_K_star) - static_cast<double>(t.in_K)) / n;
  const double second = static_cast<double>(t.K_differs) / n;
  out.d_rd = {diff, std::sqrt(std::max(0.0, second - diff * diff) / n)};

  out.mean_g = t.g.sum / n;
  out.mean_h = t.h.sum / n;
  out.corr_gh = correlation(t.g, t.h, t.gg, t.hh, t.gh, n);
  out.corr_zh = correlation(t.z, t.h, t.zz, t.hh, t.zh, n);
  return out;
}

/// Tallies replications [0, config.replications) in fixed blocks.
template <class Replicate>
Tally run_blocks(const MonteCarloConfig& config, Replicate&& replicate) {
  const std::uint64_t total = config.replications;
  const std::size_t blocks = static_cast<std::size_t>((total + kBlockSize - 1) / kBlockSize);
  std::vector<Tally> tallies(blocks);
  parallel_for(blocks, static_cast<unsigned>(config.stream_count), [&](std::size_t b) {
    const std::uint64_t begin = b * kBlockSize;
    const std::uint64_t end = std::min(total, begin + kBlockSize);
    Tally local;
    replicate(begin, end, local);
    tallies[b] = local;
  });
  Tally all;
  for (const auto& t : tallies) all.merge(t);
  return all;
}

struct Quantiles {
  double full;  // t_{m, 1 - alpha/2}
  double sub;   // t_{m+1, 1 - alpha/2}
  double test;  // t_{m, 1 - test_size/2}
};

Quantiles quantiles_for(int m, double nominal, double test_size) {
  const double alpha = 1.0 - nominal;
  return {t_quantile(DegreesOfFreedom(m), 1.0 - 0.5 * alpha),
          t_quantile(DegreesOfFreedom(m + 1), 1.0 - 0.5 * alpha),
          t_quantile(DegreesOfFreedom(m), 1.0 - 0.5 * test_size)};
}

}  // namespace

void MonteCarloConfig::validate() const {
  if (replications < kMinReplications) {
    throw std::invalid_argument("Monte Carlo needs at least " +
                                std::to_string(kMinReplications) + " replications");
  }
  if (stream_count < 1) throw std::invalid_argument("stream_count must be >= 1");
}

ReducedDraw draw_reduced(ReplicationRng& rng, DegreesOfFreedom m, double rho, double gamma) {
  const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  const double w = std::sqrt(rng.chi_square(m.value()) / m.value());
  const double g = z1;
  const double h = gamma + rho * z1 + s * z2;
  return {g, h, w, (g - rho * (h - gamma)) / s};
}

MCEstimates simulate_reduced(const Scenario& scenario, double gamma,
                             const MonteCarloConfig& config) {
  scenario.validate();
  config.validate();
  const int m = scenario.m.value();
  const double rho = scenario.rho;
  const Quantiles q = quantiles_for(m, scenario.nominal_coverage, scenario.test_size);
  const double shift = rho * gamma / std::sqrt((1.0 - rho) * (1.0 + rho));

  auto covers_J = [&](const ReducedDraw& d) {
    const double half = q.sub * std::sqrt((m * d.w * d.w + d.h * d.h) / (m + 1.0));
    return std::abs(d.z - shift) <= half;
  };
  auto covers_I = [&](const ReducedDraw& d) { return std::abs(d.g) <= q.full * d.w; };

  const Tally tally = run_blocks(config, [&](std::uint64_t begin, std::uint64_t end, Tally& t) {
    for (std::uint64_t i = begin; i < end; ++i) {
      ReplicationRng rng(config.seed, i);
      const ReducedDraw d = draw_reduced(rng, scenario.m, rho, gamma);
      const ReducedDraw genie = draw_reduced(rng, scenario.m, rho, gamma);
      const bool accept = std::abs(d.h) < q.test * d.w;
      const bool star = accept ? covers_J(genie) : covers_I(genie);
      t.add({accept, covers_I(d), covers_J(d), star, d.g, d.h, d.z});
    }
  });
  return finalize(tally, scenario.nominal_coverage);
}

RegressionDerived derive(const RegressionSpec& spec) {
  const Eigen::Index n = spec.X.rows();
  const Eigen::Index p = spec.X.cols();
  if (p < 1 || n <= p) throw std::invalid_argument("regression: need n > p >= 1");
  if (spec.beta.size() != p || spec.a.size() != p || spec.c.size() != p) {
    throw std::invalid_argument("regression: beta, a and c must have length p");
  }
  if (!(spec.sigma > 0.0)) throw std::invalid_argument("regression: sigma must be > 0");
  if (spec.a.isZero(0.0)) throw std::invalid_argument("regression: a must be nonzero");

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(spec.X);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const double scale = R.diagonal().cwiseAbs().maxCoeff();
  if (!(R.diagonal().cwiseAbs().minCoeff() > 1e-10 * scale)) {
    throw std::invalid_argument("regression: X is rank deficient");
  }
  // a' (X'X)^{-1} c = (R^{-T} a) . (R^{-T} c)
  const auto Rt = R.transpose().triangularView<Eigen::Lower>();
  const Eigen::VectorXd ua = Rt.solve(spec.a);
  const Eigen::VectorXd uc = Rt.solve(spec.c);

  RegressionDerived d;
  d.m = static_cast<int>(n - p);
  d.v_theta = ua.squaredNorm();
  d.v_tau = uc.squaredNorm();
  if (!(d.v_tau > 0.0)) throw std::invalid_argument("regression: c must be nonzero");
  d.rho = ua.dot(uc) / std::sqrt(d.v_theta * d.v_tau);
  if (!(1.0 - d.rho * d.rho > 1e-12)) {
    throw std::invalid_argument("regression: a and c are linearly dependent");
  }
  d.theta = spec.a.dot(spec.beta);
  d.tau = spec.c.dot(spec.beta) - spec.r;
  d.gamma = d.tau / (spec.sigma * std::sqrt(d.v_tau));
  return d;
}

RegressionEstimates simulate_regression(const RegressionSpec& spec, double nominal_coverage,
                                        double test_size, const MonteCarloConfig& config) {
  const RegressionDerived derived = derive(spec);
  const Scenario scenario{DegreesOfFreedom(derived.m), derived.rho, nominal_coverage, test_size};
  scenario.validate();
  config.validate();

  const Eigen::Index n = spec.X.rows();
  const Eigen::Index p = spec.X.cols();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(spec.X);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Qt = Q.transpose();
  const Eigen::VectorXd mean = spec.X * spec.beta;

  const int m = derived.m;
  const double rho = derived.rho;
  const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
  const double sd_theta = std::sqrt(derived.v_theta);
  const double sd_tau = std::sqrt(derived.v_tau);
  const Quantiles q = quantiles_for(m, nominal_coverage, test_size);

  struct Fit {
    double theta_hat;
    double tau_hat;
    double sigma_hat;
  };

  auto covers_I = [&](const Fit& f) {
    return std::abs(f.theta_hat - derived.theta) <= q.full * sd_theta * f.sigma_hat;
  };
  auto covers_J = [&](const Fit& f) {
    const double centre = f.theta_hat - rho * sd_theta * (f.tau_hat / sd_tau);
    const double pooled =
        (m * f.sigma_hat * f.sigma_hat + f.tau_hat * f.tau_hat / derived.v_tau) / (m + 1.0);
    const double half = q.sub * sd_theta * s * std::sqrt(pooled);
    return std::abs(derived.theta - centre) <= half;
  };

  const Tally tally = run_blocks(config, [&](std::uint64_t begin, std::uint64_t end, Tally& t) {
    Eigen::VectorXd y(n), qy(p), beta_hat(p), resid(n);
    auto fit = [&](ReplicationRng& rng) {
      for (Eigen::Index i = 0; i < n; ++i) y[i] = mean[i] + spec.sigma * rng.normal();
      qy.noalias() = Qt * y;
      beta_hat = R.triangularView<Eigen::Upper>().solve(qy);
      resid = y;
      resid.noalias() -= Q * qy;
      return Fit{spec.a.dot(beta_hat), spec.c.dot(beta_hat) - spec.r,
                 std::sqrt(resid.squaredNorm() / m)};
    };
    for (std::uint64_t i = begin; i < end; ++i) {
      ReplicationRng rng(config.seed, i);
      const Fit original = fit(rng);
      const Fit genie = fit(rng);
      const double T = original.tau_hat / (original.sigma_hat * sd_tau);
      const bool accept = std::abs(T) < q.test;
      const bool star = accept ? covers_J(genie) : covers_I(genie);
      const double g = (original.theta_hat - derived.theta) / (spec.sigma * sd_theta);
      const double h = original.tau_hat / (spec.sigma * sd_tau);
      t.add({accept, covers_I(original), covers_J(original), star, g, h,
             (g - rho * (h - derived.gamma)) / s});
    }
  });
  return {finalize(tally, nominal_coverage), derived};
}

RegressionSpec regression_fixture(int variant, double gamma, double rho) {
  if (variant != 0 && variant != 1) throw std::invalid_argument("fixture variant must be 0 or 1");
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("fixture: |rho| must be < 1");
  constexpr int n = 45;
  constexpr int p = 5;

  Eigen::MatrixXd X(n, p);
  X.col(0).setOnes();
  if (variant == 0) {
    for (int i = 0; i < n; ++i) {
      const double t = (i - 22.0) / 22.0;
      X(i, 1) = t;
      X(i, 2) = t * t;
      X(i, 3) = std::cos(2.0 * std::numbers::pi * i / n);
      X(i, 4) = (i % 5) - 2.0;
    }
  } else {
    ReplicationRng rng(20170101u, 0);
    for (int i = 0; i < n; ++i) {
      for (int j = 1; j < p; ++j) X(i, j) = rng.normal() * (1.0 + j);
    }
  }
  for (int j = 1; j < p; ++j) X.col(j).array() -= X.col(j).mean();

  RegressionSpec spec;
  spec.X = X;
  Eigen::VectorXd c0(p), b0(p);
  if (variant == 0) {
    spec.beta = (Eigen::VectorXd(p) << 1.0, 0.5, -1.0, 2.0, 0.3).finished();
    spec.sigma = 1.0;
    c0 << 0.0, 1.0, 0.0, 0.0, 0.0;
    b0 << 1.0, 0.0, 0.5, 0.0, 0.0;
  } else {
    spec.beta = (Eigen::VectorXd(p) << -2.0, 1.5, 0.7, -0.4, 3.0).finished();
    spec.sigma = 2.5;
    c0 << 0.0, 1.0, 1.0, 0.0, -0.5;
    b0 << 0.0, 0.0, 0.0, 1.0, -1.0;
  }

  // Gram-Schmidt in the (X'X)^{-1} inner product puts corr(theta_hat, tau_hat) at rho.
  const Eigen::MatrixXd M = (X.transpose() * X).inverse();
  auto inner = [&M](const Eigen::VectorXd& u, const Eigen::VectorXd& v) { return u.dot(M * v); };
  const Eigen::VectorXd e1 = c0 / std::sqrt(inner(c0, c0));
  Eigen::VectorXd e2 = b0 - inner(b0, e1) * e1;
  e2 /= std::sqrt(inner(e2, e2));
  spec.c = c0;
  spec.a = (variant == 0 ? 1.0 : 3.0) * (rho * e1 + std::sqrt(1.0 - rho * rho) * e2);
  spec.r = c0.dot(spec.beta) - gamma * spec.sigma * std::sqrt(inner(c0, c0));
  return spec;
}

}  // namespace selcov
