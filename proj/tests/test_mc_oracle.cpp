#include <doctest.h>

#include <cmath>
#include <cstring>

#include "selcov/mc_oracle.hpp"

using namespace selcov;

namespace {

Scenario make(int m, double rho, double nominal = 0.95, double size = 0.1) {
  return {DegreesOfFreedom(m), rho, nominal, size};
}

MonteCarloConfig mc(std::uint64_t n, std::uint64_t seed = 42, int streams = 1) {
  MonteCarloConfig c;
  c.replications = n;
  c.seed = seed;
  c.stream_count = streams;
  return c;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool identical(const MCEstimates& a, const MCEstimates& b) {
  for (const auto& f : kValidatedFields) {
    if (!same_bits((a.*f.mc).value, (b.*f.mc).value)) return false;
    if (!same_bits((a.*f.mc).se, (b.*f.mc).se)) return false;
  }
  return same_bits(a.p_I.value, b.p_I.value) && same_bits(a.mean_g, b.mean_g) &&
         same_bits(a.corr_gh, b.corr_gh) && same_bits(a.corr_zh, b.corr_zh);
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}) ==
        C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          K{0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          K{0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("replication generator") {
  ReplicationRng a(7, 3);
  ReplicationRng b(7, 3);
  ReplicationRng c(7, 4);
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(same_bits(x, b.normal()));
    CHECK_FALSE(same_bits(x, c.normal()));
  }
  ReplicationRng r(1, 0);
  double sum = 0.0, sum2 = 0.0, gsum = 0.0;
  double umin = 1.0, umax = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    const double z = r.normal();
    sum += z;
    sum2 += z * z;
    gsum += r.gamma(0.5);
  }
  CHECK(umin > 0.0);
  CHECK(umax < 1.0);
  CHECK(std::abs(sum / n) <= 4.0 / std::sqrt(n));
  CHECK(std::abs(sum2 / n - 1.0) <= 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(gsum / n - 0.5) <= 4.0 * std::sqrt(0.5 / n));
}

TEST_CASE("reduced draw fields are consistent") {
  ReplicationRng rng(11, 0);
  for (int i = 0; i < 1000; ++i) {
    const ReducedDraw d = draw_reduced(rng, DegreesOfFreedom(3), 0.6, 2.0);
    CHECK(d.w > 0.0);
    CHECK(std::abs(d.z - (d.g - 0.6 * (d.h - 2.0)) / 0.8) <= 1e-12);
  }
}

TEST_CASE("MonteCarloConfig validation") {
  CHECK_THROWS_AS(simulate_reduced(make(40, 0.6), 1.0, mc(9999)), std::invalid_argument);
  CHECK_THROWS_AS(simulate_reduced(make(40, 0.6), 1.0, mc(20000, 1, 0)), std::invalid_argument);
  CHECK_THROWS_AS(simulate_reduced(make(40, 1.2), 1.0, mc(20000)), std::invalid_argument);
}

TEST_CASE("output does not depend on the stream count") {
  const Scenario s = make(5, 0.6, 0.9, 0.05);
  const MCEstimates one = simulate_reduced(s, 1.5, mc(300000, 9, 1));
  CHECK(identical(one, simulate_reduced(s, 1.5, mc(300000, 9, 4))));
  CHECK(identical(one, simulate_reduced(s, 1.5, mc(300000, 9, 8))));
  CHECK(identical(one, simulate_reduced(s, 1.5, mc(300000, 9, 1))));
  CHECK_FALSE(identical(one, simulate_reduced(s, 1.5, mc(300000, 10, 1))));
}

TEST_CASE("estimator identity and marginals") {
  const double n = 1e6;
  for (double rho : {0.0, 0.6, -0.8}) {
    for (double gamma : {0.0, 2.0}) {
      const Scenario s = make(40, rho);
      const MCEstimates e = simulate_reduced(s, gamma, mc(static_cast<std::uint64_t>(n), 3));
      CHECK(e.replications == 1000000);
      CHECK(std::abs(s.nominal_coverage - e.d_wm.value - e.d_rd.value - e.coverage_K.value) <=
            1e-15);
      CHECK(std::abs(e.mean_g) <= 4.0 / std::sqrt(n));
      CHECK(std::abs(e.mean_h - gamma) <= 4.0 / std::sqrt(n));
      CHECK(std::abs(e.corr_gh - rho) <= 5.0 / std::sqrt(n));
      CHECK(std::abs(e.corr_zh) <= 5.0 / std::sqrt(n));
      CHECK(std::abs(e.p_I.value - 0.95) <= 4.0 * e.p_I.se);
      for (const auto& f : kValidatedFields) {
        CHECK((e.*f.mc).se > 0.0);
      }
      for (const Estimate& p : {e.p_accept, e.p_J, e.p_J_and_accept, e.p_I_and_accept,
                                e.coverage_K, e.coverage_K_star}) {
        CHECK(p.value >= 0.0);
        CHECK(p.value <= 1.0);
        CHECK(std::abs(p.se - std::sqrt(p.value * (1.0 - p.value) / n)) <= 1e-15);
      }
    }
  }
}

TEST_CASE("gamma = 0: genie coverage is nominal") {
  const MCEstimates e = simulate_reduced(make(40, 0.6), 0.0, mc(1000000, 5));
  CHECK(std::abs(e.coverage_K_star.value - 0.95) <= 4.0 * e.coverage_K_star.se);
  CHECK(std::abs(e.d_wm.value) <= 4.0 * e.d_wm.se);
}

TEST_CASE("small Monte Carlo run agrees with quadrature") {
  const Scenario s = make(2, -0.8, 0.9, 0.05);
  const DeficitBreakdown q = deficits(s, 2.5);
  const MCEstimates e = simulate_reduced(s, 2.5, mc(1000000, 8));
  for (const auto& f : kValidatedFields) {
    CAPTURE(f.name);
    CHECK(std::abs((e.*f.mc).value - q.*f.quadrature) <= 4.0 * (e.*f.mc).se);
  }
}

TEST_CASE("regression spec derivation and rejections") {
  for (int v : {0, 1}) {
    const RegressionSpec spec = regression_fixture(v, 2.0, 0.6);
    CHECK(spec.X.rows() == 45);
    CHECK(spec.X.cols() == 5);
    const RegressionDerived d = derive(spec);
    CHECK(d.m == 40);
    CHECK(d.gamma == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(d.rho == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(d.theta == doctest::Approx(spec.a.dot(spec.beta)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(regression_fixture(2), std::invalid_argument);

  RegressionSpec bad = regression_fixture(0);
  bad.X.col(4) = bad.X.col(3) * 2.0;
  CHECK_THROWS_AS(derive(bad), std::invalid_argument);

  bad = regression_fixture(0);
  bad.c = 3.0 * bad.a;
  CHECK_THROWS_AS(derive(bad), std::invalid_argument);

  bad = regression_fixture(0);
  bad.a.setZero();
  CHECK_THROWS_AS(derive(bad), std::invalid_argument);

  bad = regression_fixture(0);
  bad.X = bad.X.topRows(5).eval();
  CHECK_THROWS_AS(derive(bad), std::invalid_argument);

  bad = regression_fixture(0);
  bad.sigma = 0.0;
  CHECK_THROWS_AS(derive(bad), std::invalid_argument);
}

TEST_CASE("regression with a true constraint has nominal genie coverage") {
  const RegressionSpec spec = regression_fixture(1, 0.0, -0.4);
  const RegressionEstimates r = simulate_regression(spec, 0.9, 0.05, mc(200000, 17));
  CHECK(std::abs(r.derived.gamma) <= 1e-12);
  CHECK(std::abs(r.estimates.coverage_K_star.value - 0.9) <= 4.0 * r.estimates.coverage_K_star.se);
  CHECK(std::abs(r.estimates.p_I.value - 0.9) <= 4.0 * r.estimates.p_I.se);
  CHECK(std::abs(0.9 - r.estimates.d_wm.value - r.estimates.d_rd.value -
                 r.estimates.coverage_K.value) <= 1e-15);
}

TEST_CASE("regression simulation is deterministic across streams") {
  const RegressionSpec spec = regression_fixture(0);
  const auto a = simulate_regression(spec, 0.95, 0.1, mc(70000, 4, 1));
  const auto b = simulate_regression(spec, 0.95, 0.1, mc(70000, 4, 3));
  CHECK(identical(a.estimates, b.estimates));
}
