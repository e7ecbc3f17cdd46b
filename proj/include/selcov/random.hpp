#pragma once

// Counter-based random numbers. Every replication owns the Philox
// counter space (replication, draw, 0, 0) under a key derived from the
// seed, so draws do not depend on how replications are scheduled.

#include <array>
#include <cstdint>

namespace selcov {

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key);
};

class ReplicationRng {
 public:
  ReplicationRng(std::uint64_t seed, std::uint64_t replication);

  std::uint32_t next_u32();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; the paired variate is cached.
  double normal();
  /// Gamma(shape, 1) by Marsaglia-Tsang; shapes below 1 use the
  /// U^(1/shape) boost.
  double gamma(double shape);
  double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

 private:
  void refill();

  Philox4x32::Key key_;
  Philox4x32::Counter counter_;
  Philox4x32::Counter buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace selcov
