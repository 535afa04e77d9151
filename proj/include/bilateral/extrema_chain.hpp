#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "bilateral/error.hpp"
#include "bilateral/monotone_table.hpp"
#include "bilateral/parallel.hpp"
#include "bilateral/path_sim.hpp"
#include "bilateral/rng.hpp"

namespace bilateral {

/// One transition of the alternating-extrema chain. From z > 0 the next
/// height is in [-z, 0] with law Hminus(-dy)/Hminus(z); from z < 0 it is in
/// [0, -z] with law Hplus(dy)/Hplus(-z). Inverse-CDF sampling.
inline double kernel_step(const MonotoneTable& Hplus, const MonotoneTable& Hminus, double z, Rng& rng) {
  require(z != 0.0 && std::isfinite(z), Errc::domain, "kernel_step needs a nonzero finite state");
  const MonotoneTable& table = z > 0 ? Hminus : Hplus;
  const double a = std::abs(z);
  const double top = table(a);
  require(top > 0, Errc::degenerate_state, "kernel table vanishes at the current state");
  const double y = std::min(a, table.inverse(rng.uniform() * top));
  return z > 0 ? -y : y;
}

inline double kernel_step(const MonotoneTable& Hplus, const MonotoneTable& Hminus, double z, std::uint64_t seed) {
  Rng rng(seed);
  return kernel_step(Hplus, Hminus, z, rng);
}

struct ChainOutcome {
  double max = 0.0;    // M = Z_1
  double final = 0.0;  // F = sum of Z_n
  std::size_t steps = 0;
};

/// Chain started from Z_1 ~ Hplus(dz)/Hplus(x_cap) on [0, x_cap] and iterated
/// until the shared truncation rule.
inline ChainOutcome simulate_chain(const MonotoneTable& Hplus, const MonotoneTable& Hminus, double x_cap, Rng& rng) {
  require(x_cap > 0, Errc::domain, "x_cap must be positive");
  const double top = Hplus(x_cap);
  require(top > 0, Errc::degenerate_state, "H vanishes at x_cap");
  const double z1 = std::min(x_cap, Hplus.inverse(rng.uniform() * top));
  ChainOutcome out{z1, z1, 1};
  if (z1 <= 0) return out;
  double z = z1;
  while (out.steps < chain_max_steps) {
    z = kernel_step(Hplus, Hminus, z, rng);
    if (std::abs(z) < chain_rel_eps * z1) break;
    out.final += z;
    ++out.steps;
  }
  return out;
}

inline ChainOutcome simulate_chain(const MonotoneTable& Hplus, const MonotoneTable& Hminus, double x_cap,
                                   std::uint64_t seed) {
  Rng rng(seed);
  return simulate_chain(Hplus, Hminus, x_cap, rng);
}

inline std::vector<ChainOutcome> simulate_chains(const MonotoneTable& Hplus, const MonotoneTable& Hminus,
                                                 double x_cap, std::size_t n_chains, std::uint64_t seed,
                                                 unsigned workers = 1) {
  return parallel_map(n_chains, workers, [&](std::size_t i) {
    Rng rng(seed, i);
    return simulate_chain(Hplus, Hminus, x_cap, rng);
  });
}

struct ComplexEstimate {
  std::complex<double> value;
  double se_real = 0.0;
  double se_imag = 0.0;
};

/// Chain estimator of phi(x, lambda) = H(x) E[exp(-lambda F) | M <= x].
inline ComplexEstimate phi_mc(const MonotoneTable& Hplus, const MonotoneTable& Hminus, double x,
                              std::complex<double> lambda, std::size_t n_chains, std::uint64_t seed,
                              unsigned workers = 1) {
  require(n_chains >= 2, Errc::insufficient_sample, "phi_mc needs at least two chains");
  const double hx = Hplus(x);
  if (lambda == 0.0) return {hx, 0.0, 0.0};
  const auto chains = simulate_chains(Hplus, Hminus, x, n_chains, seed, workers);
  std::complex<double> sum = 0.0;
  double sr2 = 0.0, si2 = 0.0;
  for (const auto& c : chains) {
    const auto v = std::exp(-lambda * c.final);
    sum += v;
    sr2 += v.real() * v.real();
    si2 += v.imag() * v.imag();
  }
  const double n = static_cast<double>(n_chains);
  const auto mean = sum / n;
  const double var_r = std::max(0.0, (sr2 / n - mean.real() * mean.real()) * n / (n - 1));
  const double var_i = std::max(0.0, (si2 / n - mean.imag() * mean.imag()) * n / (n - 1));
  return {hx * mean, hx * std::sqrt(var_r / n), hx * std::sqrt(var_i / n)};
}

}  // namespace bilateral
