#include <gtest/gtest.h>

#include <cmath>

#include "bilateral/extrema_chain.hpp"
#include "bilateral/phi_system.hpp"
#include "bilateral/stable_forms.hpp"
#include "bilateral/stats.hpp"

using namespace bilateral;

namespace {

MonotoneTable power_table(double exponent) {
  return MonotoneTable::power_law(1.0, exponent, log_grid(1e-6, 10.0, 50));
}

}  // namespace

TEST(KernelStep, LinearTableGivesUniform) {
  const auto lin = power_table(1.0);
  Rng rng(1);
  std::vector<double> draws(10000);
  for (auto& d : draws) d = kernel_step(lin, lin, 1.0, rng);
  const auto ks = stats::ks_one_sample(draws, [](double y) { return y + 1.0; });
  EXPECT_GT(ks.p_value, 0.01);
}

TEST(KernelStep, SqrtTableQuantiles) {
  // Hminus(y) = y^(1/2): -y = U^2.
  const auto sq = power_table(0.5);
  const auto lin = power_table(1.0);
  Rng a(5), b(5);
  for (int i = 0; i < 1000; ++i) {
    const double y = kernel_step(lin, sq, 1.0, a);
    const double u = b.uniform();
    EXPECT_NEAR(y, -u * u, 1e-9);
  }
}

TEST(KernelStep, SupportAndSignAndErrors) {
  const auto sq = power_table(0.5);
  Rng rng(3);
  for (double z : {3.0, -0.2, 1e-4, -7.5}) {
    for (int i = 0; i < 200; ++i) {
      const double y = kernel_step(sq, sq, z, rng);
      EXPECT_LE(std::abs(y), std::abs(z));
      EXPECT_TRUE(z > 0 ? y <= 0 : y >= 0);
    }
  }
  EXPECT_THROW(kernel_step(sq, sq, 0.0, rng), Error);
  const MonotoneTable zero({1.0, 2.0}, {0.0, 0.0});
  EXPECT_THROW(kernel_step(zero, zero, 1.5, rng), Error);
}

TEST(KernelStep, SymmetryOfTheKernel) {
  // -Z2 given Z1 = x has the law of Z3 given Z2 = -x for equal tables.
  const auto t = power_table(0.3);
  Rng a(9), b(9);
  std::vector<double> down, up;
  for (int i = 0; i < 5000; ++i) {
    down.push_back(-kernel_step(t, t, 0.7, a));
    up.push_back(kernel_step(t, t, -0.7, b));
  }
  EXPECT_EQ(down, up);
}

TEST(SimulateChain, SupportAndContraction) {
  const auto t = power_table(0.5);
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto c = simulate_chain(t, t, 1.0, s);
    EXPECT_GE(c.final, 0.0);
    EXPECT_LE(c.final, c.max);
    EXPECT_LE(c.max, 1.0);
  }
}

TEST(SimulateChain, FinalOverMaxMean) {
  const auto t = power_table(0.5);
  const auto chains = simulate_chains(t, t, 1.0, 100000, 77);
  std::vector<double> r;
  for (const auto& c : chains) r.push_back(c.final / c.max);
  const auto m = stats::mean_and_error(r);
  EXPECT_NEAR(m.mean, 0.75, 3 * m.std_error);
}

TEST(SimulateChain, FinalOverMaxIndependentOfMax) {
  const auto t = power_table(0.5);
  const auto chains = simulate_chains(t, t, 1.0, 5000, 78);
  std::vector<double> r, m;
  for (const auto& c : chains) {
    r.push_back(c.final / c.max);
    m.push_back(c.max);
  }
  const auto d = stats::distance_correlation_test(r, m, 199, 1);
  EXPECT_GT(d.p_value, 0.01);
}

TEST(PhiMc, ZeroLambdaIsExact) {
  const auto t = power_table(0.5);
  const auto e = phi_mc(t, t, 0.49, 0.0, 10, 1);
  EXPECT_DOUBLE_EQ(e.value.real(), t(0.49));
  EXPECT_EQ(e.se_real, 0.0);
}

TEST(PhiMc, AgreesWithSolver) {
  const auto t = power_table(0.5);
  const auto grid = log_grid(1e-3, 2.0, 200);
  const auto pair = solve_phi(t, t, 1.0, grid);
  const auto idx = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), 1.0) - grid.begin());
  const auto mc = phi_mc(t, t, grid[idx], 1.0, 100000, 4);
  EXPECT_NEAR(mc.value.real(), pair.plus.phi[idx].real(), 3 * mc.se_real);
}

TEST(PhiMc, ImaginaryLambdaAtTopNode) {
  // Near the top node phi(x, i) estimates Q(exp(-iF)); |value| <= H(x).
  const auto t = power_table(0.5);
  const auto mc = phi_mc(t, t, 10.0, std::complex<double>(0, 1), 20000, 8);
  EXPECT_LE(std::abs(mc.value), t(10.0) + 1e-12);
  EXPECT_GT(mc.se_imag, 0.0);
}

TEST(PathVersusKernel, FinalValuesAgree) {
  // End to end: chains built from the kernel with H(x) = x^(1/2) versus
  // chains read off second-case Cauchy paths with Z_1 <= 1. Grid walks put an
  // atom on F = M (maximum at the last point), so both sides are taken on
  // chains with at least two heights.
  const auto m = LevyModel::stable(1.0);
  const auto paths = sample_capped_second_case(m, 1.0, 1e-5, 2000, 31);
  std::vector<double> f_path, w;
  for (const auto& c : paths) {
    if (c.chain.heights.size() < 2) continue;
    f_path.push_back(c.final_minus_min / c.chain.heights[0]);
    w.push_back(c.weight);
  }
  const auto t = power_table(0.5);
  const auto chains = simulate_chains(t, t, 1.0, 20000, 32);
  std::vector<double> f_kernel;
  for (const auto& c : chains) f_kernel.push_back(c.final / c.max);
  std::sort(f_kernel.begin(), f_kernel.end());
  auto ecdf = [&](double v) {
    return static_cast<double>(std::upper_bound(f_kernel.begin(), f_kernel.end(), v) - f_kernel.begin()) /
           static_cast<double>(f_kernel.size());
  };
  const auto ks = stats::ks_weighted(f_path, w, ecdf);
  EXPECT_GT(ks.p_value, 0.01) << ks.statistic;
}
