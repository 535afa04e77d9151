#include <gtest/gtest.h>

#include <cmath>

#include "bilateral/phi_system.hpp"
#include "bilateral/stable_forms.hpp"

using namespace bilateral;

namespace {

MonotoneTable power_table(double exponent, double c = 1.0) {
  return MonotoneTable::power_law(c, exponent, log_grid(1e-9, 100.0, 40));
}

}  // namespace

TEST(SolvePhi, ZeroLambdaReproducesTables) {
  const auto hp = power_table(0.3), hm = power_table(0.6);
  const auto grid = log_grid(0.01, 5.0, 200);
  const auto pair = solve_phi(hp, hm, 0.0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(pair.plus.phi[i].real(), hp(grid[i]), 1e-12 * hp(grid[i]));
    EXPECT_NEAR(pair.plus.phi_check[i].real(), hm(grid[i]), 1e-12 * hm(grid[i]));
  }
}

TEST(SolvePhi, SymmetricTablesGiveEqualPair) {
  const auto h = power_table(0.25);
  const auto grid = log_grid(0.01, 5.0, 200);
  const auto pair = solve_phi(h, h, 1.5, grid);
  // The dual function at -lambda is the same function as phi at -lambda.
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(std::abs(pair.minus.phi[i] - pair.plus.phi_check[i]), 0.0, 1e-12 * std::abs(pair.minus.phi[i]));
    EXPECT_NEAR(std::abs(pair.plus.phi[i] - pair.minus.phi_check[i]), 0.0, 1e-12 * std::abs(pair.plus.phi[i]));
  }
}

TEST(SolvePhi, MatchesConfluentClosedForm) {
  const auto h = power_table(0.5);
  const auto grid = log_grid(0.1, 1.0, 200);
  const PositivityParams p{0.5, 0.5};
  for (double lam : {0.5, 1.0, 2.0}) {
    const auto pair = solve_phi(h, h, lam, grid);
    const double k = fit_phi_constant(p, grid, pair.plus.phi, lam);
    EXPECT_NEAR(k, 1.0, 1e-4);
    const StableFluctuationLaw law{p, k, 1.0};
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto ref = phi_closed(law, grid[i], lam);
      worst = std::max(worst, std::abs(pair.plus.phi[i] / ref - 1.0));
    }
    EXPECT_LT(worst, 1e-4) << lam;
  }
  // Ratio form: phi(1,1) / phi(1,0) = betahat_{1/2,3/2}(1).
  const auto pair = solve_phi(h, h, 1.0, grid);
  EXPECT_NEAR(pair.plus.phi.back().real() / h(1.0), beta_laplace({0.5, 1.5}, 1.0), 1e-4);
}

TEST(SolvePhi, AsymmetricClosedForm) {
  // H = x^gamma, dual x^delta with gamma != delta.
  const double g = 0.7, d = 0.4;
  const auto hp = power_table(g), hm = power_table(d);
  const auto grid = log_grid(0.05, 3.0, 200);
  const PositivityParams p{g, d};
  const auto pair = solve_phi(hp, hm, 1.3, grid);
  const double k = fit_phi_constant(p, grid, pair.plus.phi, 1.3);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    worst = std::max(worst, std::abs(pair.plus.phi[i] / phi_closed({p, k, 1.0}, grid[i], 1.3) - 1.0));
  EXPECT_LT(worst, 1e-4);
}

TEST(SolvePhi, ReconstructionResidual) {
  // Each cell's increment matches an independent Simpson quadrature of the
  // right-hand side against H(dx) = H'(x) dx.
  const double g = 0.5;
  const auto h = power_table(g);
  const auto grid = log_grid(0.01, 2.0, 200);
  const std::complex<double> lam(0.8, 0.0);
  const auto pair = solve_phi(h, h, lam, grid);
  auto rhs = [&](double x, std::complex<double> v) { return std::exp(-lam * x) * v / h(x) * g * std::pow(x, g - 1); };
  for (std::size_t i = 10; i + 1 < grid.size(); i += 37) {
    const double a = grid[i], b = grid[i + 1];
    const auto va = pair.plus.phi_check[i], vb = pair.plus.phi_check[i + 1];
    const auto vm = 0.5 * (va + vb);
    const auto simpson = (b - a) / 6.0 * (rhs(a, va) + 4.0 * rhs(0.5 * (a + b), vm) + rhs(b, vb));
    const auto inc = pair.plus.phi[i + 1] - pair.plus.phi[i];
    EXPECT_LT(std::abs(inc - simpson), 1e-6 * std::abs(pair.plus.phi[i + 1]));
  }
}

TEST(SolvePhi, ConjugationForImaginaryLambda) {
  const auto h = power_table(0.5);
  const auto grid = log_grid(0.01, 3.0, 200);
  const std::complex<double> lam(0.0, 2.0);
  const auto a = solve_phi(h, h, lam, grid);
  const auto b = solve_phi(h, h, std::conj(lam), grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    EXPECT_NEAR(std::abs(a.plus.phi[i] - std::conj(b.plus.phi[i])), 0.0, 1e-12);
}

TEST(SolvePhi, DominatedByH) {
  const auto h = power_table(0.35);
  const auto grid = log_grid(0.01, 10.0, 200);
  for (std::complex<double> lam : {std::complex<double>(0.5, 0), {2.0, 3.0}, {0.0, 5.0}}) {
    const auto pair = solve_phi(h, h, lam, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_LE(std::abs(pair.plus.phi[i]), h(grid[i]) * (1 + 1e-9));
  }
}

TEST(SolvePhi, Errors) {
  const MonotoneTable zero_front({0.5, 1.0, 2.0}, {0.0, 0.0, 1.0});
  const auto grid = log_grid(0.6, 1.5, 50);
  EXPECT_THROW(solve_phi(zero_front, zero_front, 1.0, grid), Error);
  const auto h = power_table(0.5);
  EXPECT_THROW(solve_phi(h, h, 1.0, std::vector<double>{}), Error);
}

TEST(AFromPhi, ZeroLambdaAndSmallX) {
  const auto h = power_table(0.25);
  const auto grid = log_grid(1e-7, 10.0, 200);
  const auto a0 = a_from_phi(solve_phi(h, h, 0.0, grid), h);
  for (const auto& v : a0) EXPECT_NEAR(v.real(), 1.0, 1e-12);
  const auto a = a_from_phi(solve_phi(h, h, 2.0, grid), h);
  EXPECT_NEAR(a.front().real(), 1.0, 1e-5);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_GE(a[i].real(), a[i - 1].real() - 1e-12);
}

TEST(AFromPhi, DerivativeMatchesFiniteDifference) {
  const auto h = power_table(0.25);
  const auto grid = log_grid(1e-3, 5.0, 400);
  const auto pair = solve_phi(h, h, 1.0, grid);
  const auto a = a_from_phi(pair, h);
  const auto d = a_prime_from_phi(pair, h);
  for (std::size_t i = 50; i + 1 < grid.size(); i += 101) {
    const double fd = (a[i + 1].real() - a[i - 1].real()) / (grid[i + 1] - grid[i - 1]);
    EXPECT_NEAR(fd, d[i].real(), 1e-4 * std::abs(d[i].real()) + 1e-9);
  }
}
