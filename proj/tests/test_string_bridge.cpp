#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bilateral/string_bridge.hpp"

using namespace bilateral;

namespace {

MonotoneTable power_H(double gamma, double hi = 1e4) {
  return MonotoneTable::power_law(1.0, gamma, log_grid(1e-10, hi, 20));
}

MonotoneTable brownian_H() {
  const auto grid = log_grid(1e-9, 60.0, 40);
  std::vector<double> y;
  for (double x : grid) y.push_back(std::tanh(x / 2));
  return MonotoneTable(grid, y);
}

double slope(const MonotoneTable& t, double lo, double hi) {
  return std::log(t(hi) / t(lo)) / std::log(hi / lo);
}

}  // namespace

TEST(BuildString, QuarterPowerClosedForms) {
  const auto H = power_H(0.25);
  const auto str = build_string(H);
  for (double x : {1e-6, 1e-3, 0.5, 2.0, 300.0}) {
    EXPECT_NEAR(str.s(x) / (2 * std::sqrt(x)), 1.0, 1e-8) << x;
    const double y = str.s(x);
    EXPECT_NEAR(str.m_of_s(y) / (y * y * y / 48), 1.0, 1e-8) << x;
    EXPECT_NEAR(str.s_inverse(y) / x, 1.0, 1e-8);
    EXPECT_NEAR(str.exponential_type(y) / (x / 2), 1.0, 1e-8);
  }
  StringOptions lit;
  lit.rule = MassRule::literal;
  const auto str4 = build_string(H, lit);
  const double y = str4.s(3.0);
  EXPECT_NEAR(str4.m_of_s(y) / (std::pow(y, 4) / 128), 1.0, 1e-8);
}

TEST(BuildString, CompositionMatchesDirectIntegral) {
  const auto grid = log_grid(1e-8, 1e3, 25);
  std::vector<double> y;
  for (double x : grid) y.push_back(std::pow(x, 0.3) / (1 + std::pow(x, 0.3)));
  const MonotoneTable H(grid, y);
  for (auto rule : {MassRule::consistent, MassRule::literal}) {
    StringOptions o;
    o.rule = rule;
    const auto str = build_string(H, o);
    const auto nodes = str.s.xs();
    for (std::size_t k = 0; k < nodes.size(); k += 97) {
      const double x = nodes[k];
      const double direct = string_mass_direct(H, x, rule);
      EXPECT_NEAR(str.m_of_s(str.s(x)) / direct, 1.0, 1e-8) << x;
    }
  }
}

TEST(BuildString, PowerLawExponents) {
  const double g = 0.3;
  const auto str = build_string(power_H(g));
  EXPECT_NEAR(slope(str.s, 1e-4, 1e2), 1 - 2 * g, 0.01 * (1 - 2 * g));
  MonotoneTable ms_of_x(std::vector<double>{1e-4, 1e2},
                        std::vector<double>{str.m_of_s(str.s(1e-4)), str.m_of_s(str.s(1e2))});
  EXPECT_NEAR(slope(ms_of_x, 1e-4, 1e2), 2 * g + 1, 0.01 * (2 * g + 1));
}

TEST(BuildString, LinearFrontIsUnboundedVariation) {
  try {
    build_string(power_H(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unbounded_variation);
  }
}

TEST(BuildString, AgreesWithBoundedVariationPredicate) {
  for (double alpha : {0.4, 0.8, 1.2}) {
    const auto model = LevyModel::stable(alpha);
    bool finite = true;
    try {
      build_string(power_H(alpha / 2));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::unbounded_variation);
      finite = false;
    }
    EXPECT_EQ(finite, bounded_variation(model)) << alpha;
  }
}

TEST(SpectralIdentity, SecondCaseStableHalf) {
  const auto model = LevyModel::stable(0.5, 0.0, Killing::lebesgue_proxy);
  const std::vector<double> ls = {0.25, 0.5, 1.0, 2.0, 4.0};
  const auto rep = verify_spectral_identity(model, KillingCase::second, ls);
  EXPECT_NEAR(rep.slope, -0.5, 0.02);
  EXPECT_LT(rep.dispersion, 0.01);
  EXPECT_NEAR(rep.reference_slope, -0.5, 1e-6);
}

TEST(SpectralIdentity, LiteralMassRuleChangesTheScaling) {
  // Integrating H^4/4 in the original coordinate yields m(y) ~ y^4, whose
  // spectral density grows like u^{3/5}.
  const auto model = LevyModel::stable(0.5, 0.0, Killing::lebesgue_proxy);
  const std::vector<double> ls = {0.25, 0.5, 1.0, 2.0, 4.0};
  SpectralIdentityOptions o;
  o.rule = MassRule::literal;
  const auto rep = verify_spectral_identity(model, KillingCase::second, ls, o);
  EXPECT_NEAR(rep.slope, -0.4, 1e-3);
  EXPECT_GT(rep.dispersion, 0.1);
}

TEST(SpectralIdentity, BrownianHasNoString) {
  const std::vector<double> ls = {0.5, 1.0};
  try {
    verify_spectral_identity(LevyModel::brownian(Killing::lebesgue_proxy), KillingCase::second, ls);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unbounded_variation);
  }
}

TEST(WienerHopf, DeadProcessGivesZero) {
  const auto dead = LevyModel::custom(MonotoneTable({0.0, 1.0, 10.0}, {0.0, 0.0, 0.0}));
  EXPECT_EQ(wh_log_laplace(dead, 1.3), 0.0);
  EXPECT_NEAR(std::abs(wh_log_laplace_general(dead, 1.3)), 0.0, 1e-15);
}

TEST(WienerHopf, BrownianClosedForms) {
  const auto b = LevyModel::brownian();
  EXPECT_NEAR(wh_log_laplace(b, 1.0), 2 * std::numbers::ln2, 1e-9);
  for (double l : {0.5, 1.0, 3.0}) {
    EXPECT_NEAR(wh_log_laplace(b, l), 2 * std::log1p(l), 1e-9);
    EXPECT_NEAR(wh_log_laplace_general(b, l).real(), std::log1p(l), 1e-9);
  }
}

TEST(WienerHopf, GeneralFormIsHalfTheSymmetricForm) {
  for (double alpha : {0.5, 1.0, 1.5}) {
    const auto m = LevyModel::stable(alpha);
    for (double l : {0.3, 1.0, 4.0}) {
      const auto g = wh_log_laplace_general(m, l);
      EXPECT_NEAR(g.real(), 0.5 * wh_log_laplace(m, l), 1e-8) << alpha << " " << l;
      EXPECT_NEAR(g.imag(), 0.0, 1e-10);
    }
  }
}

TEST(WienerHopf, IncreasingAndConcave) {
  // log(1 + (lambda w)^alpha) is concave in lambda for alpha <= 1.
  const auto m = LevyModel::stable(0.5);
  std::vector<double> ls;
  for (int i = 1; i <= 40; ++i) ls.push_back(0.25 * i);
  std::vector<double> v;
  for (double l : ls) v.push_back(wh_log_laplace(m, l));
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GT(v[i], v[i - 1]);
  for (std::size_t i = 1; i + 1 < v.size(); ++i) EXPECT_LE(v[i + 1] - 2 * v[i] + v[i - 1], 1e-10);
}

TEST(WienerHopf, BrownianMonteCarloFollowsGeneralForm) {
  const std::vector<double> ls = {0.0, 1.0, 2.0};
  const auto rep = verify_wiener_hopf(LevyModel::brownian(), ls, 20000, 0.01, 11);
  EXPECT_EQ(rep.points[0].mc_mean, 1.0);
  EXPECT_EQ(rep.points[0].symmetric_form, 1.0);
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto& p = rep.points[i];
    EXPECT_NEAR(p.general_form, 1 / (1 + ls[i]), 1e-9);
    EXPECT_NEAR(p.mc_mean, p.general_form, 3.5 * p.mc_std_error) << ls[i];
  }
}

TEST(WienerHopf, SkewedMonteCarloFollowsGeneralForm) {
  const auto m = LevyModel::stable(1.5, 0.5);
  const std::vector<double> ls = {1.0};
  const auto g = wh_log_laplace_general(m, 1.0);
  auto recs = simulate_batch(m, 1e-3, 4000, 5);
  std::vector<double> v;
  for (const auto& r : recs) v.push_back(std::exp(-(r.final - r.min)));
  const auto est = stats::mean_and_error(v);
  EXPECT_NEAR(est.mean, std::exp(-g.real()), 4 * est.std_error + 3e-3);
}

TEST(UnboundedTransform, BrownianRatioAndImpliedTime) {
  const auto H = brownian_H();
  const auto u = unbounded_transform(H, 2.0, LevyModel::brownian());
  ASSERT_FALSE(u.xs.empty());
  for (std::size_t i = 0; i < u.xs.size(); ++i) {
    const double x = u.xs[i];
    EXPECT_NEAR(u.ratio_at_one[i] / (2 * std::tanh(x / 2)), 1.0, 1e-3) << x;
    // With 1/(1 - lambda^2) the identity holds for t(x) = x / 2.
    EXPECT_NEAR(u.t_implied_flipped[i], x / 2, 5e-4) << x;
    EXPECT_TRUE(std::isnan(u.t_implied[i]));
    EXPECT_GT(u.D_tilde[i], 0.0);
    if (i > 0) EXPECT_LT(u.D_tilde[i], u.D_tilde[i - 1]);
  }
  EXPECT_GT(u.D_tilde.front(), 100 * u.D_tilde.back());
}

TEST(UnboundedTransform, RatioTimeChangeBlowsUpAtOrigin) {
  // x + ratio / H^2 behaves like 4 / x near 0.
  const auto u = unbounded_transform(brownian_H(), 2.0, LevyModel::brownian());
  EXPECT_NEAR(u.t_values.front() * u.xs.front() / 4, 1.0, 1e-2);
  EXPECT_FALSE(u.t_increasing);
  EXPECT_GT(u.sup_residual, 0.5);
}

TEST(UnboundedTransform, RejectsPoleAndUnknownStrings) {
  const auto H = brownian_H();
  try {
    unbounded_transform(H, 1.0, LevyModel::brownian());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::pole);
  }
  try {
    unbounded_transform(H, 2.0, LevyModel::stable(1.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unsupported_model);
  }
}

TEST(CompleteH, SyntheticBrownianTable) {
  const auto grid = log_grid(1e-3, 30.0, 10);
  std::vector<double> y;
  for (double x : grid) y.push_back(std::tanh(x / 2));
  const auto H = complete_first_case_H(MonotoneTable(grid, y), LevyModel::brownian(), FirstCaseHOptions{});
  EXPECT_NEAR(H.front_exponent(), 1.0, 1e-6);
  EXPECT_NEAR(H(1e-5) / 5e-6, 1.0, 0.05);
  EXPECT_LE(H.y_back(), 1.0);
  EXPECT_NEAR(H(8.0), std::tanh(4.0), 1e-3);
}
