#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>

#include "bilateral/error.hpp"
#include "bilateral/monotone_table.hpp"
#include "bilateral/rng.hpp"

namespace bilateral {

enum class Family { symmetric_stable, brownian, custom };

/// exponential: killed at an independent exponential time (first case).
/// lebesgue_proxy: time weighted by Lebesgue measure, approached through a
/// schedule of vanishing exponential rates starting at `rate` (second case).
enum class Killing { exponential, lebesgue_proxy };

struct LevyModel {
  Family family = Family::symmetric_stable;
  double alpha = 1.0;
  double skew = 0.0;
  Killing killing = Killing::exponential;
  double rate = 1.0;
  /// Exponent on u >= 0 for the custom family, extended evenly.
  std::shared_ptr<const MonotoneTable> custom_psi;

  static LevyModel stable(double alpha, double skew = 0.0, Killing killing = Killing::exponential,
                          double rate = 1.0) {
    LevyModel m;
    m.family = Family::symmetric_stable;
    m.alpha = alpha;
    m.skew = skew;
    m.killing = killing;
    m.rate = rate;
    m.validate();
    return m;
  }

  static LevyModel brownian(Killing killing = Killing::exponential, double rate = 1.0) {
    LevyModel m;
    m.family = Family::brownian;
    m.alpha = 2.0;
    m.killing = killing;
    m.rate = rate;
    m.validate();
    return m;
  }

  static LevyModel custom(MonotoneTable psi_table, Killing killing = Killing::exponential,
                          double rate = 1.0) {
    LevyModel m;
    m.family = Family::custom;
    m.alpha = std::numeric_limits<double>::quiet_NaN();
    m.killing = killing;
    m.rate = rate;
    m.custom_psi = std::make_shared<const MonotoneTable>(std::move(psi_table));
    m.validate();
    return m;
  }

  void validate() const {
    require(rate > 0 && std::isfinite(rate), Errc::domain, "killing rate must be positive");
    switch (family) {
      case Family::symmetric_stable:
        require(alpha > 0 && alpha <= 2, Errc::domain, "alpha must lie in (0,2]");
        require(skew >= -1 && skew <= 1, Errc::domain, "skew must lie in [-1,1]");
        require(!(alpha == 1.0 && skew != 0.0), Errc::unsupported_model,
                "skewed Cauchy is not strictly stable");
        require(!(alpha == 2.0 && skew != 0.0), Errc::domain, "skew is meaningless at alpha = 2");
        break;
      case Family::brownian:
        require(alpha == 2.0 && skew == 0.0, Errc::domain, "brownian has alpha = 2, no skew");
        break;
      case Family::custom:
        require(custom_psi != nullptr, Errc::domain, "custom family needs an exponent table");
        require(custom_psi->x_front() == 0.0 && custom_psi->ys().front() == 0.0, Errc::domain,
                "custom exponent must start at psi(0) = 0");
        require(skew == 0.0, Errc::domain, "custom exponents are symmetric");
        break;
    }
  }

  bool symmetric() const { return skew == 0.0; }
  bool first_case() const { return killing == Killing::exponential; }
};

/// Characteristic exponent with E exp(-iuX_t) = exp(-t psi(u)), psi(u) = |u|^alpha.
inline double psi(const LevyModel& model, double u) {
  require(model.skew == 0.0, Errc::unsupported_model, "psi: skewed exponents are complex");
  const double au = std::abs(u);
  switch (model.family) {
    case Family::brownian: return au * au;
    case Family::symmetric_stable: return std::pow(au, model.alpha);
    case Family::custom: return (*model.custom_psi)(au);
  }
  return 0.0;
}

/// Complex exponent, defined for skewed stable laws as well.
inline std::complex<double> psi_complex(const LevyModel& model, double u) {
  if (model.skew == 0.0) return psi(model, u);
  const double t = std::tan(std::numbers::pi * model.alpha / 2);
  const double s = u > 0 ? 1.0 : (u < 0 ? -1.0 : 0.0);
  return std::pow(std::abs(u), model.alpha) * std::complex<double>(1.0, model.skew * s * t);
}

struct PositivityParams {
  double gamma;
  double delta;
  double std_error = 0.0;

  double alpha() const { return gamma + delta; }
};

/// Exact positivity parameters from P(X_1 > 0) = 1/2 + arctan(beta tan(pi alpha/2)) / (pi alpha).
inline PositivityParams positivity_exact(const LevyModel& model) {
  switch (model.family) {
    case Family::brownian: return {1.0, 1.0};
    case Family::custom:
      throw Error(Errc::unsupported_model, "positivity parameters need a stable family");
    case Family::symmetric_stable: break;
  }
  const double a = model.alpha;
  if (model.skew == 0.0) return {a / 2, a / 2};
  const double rho = 0.5 + std::atan(model.skew * std::tan(std::numbers::pi * a / 2)) / (std::numbers::pi * a);
  return {a * rho, a - a * rho};
}

/// Standard strictly stable variate (unit scale, exponent |u|^alpha).
inline double stable_variate(const LevyModel& model, Rng& rng) {
  using std::numbers::pi;
  const double a = model.alpha;
  if (a == 2.0) return std::sqrt(2.0) * rng.normal();
  const double v = pi * (rng.uniform() - 0.5);
  if (a == 1.0) return std::tan(v);
  const double w = rng.exponential();
  if (model.skew == 0.0) {
    return std::sin(a * v) / std::pow(std::cos(v), 1.0 / a) *
           std::pow(std::cos((1.0 - a) * v) / w, (1.0 - a) / a);
  }
  const double t = model.skew * std::tan(pi * a / 2);
  const double shift = std::atan(t) / a;
  const double scale = std::pow(1.0 + t * t, 1.0 / (2.0 * a));
  return scale * std::sin(a * (v + shift)) / std::pow(std::cos(v), 1.0 / a) *
         std::pow(std::cos(v - a * (v + shift)) / w, (1.0 - a) / a);
}

/// Increment over a time step dt.
inline double stable_increment(const LevyModel& model, double dt, Rng& rng) {
  require(model.family != Family::custom, Errc::unsupported_model,
          "no path sampler for a tabulated exponent");
  return std::pow(dt, 1.0 / model.alpha) * stable_variate(model, rng);
}

/// Positivity parameters; Monte Carlo for skewed stable laws.
inline PositivityParams positivity_params(const LevyModel& model, std::uint64_t n_mc, std::uint64_t seed) {
  if (model.family != Family::symmetric_stable || model.skew == 0.0) return positivity_exact(model);
  require(n_mc > 0, Errc::insufficient_sample, "skewed positivity needs Monte Carlo draws");
  Rng rng(seed);
  std::uint64_t positive = 0;
  for (std::uint64_t i = 0; i < n_mc; ++i) positive += stable_variate(model, rng) > 0;
  const double p = static_cast<double>(positive) / static_cast<double>(n_mc);
  const double a = model.alpha;
  return {a * p, a - a * p, a * std::sqrt(p * (1 - p) / static_cast<double>(n_mc))};
}

/// Bounded variation of paths. For a tabulated exponent the test is the
/// integrability of psi(u)/u^2 at infinity, read off the last decade slope.
inline bool bounded_variation(const LevyModel& model) {
  switch (model.family) {
    case Family::brownian: return false;
    case Family::symmetric_stable: return model.alpha < 1.0;
    case Family::custom: break;
  }
  const auto& t = *model.custom_psi;
  const auto xs = t.xs();
  const auto ys = t.ys();
  const double top = xs.back();
  std::size_t i = xs.size() - 1;
  while (i > 0 && xs[i - 1] >= top / 10) --i;
  require(i > 0 && xs[i - 1] > 0 && top / xs[i - 1] >= 9.99 && ys[i - 1] > 0, Errc::precondition,
          "exponent table too short to decide bounded variation");
  const double slope = std::log(ys.back() / ys[i - 1]) / std::log(top / xs[i - 1]);
  require(std::abs(slope - 1.0) > 0.05, Errc::precondition,
          "exponent tail slope too close to 1 to decide bounded variation");
  return slope < 1.0;
}

}  // namespace bilateral
