#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "bilateral/error.hpp"
#include "bilateral/levy_models.hpp"
#include "bilateral/parallel.hpp"
#include "bilateral/rng.hpp"
#include "bilateral/specfun.hpp"

namespace bilateral {

struct StableFluctuationLaw {
  PositivityParams params;
  double k = 1.0;  // phi(x, l) = k x^gamma betahat(l x)
  double c = 1.0;  // H(x) = c x^gamma
};

/// k x^gamma betahat_{gamma, delta + 1}(lambda x).
inline std::complex<double> phi_closed(const StableFluctuationLaw& law, double x, std::complex<double> lambda) {
  require(x > 0, Errc::domain, "phi_closed needs x > 0");
  const BetaParams p(law.params.gamma, law.params.delta + 1);
  return law.k * std::pow(x, law.params.gamma) * beta_laplace(p, lambda * x);
}

/// Least-squares k matching phi values on a grid for one lambda.
inline double fit_phi_constant(const PositivityParams& params, std::span<const double> xs,
                               std::span<const std::complex<double>> phi, std::complex<double> lambda) {
  require(xs.size() == phi.size() && !xs.empty(), Errc::domain, "fit_phi_constant: shape mismatch");
  StableFluctuationLaw unit{params, 1.0, 1.0};
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    // Relative weighting: each point contributes |phi/f - k|^2.
    const auto f = phi_closed(unit, xs[i], lambda);
    const auto w = 1.0 / std::norm(f);
    num += w * std::real(phi[i] * std::conj(f));
    den += w * std::norm(f);
  }
  return num / den;
}

/// Least-squares c in H(x) = c x^gamma, relative weighting.
inline double fit_power_constant(double gamma, std::span<const double> xs, std::span<const double> hs) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] <= 0 || hs[i] <= 0) continue;
    s += hs[i] / std::pow(xs[i], gamma);
    ++n;
  }
  require(n > 0, Errc::domain, "fit_power_constant: no positive points");
  return s / static_cast<double>(n);
}

/// P(T^a < T_b) = I_{b/(a+b)}(gamma, delta).
inline double exit_probability(const PositivityParams& params, double a, double b) {
  require(a > 0 && b > 0, Errc::domain, "exit_probability needs a, b > 0");
  return incomplete_beta({params.gamma, params.delta}, b / (a + b));
}

/// Gamma(gamma+1) Gamma(delta+1) / Gamma(alpha+1)^2 * x^gamma y^delta.
inline double bivariate_occupation(const PositivityParams& params, double alpha, double x, double y) {
  require(x >= 0 && y >= 0, Errc::domain, "bivariate_occupation needs x, y >= 0");
  require(std::abs(params.gamma + params.delta - alpha) < 1e-12, Errc::domain, "need gamma + delta = alpha");
  if (x == 0 || y == 0) return 0.0;
  const double lg = log_gamma(params.gamma + 1) + log_gamma(params.delta + 1) - 2 * log_gamma(alpha + 1);
  return std::exp(lg) * std::pow(x, params.gamma) * std::pow(y, params.delta);
}

/// Expected exit time of [-y, x] for the |u|^alpha normalization,
/// x^gamma y^delta / Gamma(alpha + 1).
inline double expected_exit_time(const PositivityParams& params, double alpha, double x, double y) {
  require(x >= 0 && y >= 0, Errc::domain, "expected_exit_time needs x, y >= 0");
  return std::pow(x, params.gamma) * std::pow(y, params.delta) / gamma_fn(alpha + 1);
}

/// Gamma(delta + 1) / Gamma(alpha + 1).
inline double meander_ratio(double alpha, double delta) {
  require(delta > 0 && delta <= alpha && alpha <= 2, Errc::domain, "meander_ratio needs 0 < delta <= alpha <= 2");
  return std::exp(log_gamma(delta + 1) - log_gamma(alpha + 1));
}

/// Law of F/M: beta(gamma + 1, delta).
inline BetaParams final_over_max_law(const PositivityParams& params) {
  return {params.gamma + 1, params.delta};
}

struct ExitEstimate {
  double coarse = 0.0;        // step 2 dt
  double fine = 0.0;          // step dt
  double extrapolated = 0.0;  // Richardson in dt with the given order
  double std_error = 0.0;     // of the extrapolated value
  double order = 1.0;
  std::size_t n_paths = 0;
};

namespace detail {

struct CoupledExit {
  double fine_value, coarse_value;
};

// One path on the fine grid; the coarse walk reads every other point.
template <class Functional>
CoupledExit coupled_exit(const LevyModel& model, double dt, double a, double b, Rng& rng, Functional&& value) {
  const double scale = std::pow(dt, 1.0 / model.alpha);
  double x = 0.0;
  std::size_t k = 0;
  bool fine_done = false;
  CoupledExit out{0, 0};
  while (true) {
    x += scale * stable_variate(model, rng);
    ++k;
    const bool outside = x > a || x < -b;
    if (outside && !fine_done) {
      out.fine_value = value(x > a, static_cast<double>(k) * dt);
      fine_done = true;
    }
    if (outside && k % 2 == 0) {
      out.coarse_value = value(x > a, static_cast<double>(k) * dt);
      return out;
    }
  }
}

template <class Functional>
ExitEstimate coupled_exit_estimate(const LevyModel& model, double a, double b, std::size_t n_paths, double dt,
                                   std::uint64_t seed, unsigned workers, double order, Functional&& value) {
  require(a > 0 && b > 0 && dt > 0, Errc::domain, "exit estimate needs a, b, dt > 0");
  require(n_paths >= 2, Errc::insufficient_sample, "exit estimate needs paths");
  require(model.family != Family::custom, Errc::unsupported_model, "no path sampler for a tabulated exponent");
  const auto runs = parallel_map(n_paths, workers, [&](std::size_t i) {
    Rng rng(seed, i);
    return coupled_exit(model, dt, a, b, rng, value);
  });
  const double w = std::pow(2.0, order);
  double sf = 0, sc = 0, se = 0, se2 = 0;
  for (const auto& r : runs) {
    sf += r.fine_value;
    sc += r.coarse_value;
    const double e = (w * r.fine_value - r.coarse_value) / (w - 1);
    se += e;
    se2 += e * e;
  }
  const double n = static_cast<double>(n_paths);
  ExitEstimate out;
  out.fine = sf / n;
  out.coarse = sc / n;
  out.extrapolated = se / n;
  out.std_error = std::sqrt(std::max(0.0, se2 / n - out.extrapolated * out.extrapolated) / (n - 1));
  out.order = order;
  out.n_paths = n_paths;
  return out;
}

}  // namespace detail

/// Monte-Carlo P(T^a < T_b): exit declared at the first grid point outside
/// [-b, a]; fine (dt) and coarse (2 dt) walks share increments and are
/// combined by Richardson extrapolation of the given order in dt (default
/// 1/alpha, the monitoring-bias order).
inline ExitEstimate exit_probability_mc(const LevyModel& model, double a, double b, std::size_t n_paths, double dt,
                                        std::uint64_t seed, unsigned workers = 1, double order = 0.0) {
  if (order <= 0) order = 1.0 / model.alpha;
  return detail::coupled_exit_estimate(model, a, b, n_paths, dt, seed, workers, order,
                                       [](bool upper, double) { return upper ? 1.0 : 0.0; });
}

/// Monte-Carlo expected exit time of [-y, x], i.e. the time integral of
/// P(S_t <= x, -I_t <= y).
inline ExitEstimate occupation_mc(const LevyModel& model, double x, double y, std::size_t n_paths, double dt,
                                  std::uint64_t seed, unsigned workers = 1, double order = 0.0) {
  if (order <= 0) order = 1.0 / model.alpha;
  return detail::coupled_exit_estimate(model, x, y, n_paths, dt, seed, workers, order,
                                       [](bool, double t) { return t; });
}

}  // namespace bilateral
