#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bilateral/error.hpp"
#include "bilateral/krein_string.hpp"
#include "bilateral/levy_models.hpp"
#include "bilateral/monotone_table.hpp"
#include "bilateral/path_sim.hpp"
#include "bilateral/phi_system.hpp"
#include "bilateral/quadrature.hpp"
#include "bilateral/specfun.hpp"
#include "bilateral/stats.hpp"

namespace bilateral {

/// How the string mass is read off H. `consistent` uses dm/dx = H^2 / 4
/// (density H^4 / 4 in the string coordinate); `literal` integrates H^4 / 4
/// in the original coordinate.
enum class MassRule { consistent, literal };

struct StringOfH {
  MonotoneTable s;          // x -> s(x) = integral_0^x H^-2
  MonotoneTable s_inverse;  // s -> x
  MonotoneTable m_of_s;     // the string mass in its own coordinate
  MonotoneTable exponential_type;  // s -> integral_0^s sqrt(dm/ds)
  StringMeasure measure;
  double gamma = 0.0;  // front exponent of H
  MassRule rule = MassRule::consistent;
};

struct StringOptions {
  double x_lo = 0.0;   // first node (default: the first table node)
  double x_max = 0.0;  // last node (default: the last table node)
  int points_per_decade = 100;
  MassRule rule = MassRule::consistent;
};

/// The string associated with H when integral_0 H^-2 is finite. Below x_lo H is
/// taken as its front power law c x^gamma, whose integrals are closed form.
inline StringOfH build_string(const MonotoneTable& H, const StringOptions& opt = {}) {
  const double gamma = H.front_exponent();
  require(!std::isnan(gamma), Errc::precondition, "H has no power-law front");
  if (2 * gamma >= 1) {
    throw Error(Errc::unbounded_variation,
                "integral of H^-2 diverges at 0 (front exponent " + std::to_string(gamma) +
                    "); use the unbounded-variation transform");
  }
  const double x_lo = opt.x_lo > 0 ? opt.x_lo : H.x_front();
  const double x_max = opt.x_max > 0 ? opt.x_max : H.x_back();
  require(x_max > x_lo, Errc::domain, "build_string needs x_max > x_lo");
  auto xs = log_grid(x_lo, x_max, opt.points_per_decade);
  for (double x : H.xs())
    if (x > x_lo && x < x_max) xs.push_back(x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(), [](double a, double b) { return b - a <= 1e-14 * b; }), xs.end());
  for (double x : xs) require(H(x) > 0, Errc::singular_system, "H vanishes on the string grid");

  const bool literal = opt.rule == MassRule::literal;
  const double mass_power = literal ? 4.0 : 2.0;
  const double h0 = H(x_lo);
  auto inv_sq = [&](double x) { return 1.0 / (H(x) * H(x)); };
  auto mass_density = [&](double x) { return 0.25 * std::pow(H(x), mass_power); };
  // dm/ds = H^(p+2) / 4, so dtau/dx = sqrt(dm/ds) ds/dx = H^(p/2 - 1) / 2.
  auto type_density = [&](double x) { return 0.5 * std::pow(H(x), 0.5 * mass_power - 1.0); };

  const std::size_t n = xs.size();
  std::vector<double> s(n), m(n), tau(n);
  s[0] = x_lo / (h0 * h0 * (1 - 2 * gamma));
  m[0] = 0.25 * x_lo * std::pow(h0, mass_power) / (mass_power * gamma + 1);
  tau[0] = 0.5 * x_lo * std::pow(h0, 0.5 * mass_power - 1.0) / ((0.5 * mass_power - 1.0) * gamma + 1);
  for (std::size_t i = 1; i < n; ++i) {
    const double a = xs[i - 1], b = xs[i];
    s[i] = s[i - 1] + quad::gauss_kronrod(inv_sq, a, b, 1e-12).value;
    m[i] = m[i - 1] + quad::gauss_kronrod(mass_density, a, b, 1e-12).value;
    tau[i] = tau[i - 1] + quad::gauss_kronrod(type_density, a, b, 1e-12).value;
  }
  StringOfH out;
  out.gamma = gamma;
  out.rule = opt.rule;
  out.s = MonotoneTable(xs, s);
  out.s_inverse = MonotoneTable(s, xs);
  out.m_of_s = MonotoneTable(s, m);
  out.exponential_type = MonotoneTable(s, tau);
  std::vector<double> nodes(n + 1, 0.0), cum(n + 1, 0.0);
  std::copy(s.begin(), s.end(), nodes.begin() + 1);
  std::copy(m.begin(), m.end(), cum.begin() + 1);
  out.measure = StringMeasure::from_cumulative(std::move(nodes), cum);
  return out;
}

/// Integral of the mass density in the original coordinate, for checking
/// m_of_s(s(x)).
inline double string_mass_direct(const MonotoneTable& H, double x, MassRule rule = MassRule::consistent) {
  const double p = rule == MassRule::literal ? 4.0 : 2.0;
  const double x0 = H.x_front();
  const double gamma = H.front_exponent();
  double total = 0.25 * std::min(x, x0) * std::pow(H(std::min(x, x0)), p) / (p * gamma + 1);
  if (x > x0) {
    // Split at table nodes, where the interpolant has kinks.
    double a = x0;
    for (double node : H.xs()) {
      if (node <= a) continue;
      const double b = std::min(node, x);
      total += quad::gauss_kronrod([&](double t) { return 0.25 * std::pow(H(t), p); }, a, b, 1e-13).value;
      a = b;
      if (a >= x) break;
    }
    if (a < x) total += 0.25 * std::pow(H.y_back(), p) * (x - a);
  }
  return total;
}

/// MC estimate of H in the first case, with a power-law front below the
/// level where the empirical cdf becomes reliable and a fitted tail beyond
/// the level where 1 - H does (power x^-alpha for stable models, exponential
/// for Brownian motion).
struct FirstCaseHOptions {
  std::size_t n_paths = 100000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  double x_lo = 1e-6;
  double x_hi = 1e4;
  int points_per_decade = 10;
  double x_extend = 1e7;
  double front_level = 0.05;
  double tail_level = 0.01;
};

inline MonotoneTable complete_first_case_H(const MonotoneTable& raw, const LevyModel& model,
                                           const FirstCaseHOptions& opt) {
  const auto xs = raw.xs();
  const auto ys = raw.ys();
  const std::size_t n = xs.size();
  const double gamma = positivity_exact(model).gamma;
  std::size_t j0 = 0;
  while (j0 < n && ys[j0] < opt.front_level) ++j0;
  std::size_t jt = n;
  while (jt > 0 && 1.0 - ys[jt - 1] < opt.tail_level) --jt;
  require(j0 + 3 < jt, Errc::insufficient_sample, "too few reliable nodes to complete H");
  --jt;

  std::vector<double> ox, oy;
  double c = 0.0;
  const std::size_t front_fit = std::min<std::size_t>(5, jt - j0);
  for (std::size_t j = j0; j < j0 + front_fit; ++j) c += ys[j] / std::pow(xs[j], gamma);
  c /= static_cast<double>(front_fit);
  for (double x : log_grid(std::min(1e-9, xs[0]), xs[j0], opt.points_per_decade)) {
    if (x >= xs[j0]) break;
    ox.push_back(x);
    oy.push_back(c * std::pow(x, gamma));
  }
  for (std::size_t j = j0; j <= jt; ++j) {
    ox.push_back(xs[j]);
    oy.push_back(ys[j]);
  }
  // Tail fit over the last reliable decade.
  std::vector<double> tx, ty;
  for (std::size_t j = j0; j <= jt; ++j)
    if (xs[j] >= xs[jt] / 10) {
      tx.push_back(xs[j]);
      ty.push_back(1.0 - ys[j]);
    }
  std::function<double(double)> tail;
  if (model.family == Family::brownian || model.alpha >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < tx.size(); ++k) {
      const double ly = std::log(std::max(ty[k], 1e-300));
      sx += tx[k];
      sy += ly;
      sxx += tx[k] * tx[k];
      sxy += tx[k] * ly;
    }
    const double kk = static_cast<double>(tx.size());
    const double b = (kk * sxy - sx * sy) / (kk * sxx - sx * sx);
    const double a = (sy - b * sx) / kk;
    tail = [a, b](double x) { return std::exp(a + b * x); };
  } else {
    double cc = 0.0;
    for (std::size_t k = 0; k < tx.size(); ++k) cc += ty[k] * std::pow(tx[k], model.alpha);
    cc /= static_cast<double>(tx.size());
    const double alpha = model.alpha;
    tail = [cc, alpha](double x) { return cc * std::pow(x, -alpha); };
  }
  if (opt.x_extend > xs[jt])
    for (double x : log_grid(xs[jt], opt.x_extend, opt.points_per_decade)) {
      if (x <= xs[jt]) continue;
      ox.push_back(x);
      oy.push_back(1.0 - tail(x));
    }
  std::vector<double> w(oy.size(), 1.0);
  auto mono = stats::isotonic(oy, w);
  for (double& v : mono) v = std::clamp(v, 0.0, 1.0);
  return MonotoneTable(std::move(ox), std::move(mono));
}

inline MonotoneTable first_case_H(const LevyModel& model, const FirstCaseHOptions& opt = {}) {
  require(model.killing == Killing::exponential, Errc::precondition, "first-case H needs exponential killing");
  const auto grid = log_grid(opt.x_lo, opt.x_hi, opt.points_per_decade);
  const auto est = estimate_H(model, grid, opt.n_paths, opt.dt, opt.seed, opt.workers);
  return complete_first_case_H(est.table, model, opt);
}

enum class KillingCase { first, second };

struct SpectralPoint {
  double lambda = 0.0;
  double transform = 0.0;  // D(0, lambda) of the string
  double reference = 0.0;  // Stieltjes integral of psi (+ 1)
  double ratio = 0.0;
};

struct SpectralReport {
  std::vector<SpectralPoint> points;
  double fitted_constant = 0.0;
  double dispersion = 0.0;  // max |ratio / constant - 1|
  double slope = 0.0;       // log-log slope of D(0, lambda)
  double reference_slope = 0.0;
  std::vector<std::string> warnings;
};

struct SpectralIdentityOptions {
  FirstCaseHOptions h;
  MassRule rule = MassRule::consistent;
  int points_per_decade = 100;
};

namespace detail {

inline double log_log_slope(std::span<const double> x, std::span<const double> y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(x.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// H -> string -> D(0, lambda), compared with the Stieltjes transform of psi
/// (second case) or psi + 1 (first case) up to one fitted constant.
inline SpectralReport verify_spectral_identity(const LevyModel& model, KillingCase kase,
                                               std::span<const double> lambdas,
                                               const SpectralIdentityOptions& opt = {}) {
  model.validate();
  require(model.symmetric(), Errc::unsupported_model, "spectral identification needs a symmetric model");
  require(lambdas.size() >= 2, Errc::domain, "need at least two lambdas");
  for (double l : lambdas) require(l > 0, Errc::domain, "lambdas must be positive");
  if (!bounded_variation(model))
    throw Error(Errc::unbounded_variation, "paths have unbounded variation; the string does not exist");
  const double l_min = *std::min_element(lambdas.begin(), lambdas.end());
  SpectralReport rep;

  MonotoneTable H;
  if (kase == KillingCase::second) {
    require(model.family != Family::custom, Errc::unsupported_model, "second-case H is known for stable models only");
    const double gamma = positivity_exact(model).gamma;
    const double x_hi = std::max(100.0, 200.0 / l_min);
    H = MonotoneTable::power_law(1.0, gamma, log_grid(1e-12, x_hi, 10));
  } else {
    if (opt.h.n_paths < 100000)
      rep.warnings.push_back("MC budget below 1e5 paths: deviations carry a wider tolerance");
    H = first_case_H(model, opt.h);
  }
  StringOptions so;
  so.rule = opt.rule;
  so.points_per_decade = opt.points_per_decade;
  const auto str = build_string(H, so);
  const auto d = spectral_transform(str.measure, lambdas);

  QuadratureSpec q;
  q.u_max = 1e8;
  q.tail_order = model.family == Family::custom ? 0.0 : model.alpha;
  const double shift = kase == KillingCase::first ? 1.0 : 0.0;
  double log_sum = 0.0;
  std::vector<double> refs;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double ref = stieltjes_integral([&](double u) { return psi(model, u) + shift; }, lambdas[i], q);
    refs.push_back(ref);
    rep.points.push_back({lambdas[i], d[i], ref, d[i] / ref});
    log_sum += std::log(d[i] / ref);
  }
  rep.fitted_constant = std::exp(log_sum / static_cast<double>(lambdas.size()));
  for (const auto& p : rep.points) rep.dispersion = std::max(rep.dispersion, std::abs(p.ratio / rep.fitted_constant - 1));
  rep.slope = detail::log_log_slope(lambdas, d);
  rep.reference_slope = detail::log_log_slope(lambdas, refs);
  return rep;
}

/// Symmetric form of the log-Laplace transform of the post-minimum final
/// value, (2 lambda / pi) integral_0^inf log(psi + 1) / (u^2 + lambda^2).
inline double wh_log_laplace(const LevyModel& model, double lambda) {
  require(lambda >= 0, Errc::domain, "wh_log_laplace needs lambda >= 0");
  require(model.symmetric(), Errc::unsupported_model, "the symmetric form needs a symmetric exponent");
  if (lambda == 0) return 0.0;
  return entropy_lhs([&](double u) { return std::log1p(psi(model, u)); }, lambda);
}

namespace detail {

// Complex integral over (0, inf): tanh-sinh on (0, 1], Gauss-Kronrod on
// decades up to u_max, and a log-tail series for c0 + c1 log u times
// lambda / (u^2 + lambda^2).
template <class F>
std::complex<double> complex_half_line(F&& f, std::complex<double> lambda, double u_max, double c0_re, double c1) {
  auto re = quad::tanh_sinh([&](double u) { return f(u).real(); }, 0.0, 1.0, 1e-12).value;
  auto im = quad::tanh_sinh([&](double u) { return f(u).imag(); }, 0.0, 1.0, 1e-12).value;
  std::complex<double> body(re, im);
  for (double a = 1.0; a < u_max; a *= 10) body += quad::gauss_kronrod(f, a, std::min(10 * a, u_max), 1e-12).value;
  // Tail of lambda (c0 + c1 log u) / (u^2 + lambda^2) = sum_k (-lambda^2)^k ...
  const double lu = std::log(u_max);
  std::complex<double> tail = 0.0, ratio = 1.0;
  for (int k = 0; k < 60; ++k) {
    const double q = 1.0 + 2 * k;
    const auto term = ratio * std::pow(u_max, -q) * (c0_re / q + c1 * (lu / q + 1.0 / (q * q)));
    tail += term;
    if (std::abs(term) < 1e-17 * std::abs(tail)) break;
    ratio *= -lambda * lambda;
  }
  return body + lambda * tail;
}

}  // namespace detail

/// General form, (1/2 pi) integral over R of log(psi(u) + 1) (1/(lambda - iu)
/// - 1/(-iu)). Folding u and -u gives the integrand
///   lambda (L(u) + L(-u)) / (u^2 + lambda^2) - i lambda^2 (L(u) - L(-u)) / (u (u^2 + lambda^2))
/// on (0, inf), where both pieces are integrable.
template <class ComplexPsi>
std::complex<double> wh_log_laplace_general(ComplexPsi&& psi_c, std::complex<double> lambda, double alpha_tail,
                                            double u_max = 1e8) {
  require(lambda.real() > 0 || lambda == 0.0, Errc::domain, "general form needs Re lambda > 0");
  if (lambda == 0.0) return 0.0;
  const std::complex<double> I(0.0, 1.0);
  auto f = [&](double u) {
    const auto lp = std::log(1.0 + psi_c(u));
    const auto lm = std::log(1.0 + psi_c(-u));
    const auto den = u * u + lambda * lambda;
    return lambda * (lp + lm) / den - I * lambda * lambda * (lp - lm) / (u * den);
  };
  // Real part of L(u) + L(-u) behaves as 2 alpha log u + c0 at large u.
  const double lu = std::log(u_max);
  const double c0 = (std::log(1.0 + psi_c(u_max)) + std::log(1.0 + psi_c(-u_max))).real() - 2 * alpha_tail * lu;
  const auto total = detail::complex_half_line(f, lambda, u_max, c0, 2 * alpha_tail);
  if (!std::isfinite(total.real()) || !std::isfinite(total.imag()))
    throw Error(Errc::quadrature, "general log-Laplace integral is not finite");
  return total / (2.0 * std::numbers::pi);
}

inline std::complex<double> wh_log_laplace_general(const LevyModel& model, std::complex<double> lambda) {
  model.validate();
  require(model.family != Family::custom || model.symmetric(), Errc::unsupported_model,
          "custom exponents are symmetric tables");
  const double tail = model.family == Family::custom ? 0.0 : model.alpha;
  return wh_log_laplace_general([&](double u) { return psi_complex(model, u); }, lambda, tail);
}

struct WienerHopfPoint {
  double lambda = 0.0;
  double mc_mean = 0.0;
  double mc_std_error = 0.0;
  double symmetric_form = 0.0;  // exp(-wh_log_laplace)
  double general_form = 0.0;    // exp(-Re general form)
  double rel_gap_symmetric = 0.0;
  double rel_gap_general = 0.0;
};

struct WienerHopfReport {
  std::vector<WienerHopfPoint> points;
  std::size_t n_paths = 0;
  double dt = 0.0;
};

/// MC of E exp(-lambda (F - m)) in the first case against both quadrature forms.
inline WienerHopfReport verify_wiener_hopf(const LevyModel& model, std::span<const double> lambdas,
                                           std::size_t n_paths, double dt, std::uint64_t seed,
                                           unsigned workers = 1) {
  model.validate();
  require(model.symmetric(), Errc::unsupported_model, "Wiener-Hopf check needs a symmetric model");
  require(model.first_case(), Errc::precondition, "Wiener-Hopf check runs in the first case");
  require(n_paths >= 2, Errc::insufficient_sample, "need at least two paths");
  // Brownian paths use exact bridge minima; other models the grid extrema.
  std::vector<double> range;
  if (model.family == Family::brownian) {
    range = parallel_map(n_paths, workers, [&](std::size_t i) {
      Rng rng(seed, i);
      return brownian_final_minus_min(model.rate, dt, rng);
    });
  } else {
    const auto recs = simulate_batch(model, dt, n_paths, seed, workers);
    range.resize(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) range[i] = recs[i].final - recs[i].min;
  }
  WienerHopfReport rep;
  rep.n_paths = n_paths;
  rep.dt = dt;
  for (double l : lambdas) {
    require(l >= 0, Errc::domain, "lambdas must be nonnegative");
    WienerHopfPoint p;
    p.lambda = l;
    if (l == 0) {
      p.mc_mean = p.symmetric_form = p.general_form = 1.0;
      rep.points.push_back(p);
      continue;
    }
    std::vector<double> v(range.size());
    for (std::size_t i = 0; i < range.size(); ++i) v[i] = std::exp(-l * range[i]);
    const auto est = stats::mean_and_error(v);
    p.mc_mean = est.mean;
    p.mc_std_error = est.std_error;
    p.symmetric_form = std::exp(-wh_log_laplace(model, l));
    p.general_form = std::exp(-wh_log_laplace_general(model, l).real());
    p.rel_gap_symmetric = std::abs(p.mc_mean / p.symmetric_form - 1);
    p.rel_gap_general = std::abs(p.mc_mean / p.general_form - 1);
    rep.points.push_back(p);
  }
  return rep;
}

/// Entropy route on the string of a first-case H: left side with
/// Delta' = psi + 1 against the growth limit on the string.
struct EntropyRouteReport {
  double lambda = 0.0;
  EntropyResult entropy;
  double wh_symmetric = 0.0;
};

inline EntropyRouteReport entropy_route(const LevyModel& model, const MonotoneTable& H, double lambda,
                                        const EntropyOptions& eopt = {}, int points_per_decade = 100) {
  require(model.symmetric(), Errc::unsupported_model, "entropy route needs a symmetric model");
  StringOptions so;
  so.points_per_decade = points_per_decade;
  const auto str = build_string(H, so);
  EntropyRouteReport rep;
  rep.lambda = lambda;
  rep.entropy = entropy_rhs(str.measure, lambda, &str.exponential_type, eopt);
  rep.entropy.lhs = wh_log_laplace(model, lambda);
  rep.wh_symmetric = rep.entropy.lhs;
  return rep;
}

struct UnboundedTransform {
  std::vector<double> xs;
  double lambda = 0.0;
  std::vector<double> A_tilde, D_tilde, D_tilde_prime;  // at lambda
  std::vector<double> ratio_at_one;                      // D~(x,1) / -D~'(x,1)
  MonotoneTable t_map;                                   // empty when the computed t is not monotone
  std::vector<double> t_values;                          // t(x) as computed
  std::vector<double> identity_lhs, identity_rhs, residual;
  double sup_residual = 0.0;  // over x >= report_lo
  bool t_increasing = false;
  std::vector<double> t_implied;            // t solving the identity with the known D_1
  std::vector<double> t_implied_flipped;    // same with 1/(1 - lambda^2) in place of 1/(lambda^2 - 1)
};

struct UnboundedOptions {
  double x_lo = 1e-3;
  double x_hi = 30.0;
  double step = 0.01;  // uniform spacing above x = 1
  int points_per_decade = 200;
  double report_lo = 0.05;
  double report_hi = 5.0;
};

namespace detail {

struct TildeSolution {
  std::vector<double> A, D, Dp;
};

// A~ from the phi pair (printed normalization, no factor 2) and
// D~ = A~ integral_x^inf A~^-2 H^-2. Cells use an exponential interpolant of
// the integrand; the tail beyond the grid is 1 / (2 A~ A~' H^2).
inline TildeSolution tilde_solution(const MonotoneTable& H, double lambda, std::span<const double> xs) {
  const auto pair = solve_phi(H, H, lambda, xs);
  const auto a = a_from_phi(pair, H);
  const auto ap = a_prime_from_phi(pair, H);
  const std::size_t n = xs.size();
  TildeSolution out;
  out.A.resize(n);
  std::vector<double> Ap(n), f(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.A[i] = 2.0 * a[i].real();
    Ap[i] = 2.0 * ap[i].real();
    const double h = H(xs[i]);
    require(out.A[i] > 0 && std::isfinite(out.A[i]), Errc::non_convergence, "A~ is not positive and finite");
    f[i] = 1.0 / (out.A[i] * out.A[i] * h * h);
  }
  const double hb = H(xs.back());
  std::vector<double> I(n);
  require(Ap.back() > 0, Errc::tail_estimation, "A~ is not increasing at the end of the grid");
  I[n - 1] = 1.0 / (2 * out.A.back() * Ap.back() * hb * hb);
  for (std::size_t i = n - 1; i-- > 0;) {
    const double h = xs[i + 1] - xs[i];
    const double r = std::log(f[i] / f[i + 1]);
    const double cell = std::abs(r) < 1e-8 ? 0.5 * h * (f[i] + f[i + 1]) : h * (f[i] - f[i + 1]) / r;
    I[i] = I[i + 1] + cell;
  }
  out.D.resize(n);
  out.Dp.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = H(xs[i]);
    out.D[i] = out.A[i] * I[i];
    out.Dp[i] = Ap[i] * I[i] - 1.0 / (out.A[i] * h * h);
  }
  return out;
}

}  // namespace detail

/// The unbounded-variation transform for a symmetric first-case H. D_1 is
/// available only where its string is known: Brownian motion, where the
/// spectral measure (psi + 1) / (u^2 + 1) du is Lebesgue and D_1 = e^{-lx}/l.
inline UnboundedTransform unbounded_transform(const MonotoneTable& H, double lambda, const LevyModel& model,
                                              const UnboundedOptions& opt = {}) {
  require(std::isfinite(lambda) && lambda > 0, Errc::domain, "unbounded_transform needs a real lambda > 0");
  if (std::abs(lambda - 1.0) < 1e-12)
    throw Error(Errc::pole, "lambda = 1 is a pole of the identity (factor 1/(lambda^2 - 1))");
  require(model.family == Family::brownian || (model.family == Family::symmetric_stable && model.alpha == 2.0),
          Errc::unsupported_model, "D_1 is known only for Brownian motion (Lebesgue string)");

  std::vector<double> xs = log_grid(opt.x_lo, 1.0, opt.points_per_decade);
  for (double x = 1.0 + opt.step; x <= opt.x_hi + 1e-12; x += opt.step) xs.push_back(x);
  const auto at_l = detail::tilde_solution(H, lambda, xs);
  const auto at_1 = detail::tilde_solution(H, 1.0, xs);

  UnboundedTransform out;
  out.lambda = lambda;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] > opt.report_hi * (1 + 1e-12)) break;
    const double h = H(xs[i]);
    const double r1 = at_1.D[i] / -at_1.Dp[i];
    const double rl = at_l.D[i] / -at_l.Dp[i];
    const double t = xs[i] + r1 / (h * h);
    const double rhs = (rl - r1) / (lambda * lambda - 1);
    const double lhs = std::exp(-lambda * t) / lambda / -at_l.Dp[i];
    out.xs.push_back(xs[i]);
    out.A_tilde.push_back(at_l.A[i]);
    out.D_tilde.push_back(at_l.D[i]);
    out.D_tilde_prime.push_back(at_l.Dp[i]);
    out.ratio_at_one.push_back(r1);
    out.t_values.push_back(t);
    out.identity_lhs.push_back(lhs);
    out.identity_rhs.push_back(rhs);
    out.residual.push_back(std::abs(lhs - rhs) / std::abs(rhs));
    const double arg = lambda * -at_l.Dp[i] * rhs;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.t_implied.push_back(arg > 0 ? -std::log(arg) / lambda : nan);
    out.t_implied_flipped.push_back(arg < 0 ? -std::log(-arg) / lambda : nan);
  }
  for (std::size_t i = 0; i < out.xs.size(); ++i)
    if (out.xs[i] >= opt.report_lo * (1 - 1e-12)) out.sup_residual = std::max(out.sup_residual, out.residual[i]);
  out.t_increasing =
      std::adjacent_find(out.t_values.begin(), out.t_values.end(), std::greater_equal<>()) == out.t_values.end();
  if (out.t_increasing) out.t_map = MonotoneTable(out.xs, out.t_values);
  return out;
}

}  // namespace bilateral
