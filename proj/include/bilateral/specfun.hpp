#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>

#include "bilateral/error.hpp"
#include "bilateral/quadrature.hpp"

namespace bilateral {

struct BetaParams {
  double a;
  double b;

  BetaParams(double a_, double b_) : a(a_), b(b_) {
    require(a > 0 && b > 0 && std::isfinite(a) && std::isfinite(b), Errc::domain,
            "beta parameters must be positive");
  }
};

enum class TailModel { power, logarithmic };

struct QuadratureSpec {
  double u_max = 1e6;
  double rel_tol = 1e-10;
  double tail_order = 0.0;
  TailModel tail = TailModel::power;

  void validate() const {
    require(u_max > 0, Errc::domain, "u_max must be positive");
    require(rel_tol > 0 && rel_tol < 1, Errc::domain, "rel_tol must lie in (0,1)");
  }
};

namespace detail {

// Lanczos approximation, g = 7, nine terms.
inline constexpr std::array<double, 9> lanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

inline double lanczos_sum(double x) {
  double a = lanczos[0];
  for (int i = 1; i < 9; ++i) a += lanczos[i] / (x + i);
  return a;
}

}  // namespace detail

inline double gamma_fn(double x) {
  using std::numbers::pi;
  if (x < 0.5) return pi / (std::sin(pi * x) * gamma_fn(1.0 - x));
  if (x > 171.7) return std::numeric_limits<double>::infinity();
  x -= 1.0;
  const double t = x + 7.5;
  // Split the power so t^(x+1/2) does not overflow before e^-t is applied.
  const double half_power = std::pow(t, 0.5 * (x + 0.5));
  return std::sqrt(2 * pi) * half_power * (half_power * std::exp(-t)) * detail::lanczos_sum(x);
}

/// log|Gamma(x)| for x > 0.
inline double log_gamma(double x) {
  using std::numbers::pi;
  require(x > 0, Errc::domain, "log_gamma needs x > 0");
  if (x < 0.5) return std::log(pi / std::sin(pi * x)) - log_gamma(1.0 - x);
  x -= 1.0;
  const double t = x + 7.5;
  return 0.5 * std::log(2 * pi) + (x + 0.5) * std::log(t) - t + std::log(detail::lanczos_sum(x));
}

inline double log_beta(double a, double b) {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

inline double beta_density(const BetaParams& p, double t) {
  require(t >= 0 && t <= 1, Errc::domain, "beta_density: t outside [0,1]");
  if (t == 0.0) {
    if (p.a < 1) return std::numeric_limits<double>::infinity();
    if (p.a > 1) return 0.0;
    return std::exp(-log_beta(p.a, p.b));
  }
  if (t == 1.0) {
    if (p.b < 1) return std::numeric_limits<double>::infinity();
    if (p.b > 1) return 0.0;
    return std::exp(-log_beta(p.a, p.b));
  }
  return std::exp((p.a - 1) * std::log(t) + (p.b - 1) * std::log1p(-t) - log_beta(p.a, p.b));
}

namespace detail {

// Modified Lentz evaluation of the incomplete beta continued fraction.
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 1000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw Error(Errc::non_convergence, "incomplete beta continued fraction");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(const BetaParams& p, double x) {
  require(x >= 0 && x <= 1, Errc::domain, "incomplete_beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double a = p.a, b = p.b;
  const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  if (x < (a + 1) / (a + b + 2))
    return std::exp(log_front) * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Regularized upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x) {
  require(a > 0 && x >= 0, Errc::domain, "gamma_q: need a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  const double log_front = -x + a * std::log(x) - log_gamma(a);
  if (x < a + 1) {
    double ap = a, del = 1.0 / a, sum = del;
    for (int n = 0; n < 10000; ++n) {
      ap += 1;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-16) return 1.0 - sum * std::exp(log_front);
    }
    throw Error(Errc::non_convergence, "gamma series");
  }
  constexpr double tiny = 1e-300;
  double b = x + 1 - a, c = 1 / tiny, d = 1 / b, h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1) < 1e-16) return std::exp(log_front) * h;
  }
  throw Error(Errc::non_convergence, "gamma continued fraction");
}

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double statistic, double dof) {
  if (statistic <= 0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * statistic);
}

namespace detail {

// Kummer series M(a; c; z), summed with Re z >= 0 by the caller. Returns NaN
// when cancellation would eat more than about six digits.
inline std::complex<double> kummer_series(double a, double c, std::complex<double> z) {
  std::complex<double> term = 1.0, sum = 1.0;
  double biggest = 1.0;
  for (int n = 0; n < 5000; ++n) {
    term *= (a + n) / ((c + n) * (n + 1.0)) * z;
    sum += term;
    biggest = std::max(biggest, std::abs(term));
    if (std::abs(term) <= 1e-17 * std::abs(sum) && n > 2) {
      if (biggest > 1e6 * std::abs(sum)) return {std::nan(""), std::nan("")};
      return sum;
    }
  }
  return {std::nan(""), std::nan("")};
}

inline std::complex<double> beta_laplace_quadrature(const BetaParams& p, std::complex<double> lambda) {
  const double lb = log_beta(p.a, p.b);
  auto weight = [&](double t, double one_minus_t) {
    return std::exp((p.a - 1) * std::log(t) + (p.b - 1) * std::log(one_minus_t) - lb);
  };
  const double edge = std::min(0.5, 4.0 / std::max(1.0, std::abs(lambda)));
  // Left edge piece: t = edge (1 + s) / 2.
  auto left = quad::tanh_sinh_core(
      [&](double, double one_plus, double) {
        const double t = 0.5 * edge * one_plus;
        return std::exp(-lambda * t) * weight(t, 1.0 - t) * (0.5 * edge);
      },
      1e-13);
  auto right = quad::tanh_sinh_core(
      [&](double, double, double one_minus) {
        const double u = 0.5 * edge * one_minus;  // u = 1 - t
        return std::exp(-lambda * (1.0 - u)) * weight(1.0 - u, u) * (0.5 * edge);
      },
      1e-13);
  std::complex<double> total = left.value + right.value;
  if (edge < 0.5) {
    auto middle = quad::gauss_kronrod(
        [&](double t) { return std::exp(-lambda * t) * weight(t, 1.0 - t); }, edge, 1.0 - edge,
        1e-13, 1e-300, 20000);
    total += middle.value;
  }
  return total;
}

}  // namespace detail

/// Laplace transform of the beta density, a confluent hypergeometric value
/// M(a; a + b; -lambda).
inline std::complex<double> beta_laplace(const BetaParams& p, std::complex<double> lambda) {
  if (lambda == 0.0) return 1.0;
  const double c = p.a + p.b;
  if (std::abs(lambda) * std::max({1.0, p.a, p.b}) < 30.0) {
    std::complex<double> v = lambda.real() >= 0
                                 ? std::exp(-lambda) * detail::kummer_series(p.b, c, lambda)
                                 : detail::kummer_series(p.a, c, -lambda);
    if (std::isfinite(v.real()) && std::isfinite(v.imag())) return v;
  }
  return detail::beta_laplace_quadrature(p, lambda);
}

inline double beta_laplace(const BetaParams& p, double lambda) {
  return beta_laplace(p, std::complex<double>(lambda, 0.0)).real();
}

namespace detail {

inline double power_tail(double c, double p, double lambda, double u) {
  if (c == 0.0) return 0.0;
  if (lambda < 0.5 * u) {
    double sum = 0.0, ratio = 1.0;
    for (int k = 0; k < 200; ++k) {
      const double term = ratio * std::pow(u, p - 1 - 2 * k) / (1 + 2 * k - p);
      sum += (k % 2 == 0) ? term : -term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
      ratio *= lambda * lambda;
    }
    return c * sum;
  }
  return quad::tanh_sinh_half_line(
             [&](double v) { return c * std::pow(v, p) / (v * v + lambda * lambda); }, u)
      .value;
}

inline double log_tail(double c0, double c1, double lambda, double u) {
  if (lambda < 0.5 * u) {
    const double lu = std::log(u);
    double sum = 0.0, ratio = 1.0;
    for (int k = 0; k < 200; ++k) {
      const double q = 1.0 + 2 * k;
      const double term = ratio * std::pow(u, -q) * (c0 / q + c1 * (lu / q + 1.0 / (q * q)));
      sum += (k % 2 == 0) ? term : -term;
      if (std::abs(term) < 1e-17 * std::abs(sum) + 1e-300) break;
      ratio *= lambda * lambda;
    }
    return sum;
  }
  return quad::tanh_sinh_half_line(
             [&](double v) { return (c0 + c1 * std::log(v)) / (v * v + lambda * lambda); }, u)
      .value;
}

}  // namespace detail

/// (2/pi) * integral over (0, inf) of g(u) / (u^2 + lambda^2), truncated at
/// q.u_max with an analytic tail. Optional breakpoints (kinks of g inside
/// (0, u_max)) switch the body to per-cell Gauss-Kronrod.
template <class G>
double stieltjes_integral(G&& g, double lambda, const QuadratureSpec& q,
                          std::span<const double> breakpoints = {}) {
  q.validate();
  require(lambda > 0, Errc::domain, "stieltjes_integral: lambda must be positive");
  const double U = q.u_max;
  double body = 0.0;
  if (breakpoints.empty()) {
    const double theta_max = std::atan(U / lambda);
    auto r = quad::tanh_sinh(
        [&](double theta) { return g(lambda * std::tan(theta)); }, 0.0, theta_max,
        q.rel_tol);
    if (!r.converged) {
      r = quad::gauss_kronrod([&](double theta) { return g(lambda * std::tan(theta)); }, 0.0,
                              theta_max, q.rel_tol, 0.0, 20000);
    }
    body = r.value / lambda;
  } else {
    double lo = 0.0;
    auto kernel = [&](double u) { return g(u) / (u * u + lambda * lambda); };
    auto add_cell = [&](double a, double b) {
      if (b <= a) return;
      if (a == 0.0)
        body += quad::tanh_sinh(kernel, a, b, q.rel_tol).value;
      else
        body += quad::gauss_kronrod(kernel, a, b, q.rel_tol, 0.0, 2000).value;
    };
    for (double bp : breakpoints) {
      if (bp <= lo || bp >= U) continue;
      add_cell(lo, bp);
      lo = bp;
    }
    add_cell(lo, U);
  }

  double tail = 0.0;
  if (q.tail == TailModel::power) {
    if (q.tail_order >= 1.0)
      throw Error(Errc::divergence, "stieltjes_integral: tail_order >= 1 is not integrable");
    const double gu = g(U);
    tail = detail::power_tail(gu / std::pow(U, q.tail_order), q.tail_order, lambda, U);
  } else {
    const double g1 = g(U), g0 = g(0.5 * U);
    const double c1 = (g1 - g0) / std::numbers::ln2;
    const double c0 = g1 - c1 * std::log(U);
    tail = detail::log_tail(c0, c1, lambda, U);
  }
  return 2.0 / std::numbers::pi * (body + tail);
}

}  // namespace bilateral
