#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <queue>
#include <type_traits>
#include <vector>

#include "bilateral/error.hpp"

namespace bilateral::quad {

template <class T>
struct Result {
  T value{};
  double error = 0.0;
  bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Segment {
  double a, b;
  T value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
auto kronrod15(F& f, double a, double b) {
  using T = std::decay_t<decltype(f(a))>;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const T fc = f(c);
  T kronrod = fc * kronrod_weights[7];
  T gauss = fc * gauss_weights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kronrod_nodes[j];
    const T sum = f(c - dx) + f(c + dx);
    kronrod += kronrod_weights[j] * sum;
    if (j % 2 == 1) gauss += gauss_weights[j / 2] * sum;
  }
  kronrod *= h;
  gauss *= h;
  using std::abs;
  return Segment<T>{a, b, kronrod, static_cast<double>(abs(kronrod - gauss))};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) on a finite interval. Works for real
/// or complex valued integrands.
template <class F>
auto gauss_kronrod(F&& f, double a, double b, double rel_tol = 1e-10,
                   double abs_tol = 0.0, int max_segments = 4000) {
  using T = std::decay_t<decltype(f(a))>;
  using std::abs;
  if (a == b) return Result<T>{T{}, 0.0, true};
  std::priority_queue<detail::Segment<T>> heap;
  auto first = detail::kronrod15(f, a, b);
  T total = first.value;
  double err = first.error;
  heap.push(first);
  int segments = 1;
  while (err > std::max(abs_tol, rel_tol * static_cast<double>(abs(total)))) {
    if (segments >= max_segments) return Result<T>{total, err, false};
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) return Result<T>{total, err, false};
    auto left = detail::kronrod15(f, worst.a, mid);
    auto right = detail::kronrod15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++segments;
    if (err < 0) {
      // Guard against drift from the running update.
      err = 0;
      auto copy = heap;
      while (!copy.empty()) {
        err += copy.top().error;
        copy.pop();
      }
    }
  }
  return Result<T>{total, err, true};
}

/// Tanh-sinh rule on (-1, 1). The integrand receives (s, 1 + s, 1 - s) with
/// both complements computed without cancellation, so endpoint singularities
/// can be evaluated at distances far below machine epsilon.
template <class G>
auto tanh_sinh_core(G&& g, double rel_tol = 1e-12, int max_level = 9) {
  using T = std::decay_t<decltype(g(0.0, 1.0, 1.0))>;
  using std::abs;
  constexpr double half_pi = std::numbers::pi / 2.0;
  constexpr double t_max = 6.0;

  auto node = [&](double t) -> T {
    const double u = half_pi * std::sinh(t);
    const double cu = std::cosh(u);
    const double w = half_pi * std::cosh(t) / (cu * cu);
    if (w == 0.0) return T{};
    const double comp = std::exp(-std::abs(u)) / cu;  // 1 - |tanh u|
    const double s = std::tanh(u);
    const double one_plus = t >= 0 ? 2.0 - comp : comp;
    const double one_minus = t >= 0 ? comp : 2.0 - comp;
    const T v = g(s, one_plus, one_minus);
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(v)) return T{};
    } else {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return T{};
    }
    return w * v;
  };

  double h = 1.0;
  T sum = node(0.0);
  for (int k = 1; k * h <= t_max; ++k) sum += node(k * h) + node(-k * h);
  T estimate = h * sum;
  double err = static_cast<double>(abs(estimate));
  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    T extra{};
    for (int k = 1; k * h <= t_max; k += 2) extra += node(k * h) + node(-k * h);
    sum += extra;
    const T next = h * sum;
    err = static_cast<double>(abs(next - estimate));
    estimate = next;
    if (level >= 3 && err <= rel_tol * static_cast<double>(abs(estimate)))
      return Result<T>{estimate, err, true};
  }
  return Result<T>{estimate, err, err <= 1e3 * rel_tol * static_cast<double>(abs(estimate))};
}

/// Tanh-sinh on a finite interval [a, b]; tolerant of integrable endpoint singularities.
template <class F>
auto tanh_sinh(F&& f, double a, double b, double rel_tol = 1e-12) {
  const double half = 0.5 * (b - a);
  auto g = [&](double s, double one_plus, double one_minus) {
    const double x = s < 0 ? a + half * one_plus : b - half * one_minus;
    return f(x) * half;
  };
  return tanh_sinh_core(g, rel_tol);
}

/// Integral over [a, +inf) using x = a + (1 + s) / (1 - s).
template <class F>
auto tanh_sinh_half_line(F&& f, double a, double rel_tol = 1e-12) {
  auto g = [&](double, double one_plus, double one_minus) {
    const double x = a + one_plus / one_minus;
    return f(x) * (2.0 / (one_minus * one_minus));
  };
  return tanh_sinh_core(g, rel_tol);
}

}  // namespace bilateral::quad
