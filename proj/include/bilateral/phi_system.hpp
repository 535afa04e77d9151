#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "bilateral/error.hpp"
#include "bilateral/monotone_table.hpp"

namespace bilateral {

struct PhiTable {
  std::vector<double> xs;
  std::complex<double> lambda;
  std::vector<std::complex<double>> phi;        // phi(x, lambda)
  std::vector<std::complex<double>> phi_check;  // dual phi(x, -lambda)
};

struct PhiPair {
  PhiTable plus;   // lambda
  PhiTable minus;  // -lambda
};

struct PhiOptions {
  double rel_tol = 1e-6;
  int points_per_decade = 200;
};

/// Log-spaced grid with the given density on [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int per_decade) {
  require(lo > 0 && hi > lo && per_decade > 0, Errc::domain, "log_grid: need 0 < lo < hi");
  const int n = std::max(1, static_cast<int>(std::ceil(std::log10(hi / lo) * per_decade)));
  std::vector<double> g(n + 1);
  for (int i = 0; i <= n; ++i) g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / n);
  g.back() = hi;
  return g;
}

namespace detail {

// Implicit trapezoid on the Stieltjes form of
//   du = exp(-l x) v dHp / Hm,   dv = exp(l x) u dHm / Hp
// along the grid, starting from u = Hp, v = Hm at the first node.
inline void integrate_phi(std::span<const double> grid, std::span<const double> hp, std::span<const double> hm,
                          std::complex<double> l, std::vector<std::complex<double>>& u,
                          std::vector<std::complex<double>>& v) {
  const std::size_t n = grid.size();
  u.assign(n, 0.0);
  v.assign(n, 0.0);
  u[0] = hp[0];
  v[0] = hm[0];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dhp = hp[i + 1] - hp[i], dhm = hm[i + 1] - hm[i];
    const auto e0 = std::exp(-l * grid[i]), e1 = std::exp(-l * grid[i + 1]);
    const auto r1 = u[i] + 0.5 * e0 * v[i] / hm[i] * dhp;
    const auto r2 = v[i] + 0.5 / e0 * u[i] / hp[i] * dhm;
    const auto a = 0.5 * e1 * dhp / hm[i + 1];
    const auto b = 0.5 / e1 * dhm / hp[i + 1];
    const auto det = 1.0 - a * b;
    if (std::abs(det) < 1e-14) throw Error(Errc::singular_system, "phi system step is singular");
    u[i + 1] = (r1 + a * r2) / det;
    v[i + 1] = r2 + b * u[i + 1];
  }
}

}  // namespace detail

/// Solves the coupled phi system for lambda and -lambda on xs. A log-spaced
/// startup segment is prepended when xs[0] is too large for the boundary
/// condition phi ~ H to hold within rel_tol.
inline PhiPair solve_phi(const MonotoneTable& Hplus, const MonotoneTable& Hminus, std::complex<double> lambda,
                         std::span<const double> xs, const PhiOptions& opt = {}) {
  require(!xs.empty() && xs.front() > 0, Errc::domain, "solve_phi needs a positive grid");
  for (std::size_t i = 1; i < xs.size(); ++i) require(xs[i] > xs[i - 1], Errc::domain, "grid must increase");
  const double scale = std::max(std::abs(lambda), 1e-300);
  const double x_start = std::min(xs.front(), 0.1 * opt.rel_tol / scale);
  std::vector<double> grid;
  std::size_t offset = 0;
  if (x_start < xs.front()) {
    grid = log_grid(x_start, xs.front(), opt.points_per_decade);
    grid.pop_back();
    offset = grid.size();
  }
  grid.insert(grid.end(), xs.begin(), xs.end());
  if (x_start < std::min(Hplus.x_front(), Hminus.x_front())) {
    require(Hplus.front_exponent() > 0 && Hminus.front_exponent() > 0, Errc::startup,
            "no power-law fit available below the first table node");
  }
  std::vector<double> hp(grid.size()), hm(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    hp[i] = Hplus(grid[i]);
    hm[i] = Hminus(grid[i]);
    require(hp[i] > 0 && hm[i] > 0, Errc::singular_system, "H vanishes on the grid");
  }
  PhiPair out;
  std::vector<std::complex<double>> u, v;
  auto fill = [&](PhiTable& t, std::complex<double> l) {
    detail::integrate_phi(grid, hp, hm, l, u, v);
    t.xs.assign(xs.begin(), xs.end());
    t.lambda = l;
    t.phi.assign(u.begin() + static_cast<std::ptrdiff_t>(offset), u.end());
    t.phi_check.assign(v.begin() + static_cast<std::ptrdiff_t>(offset), v.end());
  };
  fill(out.plus, lambda);
  fill(out.minus, -lambda);
  return out;
}

/// A(s(x), lambda) from the phi pair, renormalized so that A -> 1 as x -> 0.
inline std::vector<std::complex<double>> a_from_phi(const PhiPair& pair, const MonotoneTable& Hplus) {
  const auto& xs = pair.plus.xs;
  const auto l = pair.plus.lambda;
  std::vector<std::complex<double>> a(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double h = Hplus(xs[i]);
    require(h > 0, Errc::domain, "a_from_phi: H vanishes");
    a[i] = (std::exp(0.5 * l * xs[i]) * pair.plus.phi[i] + std::exp(-0.5 * l * xs[i]) * pair.minus.phi[i]) / (2.0 * h);
  }
  return a;
}

/// Derivative of A in the original coordinate, lambda (e^{lx/2} phi(x,l) -
/// e^{-lx/2} phi(x,-l)) / (4 H); multiply by H^2 for the string coordinate.
inline std::vector<std::complex<double>> a_prime_from_phi(const PhiPair& pair, const MonotoneTable& Hplus) {
  const auto& xs = pair.plus.xs;
  const auto l = pair.plus.lambda;
  std::vector<std::complex<double>> d(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double h = Hplus(xs[i]);
    require(h > 0, Errc::domain, "a_prime_from_phi: H vanishes");
    d[i] = l * (std::exp(0.5 * l * xs[i]) * pair.plus.phi[i] - std::exp(-0.5 * l * xs[i]) * pair.minus.phi[i]) / (4.0 * h);
  }
  return d;
}

}  // namespace bilateral
