#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "bilateral/error.hpp"
#include "bilateral/rng.hpp"
#include "bilateral/specfun.hpp"

namespace bilateral::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double n_effective = 0.0;
};

/// Survival function of the Kolmogorov distribution.
inline double kolmogorov_sf(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

inline double ks_p_value(double d, double n_eff) {
  const double rn = std::sqrt(n_eff);
  return kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
template <class Cdf>
TestResult ks_one_sample(std::vector<double> data, Cdf&& cdf) {
  require(!data.empty(), Errc::insufficient_sample, "ks: empty sample");
  std::sort(data.begin(), data.end());
  const double n = static_cast<double>(data.size());
  double d = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double f = cdf(data[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return {d, ks_p_value(d, n), n};
}

/// Weighted one-sample KS; the effective size is Kish's (sum w)^2 / sum w^2.
template <class Cdf>
TestResult ks_weighted(std::span<const double> data, std::span<const double> weights, Cdf&& cdf) {
  require(!data.empty() && data.size() == weights.size(), Errc::insufficient_sample,
          "weighted ks: empty or mismatched sample");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return data[a] < data[b]; });
  double total = 0.0, square = 0.0;
  for (double w : weights) {
    total += w;
    square += w * w;
  }
  double cum = 0.0, d = 0.0;
  for (auto i : order) {
    const double f = cdf(data[i]);
    d = std::max(d, std::abs(f - cum / total));
    cum += weights[i];
    d = std::max(d, std::abs(cum / total - f));
  }
  const double n_eff = total * total / square;
  return {d, ks_p_value(d, n_eff), n_eff};
}

inline TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), Errc::insufficient_sample, "ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double n_eff = na * nb / (na + nb);
  return {d, ks_p_value(d, n_eff), n_eff};
}

/// Chi-square independence test on a contingency table (row major).
inline TestResult chi_square_independence(std::span<const double> counts, std::size_t rows, std::size_t cols) {
  require(counts.size() == rows * cols, Errc::precondition, "contingency table shape");
  std::vector<double> r(rows, 0.0), c(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      r[i] += counts[i * cols + j];
      c[j] += counts[i * cols + j];
      total += counts[i * cols + j];
    }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = r[i] * c[j] / total;
      if (e > 0) chi2 += (counts[i * cols + j] - e) * (counts[i * cols + j] - e) / e;
    }
  const double dof = static_cast<double>((rows - 1) * (cols - 1));
  if (dof == 0) return {0.0, 1.0, total};
  return {chi2, chi_square_sf(chi2, dof), total};
}

/// Weighted isotonic (nondecreasing) regression by pool-adjacent-violators.
inline std::vector<double> isotonic(std::span<const double> y, std::span<const double> w) {
  struct Block {
    double value, weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < y.size(); ++i) {
    blocks.push_back({y[i], w.empty() ? 1.0 : w[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value > blocks.back().value) {
      auto top = blocks.back();
      blocks.pop_back();
      auto& prev = blocks.back();
      const double weight = prev.weight + top.weight;
      prev.value = (prev.value * prev.weight + top.value * top.weight) / weight;
      prev.weight = weight;
      prev.count += top.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.value);
  return out;
}

namespace detail {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0.0) {}
  void add(std::size_t i, double v) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] += v;
  }
  /// Sum over indices [0, i).
  double prefix(std::size_t i) const {
    double s = 0.0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<double> tree_;
};

// Dense ranks, ties sharing a rank.
inline std::vector<std::size_t> dense_ranks(std::span<const double> v, std::size_t& levels) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  levels = sorted.size();
  std::vector<std::size_t> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    r[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v[i]) - sorted.begin());
  return r;
}

// Row sums of the distance matrix |v_i - v_j|.
inline std::vector<double> distance_row_sums(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  double total = 0.0;
  for (double x : v) total += x;
  std::vector<double> out(n);
  double below = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = v[order[k]];
    const double above = total - below - x;
    out[order[k]] = x * k - below + above - x * static_cast<double>(n - 1 - k);
    below += x;
  }
  return out;
}

// Sum over all ordered pairs of |x_i - x_j| |y_i - y_j|, given indices
// sorted by x and dense y ranks.
inline double cross_distance_sum(std::span<const double> x, std::span<const double> y,
                                 std::span<const std::size_t> x_order,
                                 std::span<const std::size_t> y_rank, std::size_t levels) {
  Fenwick c1(levels), cy(levels), cx(levels), cxy(levels);
  double t1 = 0, ty = 0, tx = 0, txy = 0;
  double sum = 0.0;
  for (auto i : x_order) {
    const std::size_t r = y_rank[i];
    auto signed_sum = [&](const Fenwick& f, double total) {
      return f.prefix(r) + f.prefix(r + 1) - total;
    };
    const double s1 = signed_sum(c1, t1), sy = signed_sum(cy, ty);
    const double sx = signed_sum(cx, tx), sxy = signed_sum(cxy, txy);
    sum += x[i] * y[i] * s1 - x[i] * sy - y[i] * sx + sxy;
    c1.add(r, 1.0);
    cy.add(r, y[i]);
    cx.add(r, x[i]);
    cxy.add(r, x[i] * y[i]);
    t1 += 1;
    ty += y[i];
    tx += x[i];
    txy += x[i] * y[i];
  }
  return 2.0 * sum;
}

}  // namespace detail

struct DistanceCorrelation {
  double dcov2 = 0.0;
  double dcor = 0.0;
  double p_value = 1.0;
  int permutations = 0;
};

/// V-statistic distance covariance/correlation of two univariate samples in
/// O(n log n), with a permutation test of independence.
inline DistanceCorrelation distance_correlation_test(std::span<const double> x, std::span<const double> y,
                                                     int permutations, std::uint64_t seed) {
  const std::size_t n = x.size();
  require(n >= 4 && y.size() == n, Errc::insufficient_sample, "dcor: need at least 4 paired samples");
  const double nn = static_cast<double>(n);
  std::vector<std::size_t> x_order(n);
  std::iota(x_order.begin(), x_order.end(), 0);
  std::sort(x_order.begin(), x_order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  const auto ax = detail::distance_row_sums(x);
  const auto by = detail::distance_row_sums(y);
  const double a_total = std::accumulate(ax.begin(), ax.end(), 0.0);
  const double b_total = std::accumulate(by.begin(), by.end(), 0.0);

  auto dcov2 = [&](std::span<const double> yy, std::span<const double> b_rows) {
    std::size_t levels = 0;
    const auto ranks = detail::dense_ranks(yy, levels);
    const double cross = detail::cross_distance_sum(x, yy, x_order, ranks, levels);
    double rows = 0.0;
    for (std::size_t i = 0; i < n; ++i) rows += ax[i] * b_rows[i];
    return cross / (nn * nn) - 2.0 * rows / (nn * nn * nn) + a_total * b_total / (nn * nn * nn * nn);
  };
  auto self_dvar2 = [&](std::span<const double> v, double total_rows) {
    double s = 0, s2 = 0;
    for (double t : v) {
      s += t;
      s2 += t * t;
    }
    const double sq_total = 2.0 * nn * s2 - 2.0 * s * s;  // sum of squared distances
    const auto rows = detail::distance_row_sums(v);
    double rr = 0.0;
    for (double r : rows) rr += r * r;
    return sq_total / (nn * nn) - 2.0 * rr / (nn * nn * nn) + total_rows * total_rows / (nn * nn * nn * nn);
  };

  DistanceCorrelation out;
  out.dcov2 = dcov2(y, by);
  const double vx = self_dvar2(x, a_total), vy = self_dvar2(y, b_total);
  out.dcor = (vx > 0 && vy > 0) ? std::sqrt(std::max(0.0, out.dcov2) / std::sqrt(vx * vy)) : 0.0;
  out.permutations = permutations;
  if (permutations <= 0) return out;
  Rng rng(seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> yp(n), bp(n);
  int exceed = 0;
  for (int k = 0; k < permutations; ++k) {
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    for (std::size_t i = 0; i < n; ++i) {
      yp[i] = y[perm[i]];
      bp[i] = by[perm[i]];
    }
    if (dcov2(yp, bp) >= out.dcov2) ++exceed;
  }
  out.p_value = (1.0 + exceed) / (1.0 + permutations);
  return out;
}

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

inline MeanEstimate mean_and_error(std::span<const double> v) {
  require(v.size() >= 2, Errc::insufficient_sample, "mean: need two samples");
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double t : v) ss += (t - m) * (t - m);
  return {m, std::sqrt(ss / (n - 1) / n)};
}

}  // namespace bilateral::stats
