#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bilateral/error.hpp"
#include "bilateral/levy_models.hpp"
#include "bilateral/monotone_table.hpp"
#include "bilateral/parallel.hpp"
#include "bilateral/rng.hpp"
#include "bilateral/stats.hpp"

namespace bilateral {

struct PathSample {
  double dt = 0.0;
  std::vector<double> values;
  double lifetime = 0.0;
};

struct FluctuationSummary {
  double min = 0.0;
  double max = 0.0;
  double final = 0.0;
  double argmin = 0.0;
  std::size_t argmin_index = 0;
  std::vector<double> running_sup;
  std::vector<double> running_inf;

  double amplitude() const { return max - min; }
};

struct LadderChain {
  std::vector<double> times;    // T_0 = argmin, T_1, ...
  std::vector<double> heights;  // Z_1, Z_2, ...

  double sum() const {
    double s = 0.0;
    for (double z : heights) s += z;
    return s;
  }
};

/// Relative truncation threshold and step cap shared by every chain.
inline constexpr double chain_rel_eps = 1e-12;
inline constexpr std::size_t chain_max_steps = 10000;

inline std::optional<std::string> resolution_warning(const LevyModel& model, double dt) {
  if (std::ceil(1.0 / (model.rate * dt)) < 1e3)
    return "time step coarse: fewer than 1000 steps per expected lifetime";
  return std::nullopt;
}

/// Fills `values` with X at the grid times 0, dt, ... before a lifetime drawn
/// from the given rate; returns the lifetime.
inline double fill_path(const LevyModel& model, double dt, double rate, Rng& rng,
                        std::vector<double>& values) {
  require(dt > 0 && std::isfinite(dt), Errc::domain, "dt must be positive");
  const double lifetime = rng.exponential() / rate;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(lifetime / dt)));
  values.resize(n);
  values[0] = 0.0;
  const double scale = std::pow(dt, 1.0 / model.alpha);
  double x = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    x += scale * stable_variate(model, rng);
    values[i] = x;
  }
  return lifetime;
}

inline PathSample sample_path(const LevyModel& model, double dt, std::uint64_t seed,
                              std::uint64_t stream = 0) {
  require(dt > 0 && std::isfinite(dt), Errc::domain, "dt must be positive");
  require(model.family != Family::custom, Errc::unsupported_model,
          "no path sampler for a tabulated exponent");
  Rng rng(seed, stream);
  PathSample p;
  p.dt = dt;
  p.lifetime = fill_path(model, dt, model.rate, rng, p.values);
  return p;
}

/// F - m for Brownian motion (psi = u^2) killed at `rate`, exact in law: each
/// step's minimum is drawn from the Brownian bridge between its endpoints and
/// the last step ends at the lifetime.
inline double brownian_final_minus_min(double rate, double dt, Rng& rng) {
  require(rate > 0 && dt > 0, Errc::domain, "rate and dt must be positive");
  const double life = rng.exponential() / rate;
  double x = 0.0, lo = 0.0, t = 0.0;
  while (t < life) {
    const double h = std::min(dt, life - t);
    const double var = 2.0 * h;
    const double y = x + std::sqrt(var) * rng.normal();
    const double gap = y - x;
    lo = std::min(lo, 0.5 * (x + y - std::sqrt(gap * gap - 2.0 * var * std::log(rng.uniform()))));
    x = y;
    t += h;
  }
  return x - lo;
}

/// Extrema over the grid; the argmin tie goes to the earliest index.
inline FluctuationSummary fluctuation_summary(std::span<const double> values, double dt,
                                              bool running = true) {
  require(!values.empty(), Errc::precondition, "empty path");
  FluctuationSummary s;
  s.min = s.max = values[0];
  if (running) {
    s.running_sup.resize(values.size());
    s.running_inf.resize(values.size());
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (v < s.min) {
      s.min = v;
      s.argmin_index = i;
    }
    s.max = std::max(s.max, v);
    if (running) {
      s.running_sup[i] = s.max;
      s.running_inf[i] = s.min;
    }
  }
  s.final = values.back();
  s.argmin = static_cast<double>(s.argmin_index) * dt;
  return s;
}

inline FluctuationSummary fluctuation_summary(const PathSample& p, bool running = true) {
  return fluctuation_summary(p.values, p.dt, running);
}

/// Alternating extrema after the minimum: Z_1 = max_{t > rho} X_t - m, then
/// successive drawdowns and rallies, each over the times after the previous
/// extremum.
inline LadderChain extract_ladder_chain(std::span<const double> values, double dt,
                                        std::size_t argmin_index) {
  LadderChain chain;
  const std::size_t n = values.size();
  chain.times.push_back(static_cast<double>(argmin_index) * dt);
  if (argmin_index + 1 >= n) return chain;
  // Earliest arg-extrema of every suffix.
  std::vector<std::uint32_t> suf_max(n), suf_min(n);
  suf_max[n - 1] = suf_min[n - 1] = static_cast<std::uint32_t>(n - 1);
  for (std::size_t i = n - 1; i-- > argmin_index;) {
    suf_max[i] = values[i] >= values[suf_max[i + 1]] ? static_cast<std::uint32_t>(i) : suf_max[i + 1];
    suf_min[i] = values[i] <= values[suf_min[i + 1]] ? static_cast<std::uint32_t>(i) : suf_min[i + 1];
  }
  std::size_t at = argmin_index;
  bool up = true;
  double first = 0.0;
  while (at + 1 < n && chain.heights.size() < chain_max_steps) {
    const std::size_t next = up ? suf_max[at + 1] : suf_min[at + 1];
    const double z = values[next] - values[at];
    if (chain.heights.empty()) first = z;
    if ((up && z <= 0) || (!up && z >= 0)) break;
    if (!chain.heights.empty() && std::abs(z) < chain_rel_eps * first) break;
    chain.heights.push_back(z);
    chain.times.push_back(static_cast<double>(next) * dt);
    at = next;
    up = !up;
  }
  return chain;
}

inline LadderChain extract_ladder_chain(const PathSample& p) {
  const auto s = fluctuation_summary(p, false);
  return extract_ladder_chain(p.values, p.dt, s.argmin_index);
}

/// Per-path functionals kept by the batch simulators.
struct PathRecord {
  std::uint64_t index = 0;
  double min = 0, max = 0, final = 0, argmin = 0, lifetime = 0;
  double first_height = 0;  // Z_1, zero for an empty chain
};

inline PathRecord summarize(std::span<const double> values, double dt, double lifetime,
                            std::uint64_t index, LadderChain* chain_out = nullptr) {
  const auto s = fluctuation_summary(values, dt, false);
  PathRecord r{index, s.min, s.max, s.final, s.argmin, lifetime, 0.0};
  double post_max = s.min;
  for (std::size_t i = s.argmin_index + 1; i < values.size(); ++i) post_max = std::max(post_max, values[i]);
  r.first_height = post_max - s.min;
  if (chain_out) *chain_out = extract_ladder_chain(values, dt, s.argmin_index);
  return r;
}

/// Simulates n_paths independent paths; replicate i uses stream i of seed.
inline std::vector<PathRecord> simulate_batch(const LevyModel& model, double dt, std::size_t n_paths,
                                              std::uint64_t seed, unsigned workers = 1,
                                              double rate = 0.0) {
  require(model.family != Family::custom, Errc::unsupported_model,
          "no path sampler for a tabulated exponent");
  require(dt > 0, Errc::domain, "dt must be positive");
  if (rate <= 0) rate = model.rate;
  return parallel_map(n_paths, workers, [&](std::size_t i) {
    thread_local std::vector<double> buf;
    Rng rng(seed, i);
    const double life = fill_path(model, dt, rate, rng, buf);
    return summarize(buf, dt, life, i);
  });
}

struct HEstimate {
  MonotoneTable table;
  std::vector<double> std_error;
  std::vector<double> rates;  // killing rates used (one entry in the first case)
};

namespace detail {

inline std::vector<double> ecdf_at(std::vector<double> sample, std::span<const double> grid) {
  std::sort(sample.begin(), sample.end());
  std::vector<double> out(grid.size());
  const double n = static_cast<double>(sample.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    out[k] = static_cast<double>(std::upper_bound(sample.begin(), sample.end(), grid[k]) - sample.begin()) / n;
  return out;
}

}  // namespace detail

/// Empirical H(x) = Q(Z_1 <= x) on x_grid. In the second case the rates
/// rate * 2^-k, k = 0..levels, are simulated, each ECDF is divided by its rate
/// and the values are extrapolated to rate 0 assuming a correction of order
/// rate^(delta/alpha).
inline HEstimate estimate_H(const LevyModel& model, std::span<const double> x_grid, std::size_t n_paths,
                            double dt, std::uint64_t seed, unsigned workers = 1, int levels = 6) {
  require(n_paths >= 1000, Errc::insufficient_sample, "estimate_H needs at least 1000 paths");
  require(!x_grid.empty(), Errc::domain, "estimate_H: empty grid");
  HEstimate out;
  auto one_rate = [&](double rate, std::uint64_t level_seed, std::vector<double>& se) {
    const auto recs = simulate_batch(model, dt, n_paths, level_seed, workers, rate);
    std::vector<double> z(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) z[i] = recs[i].first_height;
    auto f = detail::ecdf_at(std::move(z), x_grid);
    se.resize(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) se[k] = std::sqrt(f[k] * (1 - f[k]) / static_cast<double>(n_paths));
    return f;
  };

  if (model.first_case()) {
    auto f = one_rate(model.rate, seed, out.std_error);
    out.table = MonotoneTable({x_grid.begin(), x_grid.end()}, std::move(f));
    out.rates = {model.rate};
    return out;
  }

  require(levels >= 1, Errc::domain, "estimate_H: need at least two rates");
  const double r = model.family == Family::custom ? 0.5 : positivity_exact(model).delta / model.alpha;
  std::vector<std::vector<double>> vals, errs;
  for (int k = 0; k <= levels; ++k) {
    const double mu = model.rate * std::ldexp(1.0, -k);
    std::vector<double> se;
    auto f = one_rate(mu, seed + 0x9E37ULL * static_cast<std::uint64_t>(k + 1), se);
    for (std::size_t j = 0; j < f.size(); ++j) {
      f[j] /= mu;
      // Floor the binomial error so empty bins still carry some weight.
      se[j] = std::max(se[j], 1.0 / static_cast<double>(n_paths)) / mu;
    }
    vals.push_back(std::move(f));
    errs.push_back(std::move(se));
    out.rates.push_back(mu);
  }
  std::vector<double> h(x_grid.size()), hse(x_grid.size());
  for (std::size_t j = 0; j < x_grid.size(); ++j) {
    // Weighted least squares of value = H + c * mu^r.
    double sw = 0, st = 0, stt = 0, sy = 0, sty = 0;
    for (std::size_t k = 0; k < vals.size(); ++k) {
      const double w = 1.0 / (errs[k][j] * errs[k][j]);
      const double t = std::pow(out.rates[k], r);
      sw += w;
      st += w * t;
      stt += w * t * t;
      sy += w * vals[k][j];
      sty += w * t * vals[k][j];
    }
    const double det = sw * stt - st * st;
    h[j] = (stt * sy - st * sty) / det;
    hse[j] = std::sqrt(stt / det);
  }
  std::vector<double> w(hse.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = 1.0 / (hse[j] * hse[j]);
  auto mono = stats::isotonic(h, w);
  for (double& v : mono) v = std::max(v, 0.0);
  out.table = MonotoneTable({x_grid.begin(), x_grid.end()}, std::move(mono));
  out.std_error = std::move(hse);
  return out;
}

struct WeightedChain {
  double weight = 0.0;
  LadderChain chain;
  double final_minus_min = 0.0;
};

/// Draws from the Lebesgue-weighted (second case) path measure restricted to
/// amplitude <= cap. The walk runs until its range first exceeds cap after
/// tau grid points; every prefix of 1..tau points is admissible, so a uniform
/// prefix length with weight tau * dt is an exact draw of the restricted law.
inline std::vector<WeightedChain> sample_capped_second_case(const LevyModel& model, double cap, double dt,
                                                            std::size_t n_paths, std::uint64_t seed,
                                                            unsigned workers = 1) {
  require(cap > 0 && dt > 0, Errc::domain, "cap and dt must be positive");
  require(model.family != Family::custom, Errc::unsupported_model,
          "no path sampler for a tabulated exponent");
  const double scale = std::pow(dt, 1.0 / model.alpha);
  return parallel_map(n_paths, workers, [&](std::size_t i) {
    thread_local std::vector<double> buf;
    Rng rng(seed, i);
    buf.assign(1, 0.0);
    double x = 0.0, lo = 0.0, hi = 0.0;
    while (true) {
      x += scale * stable_variate(model, rng);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      if (hi - lo > cap) break;
      buf.push_back(x);
    }
    const std::size_t tau = buf.size();
    const auto len = std::min<std::size_t>(tau, 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(tau)));
    const std::span<const double> prefix(buf.data(), len);
    WeightedChain out;
    out.weight = static_cast<double>(tau) * dt;
    const auto s = fluctuation_summary(prefix, dt, false);
    out.chain = extract_ladder_chain(prefix, dt, s.argmin_index);
    out.final_minus_min = s.final - s.min;
    return out;
  });
}

struct FactorizationReport {
  double chi_square = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
  std::size_t n_accepted = 0;
  stats::TestResult pre_marginal;   // -m given acceptance vs reference law of F
  stats::TestResult post_marginal;  // F - m given acceptance vs reference law of F
};

/// Independence of the pre-minimum and post-minimum parts given
/// {M - m <= x}: chi-square on an equal-frequency n_bins x n_bins table of
/// (-m, F - m), plus two-sample KS of each marginal against F - m over the
/// paths whose post-minimum maximum stays below x.
inline FactorizationReport factorization_test(const LevyModel& model, double x, std::size_t n_paths,
                                              std::size_t n_bins, double dt, std::uint64_t seed,
                                              unsigned workers = 1) {
  require(model.symmetric(), Errc::unsupported_model, "factorization test needs a symmetric model");
  require(model.first_case(), Errc::unsupported_model, "factorization test runs in the first case");
  require(x > 0, Errc::domain, "amplitude cap must be positive");
  require(n_bins >= 1, Errc::domain, "need at least one bin");
  const auto recs = simulate_batch(model, dt, n_paths, seed, workers);
  std::vector<double> pre, post, reference;
  for (const auto& r : recs) {
    if (r.max - r.min <= x) {
      pre.push_back(-r.min);
      post.push_back(r.final - r.min);
    }
    if (r.first_height <= x) reference.push_back(r.final - r.min);
  }
  FactorizationReport rep;
  rep.n_accepted = pre.size();
  if (n_bins == 1) return rep;
  require(pre.size() >= 30 * n_bins * n_bins, Errc::insufficient_sample,
          "too few accepted paths for the requested binning");
  auto edges = [&](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> e;
    for (std::size_t k = 1; k < n_bins; ++k) e.push_back(v[k * v.size() / n_bins]);
    return e;
  };
  const auto ea = edges(pre), eb = edges(post);
  auto bin = [&](const std::vector<double>& e, double v) {
    return static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), v) - e.begin());
  };
  std::vector<double> counts(n_bins * n_bins, 0.0);
  for (std::size_t i = 0; i < pre.size(); ++i) counts[bin(ea, pre[i]) * n_bins + bin(eb, post[i])] += 1;
  const auto chi = stats::chi_square_independence(counts, n_bins, n_bins);
  rep.chi_square = chi.statistic;
  rep.dof = static_cast<double>((n_bins - 1) * (n_bins - 1));
  rep.p_value = chi.p_value;
  rep.pre_marginal = stats::ks_two_sample(pre, reference);
  rep.post_marginal = stats::ks_two_sample(post, reference);
  return rep;
}

}  // namespace bilateral
