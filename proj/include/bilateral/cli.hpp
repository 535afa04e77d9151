#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bilateral/error.hpp"
#include "bilateral/extrema_chain.hpp"
#include "bilateral/io.hpp"
#include "bilateral/krein_string.hpp"
#include "bilateral/levy_models.hpp"
#include "bilateral/path_sim.hpp"
#include "bilateral/phi_system.hpp"
#include "bilateral/stable_forms.hpp"
#include "bilateral/stats.hpp"
#include "bilateral/string_bridge.hpp"

namespace bilateral::cli {

using io::Json;
namespace fs = std::filesystem;

enum ExitCode : int { ok = 0, validation = 2, numerical = 3, usage = 64 };

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {"simulate", "chain",       "phi",     "stable-exit", "string",
                                                 "spectral", "wiener-hopf", "entropy", "rule4"};
  return names;
}

/// A command's parameters plus the run settings that do not affect results.
struct ExperimentConfig {
  Json params = Json::object();  // everything except the run settings below
  std::uint64_t seed = 0;
  fs::path out = ".";
  unsigned workers = 1;
  std::set<std::string> formats = {"csv", "json"};

  bool wants(const std::string& f) const { return formats.count(f) != 0; }
};

/// Merges a config document with flag overrides. The seed is mandatory.
inline ExperimentConfig make_config(Json doc, std::optional<std::uint64_t> seed_flag, std::optional<std::string> out_flag,
                                    std::optional<unsigned> workers_flag, std::optional<std::string> format_flag) {
  require(doc.is_object(), Errc::domain, "config must be a JSON object");
  ExperimentConfig cfg;
  if (seed_flag) {
    doc["seed"] = *seed_flag;
  }
  require(doc.contains("seed"), Errc::precondition, "seed is required (config field or --seed)");
  require(doc["seed"].is_number_unsigned() || (doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0),
          Errc::domain, "seed must be a nonnegative integer");
  cfg.seed = doc["seed"].get<std::uint64_t>();
  if (out_flag)
    cfg.out = *out_flag;
  else if (doc.contains("out"))
    cfg.out = doc["out"].get<std::string>();
  if (workers_flag)
    cfg.workers = *workers_flag;
  else if (doc.contains("workers"))
    cfg.workers = doc["workers"].get<unsigned>();
  require(cfg.workers >= 1, Errc::domain, "workers must be positive");
  std::vector<std::string> formats;
  if (format_flag) {
    std::stringstream ss(*format_flag);
    for (std::string f; std::getline(ss, f, ',');)
      if (!f.empty()) formats.push_back(f);
  } else if (doc.contains("format")) {
    formats = doc["format"].get<std::vector<std::string>>();
  }
  if (!formats.empty()) {
    cfg.formats.clear();
    for (const auto& f : formats) {
      require(f == "csv" || f == "json" || f == "svg", Errc::domain, "format must be csv, json or svg");
      cfg.formats.insert(f);
    }
  }
  for (const char* k : {"out", "workers", "format"}) doc.erase(k);
  cfg.params = std::move(doc);
  return cfg;
}

namespace detail {

template <class T>
T get(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::domain, std::string("config field '") + key + "' has the wrong type");
  }
}

template <class T>
T get_required(const Json& j, const char* key) {
  require(j.contains(key), Errc::precondition, (std::string("config field '") + key + "' is required").c_str());
  return get<T>(j, key, T{});
}

inline std::size_t get_count(const Json& j, const char* key, std::size_t fallback) {
  const double v = get<double>(j, key, static_cast<double>(fallback));
  require(v >= 0 && v == std::floor(v), Errc::domain, (std::string(key) + " must be a nonnegative integer").c_str());
  return static_cast<std::size_t>(v);
}

inline double positive(const Json& j, const char* key, double fallback) {
  const double v = get<double>(j, key, fallback);
  require(v > 0 && std::isfinite(v), Errc::domain, (std::string(key) + " must be positive").c_str());
  return v;
}

inline LevyModel model(const Json& p) {
  require(p.contains("model"), Errc::precondition, "config needs a model");
  return io::model_from_json(p.at("model"));
}

inline std::vector<double> lambdas(const Json& p, std::vector<double> fallback) {
  auto v = get<std::vector<double>>(p, "lambdas", fallback);
  require(!v.empty(), Errc::domain, "lambdas must be nonempty");
  return v;
}

inline Json envelope(const std::string& command, const ExperimentConfig& cfg, Json result) {
  Json doc;
  doc["command"] = command;
  doc["version"] = std::string(io::library_version);
  doc["config_hash"] = io::config_hash(cfg.params);
  doc["seed"] = cfg.seed;
  doc["config"] = cfg.params;
  doc["result"] = std::move(result);
  return doc;
}

struct Outcome {
  Json result;
  int status = ok;  // numerical diagnostics can ask for status 3 after writing
};

inline std::vector<double> column(const std::vector<PathRecord>& r, double PathRecord::*field) {
  std::vector<double> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i].*field;
  return out;
}

// Commands. Each writes its files and returns the JSON result.

inline Outcome simulate(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto m = model(p);
  const double dt = positive(p, "dt", 1e-3);
  const auto n = get_count(p, "n_paths", 1000);
  const auto save = std::min(get_count(p, "save_paths", 0), n);
  require(n >= 1, Errc::insufficient_sample, "n_paths must be positive");
  const auto recs = simulate_batch(m, dt, n, cfg.seed, cfg.workers);
  std::vector<double> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<double>(recs[i].index);
  const auto mins = column(recs, &PathRecord::min), maxs = column(recs, &PathRecord::max),
             fin = column(recs, &PathRecord::final), argmin = column(recs, &PathRecord::argmin),
             life = column(recs, &PathRecord::lifetime), z1 = column(recs, &PathRecord::first_height);
  if (cfg.wants("csv"))
    io::write_csv(cfg.out / "simulate.csv", {"index", "min", "max", "final", "argmin", "lifetime", "first_height"},
                  {idx, mins, maxs, fin, argmin, life, z1});
  std::vector<Json> chains;
  for (std::size_t i = 0; i < save; ++i) {
    const auto path = sample_path(m, dt, cfg.seed, i);
    if (cfg.wants("csv")) io::write_path_csv(cfg.out / "paths" / ("path_" + std::to_string(i) + ".csv"), path);
    chains.push_back(Json{{"index", i}, {"chain", io::to_json(extract_ladder_chain(path))}});
    if (i == 0 && cfg.wants("svg")) {
      std::vector<double> t(path.values.size());
      for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k) * dt;
      io::write_svg(cfg.out / "simulate.svg", {"sample path", "t", "X"}, {{"path 0", t, path.values}});
    }
  }
  if (save > 0 && cfg.wants("json")) io::write_json_lines(cfg.out / "chains.jsonl", chains);
  auto mean = [](const std::vector<double>& v) { return stats::mean_and_error(v); };
  Json r;
  r["model"] = io::to_json(m);
  r["n_paths"] = n;
  r["dt"] = dt;
  if (n >= 2) {
    for (auto [name, col] : {std::pair{"min", &mins}, {"max", &maxs}, {"final", &fin}, {"first_height", &z1}}) {
      const auto e = mean(*col);
      r["mean_" + std::string(name)] = Json{{"value", e.mean}, {"std_error", e.std_error}};
    }
  }
  if (const auto w = resolution_warning(m, dt)) r["warning"] = *w;
  return {r};
}

inline std::pair<MonotoneTable, MonotoneTable> power_pair(const PositivityParams& pp, double hi) {
  const auto grid = log_grid(1e-12, std::max(10.0, 10 * hi), 20);
  return {MonotoneTable::power_law(1.0, pp.gamma, grid), MonotoneTable::power_law(1.0, pp.delta, grid)};
}

inline Outcome chain(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto m = model(p);
  require(m.family == Family::symmetric_stable, Errc::unsupported_model, "chain runs on stable models");
  const auto pp = positivity_exact(m);
  const double x_cap = positive(p, "x_cap", 1.0);
  const auto n = get_count(p, "n_chains", 10000);
  const int perms = static_cast<int>(get_count(p, "permutations", 199));
  require(n >= 4, Errc::insufficient_sample, "n_chains must be at least 4");
  const auto [hp, hm] = power_pair(pp, x_cap);
  const auto out = simulate_chains(hp, hm, x_cap, n, cfg.seed, cfg.workers);
  std::vector<double> mx(n), fin(n), steps(n), ratio(n);
  for (std::size_t i = 0; i < n; ++i) {
    mx[i] = out[i].max;
    fin[i] = out[i].final;
    steps[i] = static_cast<double>(out[i].steps);
    ratio[i] = out[i].final / out[i].max;
  }
  if (cfg.wants("csv")) io::write_csv(cfg.out / "chain.csv", {"max", "final", "steps", "final_over_max"}, {mx, fin, steps, ratio});
  const auto law = final_over_max_law(pp);
  const auto ks = stats::ks_one_sample(ratio, [&](double u) { return incomplete_beta(law, std::clamp(u, 0.0, 1.0)); });
  const auto dc = stats::distance_correlation_test(ratio, mx, perms, cfg.seed ^ 0x5bd1e995ULL);
  if (cfg.wants("svg")) {
    auto sorted = ratio;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> ecdf(n), ref(n);
    for (std::size_t i = 0; i < n; ++i) {
      ecdf[i] = static_cast<double>(i + 1) / static_cast<double>(n);
      ref[i] = incomplete_beta(law, std::clamp(sorted[i], 0.0, 1.0));
    }
    io::write_svg(cfg.out / "chain.svg", {"F/M: empirical vs beta law", "F/M", "cdf"},
                  {{"empirical", sorted, ecdf}, {"beta", sorted, ref}});
  }
  Json r;
  r["gamma"] = pp.gamma;
  r["delta"] = pp.delta;
  r["n_chains"] = n;
  r["ks_final_over_max"] = Json{{"statistic", ks.statistic}, {"p_value", ks.p_value}, {"law_a", law.a}, {"law_b", law.b}};
  r["dcor_final_over_max_vs_max"] = Json{{"dcor", dc.dcor}, {"p_value", dc.p_value}, {"permutations", dc.permutations}};
  if (p.contains("phi")) {
    const auto& q = p.at("phi");
    const double x = positive(q, "x", 1.0);
    const double l = get<double>(q, "lambda", 1.0);
    const auto est = phi_mc(hp, hm, x, l, get_count(q, "n_chains", n), cfg.seed + 1, cfg.workers);
    r["phi_mc"] = Json{{"x", x}, {"lambda", l}, {"value", est.value.real()}, {"std_error", est.se_real}};
  }
  return {r};
}

inline Outcome phi(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto m = model(p);
  require(m.family == Family::symmetric_stable, Errc::unsupported_model, "phi runs on stable models");
  const auto pp = positivity_exact(m);
  const auto ls = lambdas(p, {0.5, 1.0, 2.0});
  const double lo = positive(p, "x_lo", 0.1), hi = positive(p, "x_hi", 1.0);
  require(hi > lo, Errc::domain, "x_hi must exceed x_lo");
  PhiOptions po;
  po.rel_tol = positive(p, "rel_tol", 1e-6);
  po.points_per_decade = static_cast<int>(get_count(p, "points_per_decade", 2000));
  const auto grid = log_grid(lo, hi, po.points_per_decade);
  const auto [hp, hm] = power_pair(pp, hi);
  const auto n_chains = get_count(p, "n_chains", 0);
  std::vector<double> cl, cx, cre, cim, cclosed, crel;
  std::vector<io::Series> plot;
  Json per = Json::array();
  for (double l : ls) {
    const auto pair = solve_phi(hp, hm, l, grid, po);
    const double k = fit_phi_constant(pp, grid, pair.plus.phi, l);
    const StableFluctuationLaw law{pp, k, 1.0};
    double sup = 0.0;
    io::Series s{"lambda=" + io::format_number(l), {}, {}};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double closed = phi_closed(law, grid[i], l).real();
      const double rel = std::abs(pair.plus.phi[i].real() / closed - 1);
      sup = std::max(sup, rel);
      cl.push_back(l);
      cx.push_back(grid[i]);
      cre.push_back(pair.plus.phi[i].real());
      cim.push_back(pair.plus.phi[i].imag());
      cclosed.push_back(closed);
      crel.push_back(rel);
      s.x.push_back(grid[i]);
      s.y.push_back(pair.plus.phi[i].real());
    }
    plot.push_back(std::move(s));
    Json e{{"lambda", l}, {"fitted_k", k}, {"sup_rel_error", sup}};
    if (n_chains >= 2) {
      const double x = get<double>(p, "chain_x", hi);
      const auto est = phi_mc(hp, hm, x, l, n_chains, cfg.seed, cfg.workers);
      const auto solved = solve_phi(hp, hm, l, std::vector<double>{x}, po).plus.phi[0].real();
      e["chain"] = Json{{"x", x},
                        {"value", est.value.real()},
                        {"std_error", est.se_real},
                        {"solver", solved},
                        {"z", (est.value.real() - solved) / est.se_real}};
    }
    per.push_back(e);
  }
  if (cfg.wants("csv"))
    io::write_csv(cfg.out / "phi.csv", {"lambda", "x", "phi_re", "phi_im", "closed_form", "rel_error"},
                  {cl, cx, cre, cim, cclosed, crel});
  if (cfg.wants("svg")) io::write_svg(cfg.out / "phi.svg", {"phi(x, lambda)", "x", "phi"}, plot);
  Json r;
  r["gamma"] = pp.gamma;
  r["delta"] = pp.delta;
  r["per_lambda"] = per;
  return {r};
}

inline Outcome stable_exit(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto m = model(p);
  require(m.family != Family::custom, Errc::unsupported_model, "stable-exit needs a stable or Brownian model");
  const auto pp = positivity_exact(m);
  const double a = positive(p, "a", 1.0), b = positive(p, "b", 1.0);
  Json r;
  r["gamma"] = pp.gamma;
  r["delta"] = pp.delta;
  r["a"] = a;
  r["b"] = b;
  r["value"] = exit_probability(pp, a, b);
  r["expected_exit_time"] = expected_exit_time(pp, m.alpha, a, b);
  r["occupation_formula"] = bivariate_occupation(pp, m.alpha, a, b);
  const auto n = get_count(p, "mc_paths", 0);
  if (n > 0) {
    const double dt = positive(p, "dt", 1e-3);
    const auto e = exit_probability_mc(m, a, b, n, dt, cfg.seed, cfg.workers);
    r["mc"] = Json{{"fine", e.fine},       {"coarse", e.coarse}, {"extrapolated", e.extrapolated},
                   {"std_error", e.std_error}, {"order", e.order},   {"n_paths", e.n_paths},
                   {"dt", dt}};
    if (cfg.wants("csv"))
      io::write_csv(cfg.out / "stable-exit.csv", {"dt", "estimate"}, {{2 * dt, dt, 0.0}, {e.coarse, e.fine, e.extrapolated}});
  }
  if (cfg.wants("svg")) {
    std::vector<double> xs, ys;
    for (int i = 1; i < 100; ++i) {
      const double f = i / 100.0;
      xs.push_back(f);
      ys.push_back(exit_probability(pp, f * (a + b), (1 - f) * (a + b)));
    }
    io::write_svg(cfg.out / "stable-exit.svg", {"P(exit above) vs a/(a+b)", "a/(a+b)", "probability"}, {{"formula", xs, ys}});
  }
  return {r};
}

// H from the config: {"power": {"c", "gamma"}}, {"table": {"x", "y"}} or
// {"first_case": {"n_paths", "dt"}} with the model.
inline MonotoneTable h_from_config(const Json& p, const ExperimentConfig& cfg) {
  require(p.contains("H"), Errc::precondition, "config needs H");
  const auto& h = p.at("H");
  if (h.contains("power")) {
    const auto& q = h.at("power");
    return MonotoneTable::power_law(positive(q, "c", 1.0), get_required<double>(q, "gamma"),
                                    log_grid(positive(q, "x_lo", 1e-10), positive(q, "x_hi", 1e4), 20));
  }
  if (h.contains("table")) return io::table_from_json(h.at("table"));
  if (h.contains("first_case")) {
    const auto& q = h.at("first_case");
    FirstCaseHOptions o;
    o.n_paths = get_count(q, "n_paths", 100000);
    o.dt = positive(q, "dt", 1e-3);
    o.seed = cfg.seed;
    o.workers = cfg.workers;
    return first_case_H(model(p), o);
  }
  throw Error(Errc::domain, "H must be power, table or first_case");
}

inline MassRule mass_rule(const Json& p) {
  const auto r = get<std::string>(p, "mass_rule", "consistent");
  if (r == "consistent") return MassRule::consistent;
  if (r == "literal") return MassRule::literal;
  throw Error(Errc::domain, "mass_rule must be consistent or literal");
}

inline Outcome string_cmd(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto H = h_from_config(p, cfg);
  StringOptions so;
  so.rule = mass_rule(p);
  so.points_per_decade = static_cast<int>(get_count(p, "points_per_decade", 100));
  const auto str = build_string(H, so);
  const auto xs = str.s.xs();
  std::vector<double> x(xs.begin(), xs.end()), s(str.s.ys().begin(), str.s.ys().end()),
      mm(str.m_of_s.ys().begin(), str.m_of_s.ys().end()), tau(str.exponential_type.ys().begin(), str.exponential_type.ys().end());
  if (cfg.wants("csv")) io::write_csv(cfg.out / "string.csv", {"x", "s", "m", "type"}, {x, s, mm, tau});
  if (cfg.wants("svg")) io::write_svg(cfg.out / "string.svg", {"string mass", "s", "m(s)", true, true}, {{"m", s, mm}});
  Json r;
  r["front_exponent"] = str.gamma;
  r["mass_rule"] = so.rule == MassRule::consistent ? "consistent" : "literal";
  r["nodes"] = x.size();
  r["s_max"] = s.back();
  r["m_max"] = mm.back();
  if (cfg.wants("json")) io::write_json(cfg.out / "string_tables.json", Json{{"s", io::to_json(str.s)}, {"m_of_s", io::to_json(str.m_of_s)}});
  return {r};
}

inline Outcome spectral(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto m = model(p);
  const auto ls = lambdas(p, {0.25, 0.5, 1.0, 2.0, 4.0});
  const auto kase_name = get<std::string>(p, "case", m.first_case() ? "first" : "second");
  require(kase_name == "first" || kase_name == "second", Errc::domain, "case must be first or second");
  SpectralIdentityOptions o;
  o.rule = mass_rule(p);
  o.h.n_paths = get_count(p, "mc_budget", 100000);
  o.h.dt = positive(p, "dt", 1e-3);
  o.h.seed = cfg.seed;
  o.h.workers = cfg.workers;
  const auto rep = verify_spectral_identity(m, kase_name == "first" ? KillingCase::first : KillingCase::second, ls, o);
  std::vector<double> cl, ct, cr, cq;
  Json per = Json::array();
  for (const auto& pt : rep.points) {
    cl.push_back(pt.lambda);
    ct.push_back(pt.transform);
    cr.push_back(pt.reference);
    cq.push_back(pt.ratio);
    per.push_back(Json{{"lambda", pt.lambda}, {"lhs", pt.transform}, {"rhs", pt.reference},
                       {"rel_gap", pt.ratio / rep.fitted_constant - 1}});
  }
  if (cfg.wants("csv")) io::write_csv(cfg.out / "spectral.csv", {"lambda", "transform", "reference", "ratio"}, {cl, ct, cr, cq});
  if (cfg.wants("svg")) {
    std::vector<double> scaled(cr);
    for (double& v : scaled) v *= rep.fitted_constant;
    io::write_svg(cfg.out / "spectral.svg", {"D(0, lambda)", "lambda", "D", true, true},
                  {{"string", cl, ct}, {"reference x constant", cl, scaled}});
  }
  Json r;
  r["pipeline"] = kase_name == "first" ? "first-case H (MC) -> string -> transform" : "power H -> string -> transform";
  r["per_lambda"] = per;
  r["fitted_constant"] = rep.fitted_constant;
  r["diagnostics"] = Json{{"dispersion", rep.dispersion}, {"slope", rep.slope}, {"reference_slope", rep.reference_slope},
                          {"warnings", rep.warnings}};
  int status = ok;
  if (p.contains("fit")) {
    const auto& f = p.at("fit");
    const auto us = log_grid(positive(f, "u_lo", 0.01), positive(f, "u_hi", 100.0),
                             static_cast<int>(get_count(f, "per_decade", 6)));
    const auto fit = fit_spectral_density(cl, ct, us, get<double>(f, "ridge", 1e-4));
    if (cfg.wants("csv")) io::write_csv(cfg.out / "spectral_fit.csv", {"u", "density"}, {fit.us, fit.density});
    r["fit"] = Json{{"tail_exponent", fit.tail_exponent}, {"residual", fit.residual}, {"ill_posed", fit.ill_posed}};
    if (fit.ill_posed) status = numerical;
  }
  return {r, status};
}

inline Outcome wiener_hopf(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto m = model(p);
  const auto ls = lambdas(p, {0.5, 1.0, 2.0});
  const auto rep = verify_wiener_hopf(m, ls, get_count(p, "n_paths", 100000), positive(p, "dt", 1e-3), cfg.seed, cfg.workers);
  std::vector<double> cl, cm, cs, csym, cgen;
  Json per = Json::array();
  for (const auto& pt : rep.points) {
    cl.push_back(pt.lambda);
    cm.push_back(pt.mc_mean);
    cs.push_back(pt.mc_std_error);
    csym.push_back(pt.symmetric_form);
    cgen.push_back(pt.general_form);
    per.push_back(Json{{"lambda", pt.lambda},
                       {"lhs", pt.mc_mean},
                       {"lhs_std_error", pt.mc_std_error},
                       {"rhs", pt.symmetric_form},
                       {"rel_gap", pt.rel_gap_symmetric},
                       {"rhs_general", pt.general_form},
                       {"rel_gap_general", pt.rel_gap_general}});
  }
  if (cfg.wants("csv"))
    io::write_csv(cfg.out / "wiener-hopf.csv", {"lambda", "mc_mean", "mc_std_error", "symmetric_form", "general_form"},
                  {cl, cm, cs, csym, cgen});
  if (cfg.wants("svg"))
    io::write_svg(cfg.out / "wiener-hopf.svg", {"E exp(-lambda (F - m))", "lambda", "value"},
                  {{"monte carlo", cl, cm}, {"symmetric form", cl, csym}, {"general form", cl, cgen}});
  Json r;
  r["pipeline"] = "monte carlo vs log-Laplace quadrature";
  r["per_lambda"] = per;
  r["diagnostics"] = Json{{"n_paths", rep.n_paths}, {"dt", rep.dt}};
  return {r};
}

inline Outcome entropy(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const double l = positive(p, "lambda", 1.0);
  EntropyOptions eo;
  eo.plateau_tol = positive(p, "plateau_tol", 1e-3);
  const auto which = get<std::string>(p, "string", "lebesgue");
  EntropyResult res;
  if (which == "lebesgue") {
    const double x_max = positive(p, "x_max", 20.0), step = positive(p, "step", 1e-3);
    const auto n = static_cast<std::size_t>(std::llround(x_max / step));
    std::vector<double> nodes(n + 1), dens(n + 1, 1.0);
    for (std::size_t i = 0; i <= n; ++i) nodes[i] = x_max * static_cast<double>(i) / static_cast<double>(n);
    const auto str = StringMeasure::from_density(nodes, dens);
    res = entropy_rhs(str, l, nullptr, eo);
    res.lhs = entropy_lhs([](double) { return 0.0; }, l);
  } else if (which == "first_case") {
    const auto m = model(p);
    const auto H = h_from_config(p, cfg);
    res = entropy_route(m, H, l, eo).entropy;
  } else {
    throw Error(Errc::domain, "string must be lebesgue or first_case");
  }
  if (cfg.wants("csv")) io::write_csv(cfg.out / "entropy.csv", {"x", "sequence"}, {res.xs, res.sequence});
  if (cfg.wants("svg"))
    io::write_svg(cfg.out / "entropy.svg", {"growth limit sequence", "x", "value", true, false},
                  {{"sequence", res.xs, res.sequence}, {"left side", {res.xs.front(), res.xs.back()}, {res.lhs, res.lhs}}});
  Json r;
  r["lambda"] = l;
  r["per_lambda"] = Json::array({Json{{"lambda", l}, {"lhs", res.lhs}, {"rhs", res.rhs}, {"gap", res.rhs - res.lhs}}});
  r["diagnostics"] = Json{{"plateau", res.plateau}, {"plateau_spread", res.plateau_spread}};
  return {r, res.plateau ? ok : numerical};
}

inline Outcome rule4(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const double l = positive(p, "lambda", 2.0);
  const auto m = p.contains("model") ? model(p) : LevyModel::brownian();
  MonotoneTable H;
  if (p.contains("H")) {
    H = h_from_config(p, cfg);
  } else {
    const auto grid = log_grid(1e-9, 60.0, 40);
    std::vector<double> y;
    for (double x : grid) y.push_back(std::tanh(x / 2));
    H = MonotoneTable(grid, y);
  }
  const auto u = unbounded_transform(H, l, m);
  if (cfg.wants("csv"))
    io::write_csv(cfg.out / "rule4.csv",
                  {"x", "A_tilde", "D_tilde", "D_tilde_prime", "t", "lhs", "rhs", "residual", "t_implied_flipped"},
                  {u.xs, u.A_tilde, u.D_tilde, u.D_tilde_prime, u.t_values, u.identity_lhs, u.identity_rhs, u.residual,
                   u.t_implied_flipped});
  if (cfg.wants("svg"))
    io::write_svg(cfg.out / "rule4.svg", {"time change", "x", "t", true, true},
                  {{"t(x) as defined", u.xs, u.t_values}, {"t solving flipped identity", u.xs, u.t_implied_flipped}});
  Json r;
  r["lambda"] = l;
  r["t_first_node"] = u.t_values.front();
  r["x_first_node"] = u.xs.front();
  r["t_increasing"] = u.t_increasing;
  r["sup_residual"] = u.sup_residual;
  return {r};
}

}  // namespace detail

/// Runs one command; returns the process exit status.
inline int run(const std::string& command, const ExperimentConfig& cfg, std::ostream& err = std::cerr) {
  try {
    detail::Outcome o;
    if (command == "simulate") o = detail::simulate(cfg);
    else if (command == "chain") o = detail::chain(cfg);
    else if (command == "phi") o = detail::phi(cfg);
    else if (command == "stable-exit") o = detail::stable_exit(cfg);
    else if (command == "string") o = detail::string_cmd(cfg);
    else if (command == "spectral") o = detail::spectral(cfg);
    else if (command == "wiener-hopf") o = detail::wiener_hopf(cfg);
    else if (command == "entropy") o = detail::entropy(cfg);
    else if (command == "rule4") o = detail::rule4(cfg);
    else {
      err << "unknown command '" << command << "'\n";
      return usage;
    }
    if (cfg.wants("json")) io::write_json(cfg.out / (command + ".json"), detail::envelope(command, cfg, o.result));
    return o.status;
  } catch (const Error& e) {
    err << command << ": " << e.what() << '\n';
    return is_validation(e.code()) ? validation : numerical;
  } catch (const nlohmann::json::exception& e) {
    err << command << ": bad config: " << e.what() << '\n';
    return validation;
  } catch (const fs::filesystem_error& e) {
    err << command << ": " << e.what() << '\n';
    return validation;
  }
}

inline std::string usage_text() {
  std::string s = "usage: bilateral <command> --config <file> [--seed N] [--out DIR] [--workers K] [--format csv,json,svg]\ncommands:";
  for (const auto& c : commands()) s += " " + c;
  return s + "\n";
}

/// Full command line: argv[1] is the command.
inline int main(int argc, char** argv, std::ostream& err = std::cerr) {
  if (argc < 2) {
    err << usage_text();
    return usage;
  }
  const std::string command = argv[1];
  if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
    err << "unknown command '" << command << "'\n" << usage_text();
    return usage;
  }
  CLI::App app{"Bilateral fluctuation experiments", "bilateral " + command};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, format;
  std::optional<unsigned> workers;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "RNG seed (overrides the config)");
  app.add_option("--out", out, "output directory");
  app.add_option("--workers", workers, "worker threads; results do not depend on it");
  app.add_option("--format", format, "comma-separated subset of csv,json,svg");
  try {
    app.parse(argc - 1, argv + 1);
  } catch (const CLI::CallForHelp&) {
    err << app.help() << usage_text();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return validation;
  }
  try {
    Json doc = config_path.empty() ? Json::object() : io::read_json(config_path);
    const auto cfg = make_config(std::move(doc), seed, out, workers, format);
    return run(command, cfg, err);
  } catch (const Error& e) {
    err << command << ": " << e.what() << '\n';
    return is_validation(e.code()) ? validation : numerical;
  } catch (const nlohmann::json::exception& e) {
    err << command << ": bad config: " << e.what() << '\n';
    return validation;
  }
}

}  // namespace bilateral::cli
