// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// nonzero when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bilateral/extrema_chain.hpp"
#include "bilateral/krein_string.hpp"
#include "bilateral/path_sim.hpp"
#include "bilateral/phi_system.hpp"
#include "bilateral/stable_forms.hpp"
#include "bilateral/stats.hpp"
#include "bilateral/string_bridge.hpp"

using namespace bilateral;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [miss]");
  }
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

MonotoneTable power_table(double gamma, double hi = 1e3) {
  return MonotoneTable::power_law(1.0, gamma, log_grid(1e-12, hi, 20));
}

// Two-sided exit for Cauchy from [-1, 3].
void exit_cauchy(Verdict& v) {
  const auto m = LevyModel::stable(1.0);
  const auto pp = positivity_exact(m);
  const double formula = exit_probability(pp, 3.0, 1.0);
  v.check(std::abs(formula - 1.0 / 3.0) < 1e-9, "formula " + num(formula, 12));
  const auto e = exit_probability_mc(m, 3.0, 1.0, 200000, 1e-3, 101);
  v.check(std::abs(e.extrapolated - 1.0 / 3.0) < 0.01,
          "MC extrapolated " + num(e.extrapolated, 5) + " (coarse " + num(e.coarse, 5) + ", fine " + num(e.fine, 5) +
              ", s.e. " + num(e.std_error, 2) + ")");
}

// phi from the ODE solver, the closed form and the kernel chain.
void phi_triple(Verdict& v) {
  const auto pp = positivity_exact(LevyModel::stable(1.0, 0.0, Killing::lebesgue_proxy));
  const auto H = power_table(pp.gamma);
  const auto grid = log_grid(0.1, 1.0, 200);
  double sup = 0.0, worst_z = 0.0;
  std::size_t seed = 202;
  for (double l : {0.5, 1.0, 2.0}) {
    const auto pair = solve_phi(H, H, l, grid);
    const double k = fit_phi_constant(pp, grid, pair.plus.phi, l);
    const StableFluctuationLaw law{pp, k, 1.0};
    for (std::size_t i = 0; i < grid.size(); ++i)
      sup = std::max(sup, std::abs(pair.plus.phi[i] / phi_closed(law, grid[i], l) - 1.0));
    const auto est = phi_mc(H, H, 1.0, l, 100000, seed++);
    const double z = (est.value.real() - pair.plus.phi.back().real()) / est.se_real;
    if (std::abs(z) > std::abs(worst_z)) worst_z = z;
  }
  v.check(sup < 1e-3, "solver vs closed form sup rel " + num(sup, 3));
  v.check(std::abs(worst_z) < 3, "chain vs solver worst z " + num(worst_z, 3));
}

// Second height over first height on second-case Cauchy paths.
void ladder_kernel(Verdict& v) {
  const auto m = LevyModel::stable(1.0);
  const double delta = positivity_exact(m).delta;
  const auto paths = sample_capped_second_case(m, 1.0, 1e-5, 5000, 303);
  std::vector<double> ratio, weight;
  double sum_err = 0.0;
  for (const auto& p : paths) {
    sum_err = std::max(sum_err, std::abs(p.chain.sum() - p.final_minus_min));
    // On a grid the walk can end at its maximum, leaving a single height.
    if (p.chain.heights.size() < 2) continue;
    ratio.push_back(-p.chain.heights[1] / p.chain.heights[0]);
    weight.push_back(p.weight);
  }
  const auto ks =
      stats::ks_weighted(ratio, weight, [delta](double u) { return std::pow(std::clamp(u, 0.0, 1.0), delta); });
  v.check(ks.p_value > 0.01, "KS p " + num(ks.p_value, 3) + " on " + std::to_string(ratio.size()) + " chains");
  v.check(sum_err < 1e-9, "max |sum Z - (F - m)| " + num(sum_err, 2));
}

// Independence of the two sides of the minimum given a small amplitude.
void factorization(Verdict& v) {
  const auto rep = factorization_test(LevyModel::stable(1.0), 2.0, 100000, 5, 1e-3, 404);
  v.check(rep.p_value > 0.01, "chi-square " + num(rep.chi_square, 4) + " on " + num(rep.dof, 2) + " dof, p " +
                                  num(rep.p_value, 3) + ", " + std::to_string(rep.n_accepted) + " accepted");
}

double wronskian_error(const StringMeasure& m, double l) {
  const auto s = integrate_AD(m, l);
  double err = 0.0;
  for (std::size_t i = 0; i < s.xs.size() && s.A[i] < 1e6; ++i)
    err = std::max(err, std::abs(s.A[i] * s.D_prime[i] - s.A_prime[i] * s.D[i] + 1.0));
  return err;
}

void krein_facts(Verdict& v) {
  const double step = 1e-3, l = 1.3;
  std::vector<double> nodes;
  for (int i = 0; i <= 20000; ++i) nodes.push_back(i * step);
  const auto lebesgue = StringMeasure::from_density(nodes, std::vector<double>(nodes.size(), 1.0));
  const auto s = integrate_AD(lebesgue, l);
  double err = 0.0;
  for (std::size_t i = 0; i < s.xs.size() && s.xs[i] <= 5.0; ++i) {
    const double x = s.xs[i];
    err = std::max({err, std::abs(s.A[i] / std::cosh(l * x) - 1), std::abs(s.D[i] * l / std::exp(-l * x) - 1)});
  }
  v.check(err < 1e-8, "Lebesgue closed forms rel " + num(err, 2));

  const auto with_atoms = StringMeasure::from_function([](double x) { return 1.0 + 0.5 * std::sin(x) + 0.1 * x; },
                                                       nodes, {{0.0, 0.3}, {2.0, 0.5}, {5.0, 0.2}});
  auto cubic_nodes = log_grid(1e-6, 60.0, 400);
  cubic_nodes.insert(cubic_nodes.begin(), 0.0);
  std::vector<double> cubic_mass;
  for (double x : cubic_nodes) cubic_mass.push_back(x * x * x / 48);
  const auto cubic = StringMeasure::from_cumulative(cubic_nodes, cubic_mass);
  double w = 0.0;
  for (double lam : {0.5, 1.0, 3.0})
    w = std::max({w, wronskian_error(lebesgue, lam), wronskian_error(with_atoms, lam), wronskian_error(cubic, lam)});
  v.check(w < 1e-8, "Wronskian + 1 max " + num(w, 2));
}

void spectral_second_case(Verdict& v) {
  const auto m = LevyModel::stable(0.5, 0.0, Killing::lebesgue_proxy);
  const auto ls = log_grid(0.25, 4.0, 8);
  const auto rep = verify_spectral_identity(m, KillingCase::second, ls);
  v.check(std::abs(rep.slope + 0.5) < 0.02, "slope " + num(rep.slope, 6));
  v.check(rep.dispersion < 0.01, "constant dispersion " + num(rep.dispersion, 2));
}

void wiener_hopf(Verdict& v) {
  const auto b = LevyModel::brownian();
  const double q = wh_log_laplace(b, 1.0);
  v.check(std::abs(q - 2 * std::numbers::ln2) < 1e-6, "Brownian quadrature " + num(q, 10));
  const std::vector<double> one = {1.0};
  const auto rb = verify_wiener_hopf(b, one, 100000, 1e-3, 505);
  const auto& pb = rb.points[0];
  v.check(std::abs(pb.mc_mean - 0.25) < 3 * pb.mc_std_error,
          "Brownian MC " + num(pb.mc_mean, 5) + " +- " + num(pb.mc_std_error, 2) + " vs 1/4 (general form " +
              num(pb.general_form, 5) + ")");
  const std::vector<double> ls = {0.5, 1.0, 2.0};
  const auto rs = verify_wiener_hopf(LevyModel::stable(0.5), ls, 100000, 1e-3, 506);
  double gap = 0.0, gap_general = 0.0;
  for (const auto& p : rs.points) {
    gap = std::max(gap, p.rel_gap_symmetric);
    gap_general = std::max(gap_general, p.rel_gap_general);
  }
  v.check(gap < 1e-2, "alpha 1/2 max rel gap " + num(gap, 3) + " (general form " + num(gap_general, 2) + ")");
}

void entropy(Verdict& v) {
  std::vector<double> nodes;
  for (int i = 0; i <= 20000; ++i) nodes.push_back(i * 1e-3);
  const auto lebesgue = StringMeasure::from_density(nodes, std::vector<double>(nodes.size(), 1.0));
  const double l = 1.0;
  const double lhs0 = entropy_lhs([](double) { return 0.0; }, l);
  const auto r0 = entropy_rhs(lebesgue, l);
  v.check(std::abs(lhs0) < 1e-6 && std::abs(r0.rhs) < 1e-6 && r0.plateau,
          "Lebesgue lhs " + num(lhs0, 2) + " rhs " + num(r0.rhs, 2));

  const auto m = LevyModel::stable(0.5);
  FirstCaseHOptions ho;
  ho.seed = 606;
  const auto H = first_case_H(m, ho);
  const auto rep = entropy_route(m, H, l);
  const double gap = rep.entropy.rhs - rep.entropy.lhs;
  v.check(std::abs(gap) < 1e-2 && rep.entropy.plateau,
          "alpha 1/2 lhs " + num(rep.entropy.lhs, 5) + " rhs " + num(rep.entropy.rhs, 5) + " (plateau " +
              (rep.entropy.plateau ? "yes" : "no") + ", rhs - lhs - log 2 = " + num(gap - std::numbers::ln2, 2) + ")");
}

void rule4(Verdict& v) {
  const auto b = LevyModel::brownian();
  FirstCaseHOptions ho;
  ho.dt = 1e-4;
  ho.seed = 707;
  const auto H = first_case_H(b, ho);
  const auto u = unbounded_transform(H, 2.0, b);
  v.check(u.t_increasing && u.t_values.front() < 1e-3,
          std::string("t increasing ") + (u.t_increasing ? "yes" : "no") + ", t at first node " +
              num(u.t_values.front(), 4) + " (x = " + num(u.xs.front(), 2) + ")");
  v.check(u.sup_residual < 5e-2, "identity sup residual " + num(u.sup_residual, 3));
  bool pole = false;
  try {
    unbounded_transform(H, 1.0, b);
  } catch (const Error& e) {
    pole = e.code() == Errc::pole;
  }
  v.check(pole, "lambda = 1 rejected as pole");
}

void final_over_max(Verdict& v) {
  const auto pp = positivity_exact(LevyModel::stable(1.0));
  const auto H = power_table(pp.gamma);
  const auto chains = simulate_chains(H, H, 1.0, 100000, 1010);
  std::vector<double> ratio, top;
  for (const auto& c : chains) {
    ratio.push_back(c.final / c.max);
    top.push_back(c.max);
  }
  const auto law = final_over_max_law(pp);
  const auto ks = stats::ks_one_sample(ratio, [&](double u) { return incomplete_beta(law, std::clamp(u, 0.0, 1.0)); });
  v.check(ks.p_value > 0.01, "KS vs Beta(" + num(law.a, 3) + ", " + num(law.b, 3) + ") p " + num(ks.p_value, 3));
  const auto dc = stats::distance_correlation_test(ratio, top, 199, 1011);
  v.check(dc.p_value > 0.01, "dCor " + num(dc.dcor, 3) + " p " + num(dc.p_value, 3));
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Verdict&)> run;
};

const std::vector<Criterion> criteria = {
    {1, "two-sided exit, Cauchy", exit_cauchy},
    {2, "phi solver, closed form and chain", phi_triple},
    {3, "ladder heights from raw paths", ladder_kernel},
    {4, "factorization at the minimum", factorization},
    {5, "string A/D solutions", krein_facts},
    {6, "spectral identification, second case", spectral_second_case},
    {7, "Wiener-Hopf log-Laplace form", wiener_hopf},
    {8, "entropy formula", entropy},
    {9, "unbounded-variation transform, Brownian", rule4},
    {10, "F/M law and independence from M", final_over_max},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "criteria to run (default: all)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.check(false, std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << v.detail.str()
              << " [" << num(secs, 3) << " s]" << std::endl;
    failures += !v.pass;
  }
  return failures == 0 ? 0 : 1;
}
