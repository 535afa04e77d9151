#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bilateral/error.hpp"
#include "bilateral/monotone_table.hpp"
#include "bilateral/quadrature.hpp"
#include "bilateral/specfun.hpp"

namespace bilateral {

struct Atom {
  double location = 0.0;
  double mass = 0.0;
};

/// String mass on [0, x_max]: an absolutely continuous part stored as the
/// mass of each grid cell, plus atoms sitting on grid nodes.
class StringMeasure {
 public:
  StringMeasure() = default;

  /// Density sampled at the nodes, cell masses by the trapezoid rule.
  static StringMeasure from_density(std::vector<double> nodes, std::span<const double> density,
                                    std::vector<Atom> atoms = {}) {
    require(nodes.size() == density.size() && nodes.size() >= 2, Errc::domain,
            "string density needs matching nodes and values");
    std::vector<double> mass(nodes.size() - 1);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      require(density[i] >= 0 && density[i + 1] >= 0, Errc::domain, "string density must be nonnegative");
      mass[i] = 0.5 * (density[i] + density[i + 1]) * (nodes[i + 1] - nodes[i]);
    }
    return StringMeasure(std::move(nodes), std::move(mass), std::move(atoms));
  }

  /// Density given as a function, integrated per cell.
  static StringMeasure from_function(const std::function<double(double)>& density, std::vector<double> nodes,
                                     std::vector<Atom> atoms = {}) {
    require(nodes.size() >= 2, Errc::domain, "string needs at least one cell");
    for (const auto& a : atoms) insert_node(nodes, a.location);
    std::vector<double> mass(nodes.size() - 1);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
      mass[i] = quad::gauss_kronrod(density, nodes[i], nodes[i + 1], 1e-13, 1e-300).value;
    return StringMeasure(std::move(nodes), std::move(mass), std::move(atoms));
  }

  /// Continuous part given by its cumulative mass at the nodes.
  static StringMeasure from_cumulative(std::vector<double> nodes, std::span<const double> cumulative,
                                       std::vector<Atom> atoms = {}) {
    require(nodes.size() == cumulative.size() && nodes.size() >= 2, Errc::domain,
            "cumulative string needs matching nodes and values");
    std::vector<double> mass(nodes.size() - 1);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      mass[i] = cumulative[i + 1] - cumulative[i];
      require(mass[i] >= -1e-15 * std::abs(cumulative[i + 1]), Errc::domain, "string mass must be nondecreasing");
      mass[i] = std::max(mass[i], 0.0);
    }
    return StringMeasure(std::move(nodes), std::move(mass), std::move(atoms));
  }

  StringMeasure(std::vector<double> nodes, std::vector<double> cell_mass, std::vector<Atom> atoms)
      : nodes_(std::move(nodes)), cell_mass_(std::move(cell_mass)) {
    require(nodes_.size() >= 2 && cell_mass_.size() + 1 == nodes_.size(), Errc::domain,
            "string needs nodes and one mass per cell");
    require(nodes_.front() == 0.0, Errc::domain, "string grid must start at 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      require(nodes_[i] > nodes_[i - 1], Errc::domain, "string grid must increase");
    for (double m : cell_mass_) require(m >= 0 && std::isfinite(m), Errc::domain, "cell masses must be nonnegative");
    atom_mass_.assign(nodes_.size(), 0.0);
    for (const auto& a : atoms) {
      require(a.mass > 0 && a.location >= 0 && a.location <= nodes_.back(), Errc::domain,
              "atoms need positive mass inside the string");
      // Split the cell so the atom sits on a node.
      auto it = std::lower_bound(nodes_.begin(), nodes_.end(), a.location);
      std::size_t j = static_cast<std::size_t>(it - nodes_.begin());
      if (nodes_[j] != a.location) {
        const std::size_t cell = j - 1;
        const double w = (a.location - nodes_[cell]) / (nodes_[j] - nodes_[cell]);
        const double m = cell_mass_[cell];
        nodes_.insert(nodes_.begin() + static_cast<std::ptrdiff_t>(j), a.location);
        cell_mass_[cell] = w * m;
        cell_mass_.insert(cell_mass_.begin() + static_cast<std::ptrdiff_t>(j), (1 - w) * m);
        atom_mass_.insert(atom_mass_.begin() + static_cast<std::ptrdiff_t>(j), 0.0);
      }
      atom_mass_[j] += a.mass;
    }
  }

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> cell_mass() const { return cell_mass_; }
  std::span<const double> atom_mass() const { return atom_mass_; }
  double x_max() const { return nodes_.back(); }

  std::vector<Atom> atoms() const {
    std::vector<Atom> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (atom_mass_[i] > 0) out.push_back({nodes_[i], atom_mass_[i]});
    return out;
  }

  /// m(x) including atoms at or before x.
  double mass(double x) const {
    double total = 0.0;
    for (std::size_t i = 0; i < nodes_.size() && nodes_[i] <= x; ++i) {
      total += atom_mass_[i];
      if (i + 1 < nodes_.size()) {
        const double frac = std::min(1.0, (x - nodes_[i]) / (nodes_[i + 1] - nodes_[i]));
        total += frac * cell_mass_[i];
      }
    }
    return total;
  }

  /// Average density of each cell.
  std::vector<double> cell_density() const {
    std::vector<double> d(cell_mass_.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = cell_mass_[i] / (nodes_[i + 1] - nodes_[i]);
    return d;
  }

 private:
  static void insert_node(std::vector<double>& nodes, double x) {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), x);
    if (it == nodes.end() || *it != x) nodes.insert(it, x);
  }

  std::vector<double> nodes_, cell_mass_, atom_mass_;
};

/// A- and D-solutions on the string grid. A' and D' are right limits at
/// atoms. log_A and log_minus_DDprime stay finite where A overflows.
struct ABSolutions {
  std::vector<double> xs, A, A_prime, D, D_prime;
  std::vector<double> log_A, log_minus_DDprime;
  double lambda = 0.0;
  double tail_share = 0.0;  // share of D(0) contributed beyond x_max
};

struct KreinOptions {
  double max_tail_share = 0.05;
};

namespace detail {

struct CellStep {
  double log_a;     // log A at the cell end when A = 1 at the start
  double slope;     // A'/A at the cell end
  double inv_sq;    // integral of A^-2 over the cell
};

// Exact propagation across a cell of constant density for A(start) = 1,
// A'(start) = slope. With r = slope / kappa and T = tanh(kappa h):
//   A(end) = cosh(kappa h) (1 + r T),  A'/A = kappa (T + r) / (1 + r T),
// and the integral of A^-2 is T / (kappa (1 + r T)), from (B/A)' = 1/A^2 with
// B(0) = 0, B'(0) = 1. Written this way nothing overflows on long cells.
inline CellStep propagate_cell(double slope, double h, double mass, double lambda) {
  const double rho = mass / h;
  const double kappa = lambda * std::sqrt(rho);
  const double kh = kappa * h;
  if (kh < 1e-8) {
    const double a = 1.0 + slope * h + 0.5 * lambda * lambda * rho * h * h;
    return {std::log(a), (slope + lambda * lambda * rho * h * (1.0 + 0.5 * slope * h)) / a, h / a};
  }
  const double T = std::tanh(kh);
  const double r = slope / kappa;
  const double g = 1.0 + r * T;
  const double log_cosh = kh + std::log1p(std::exp(-2.0 * kh)) - std::numbers::ln2;
  return {log_cosh + std::log(g), kappa * (T + r) / g, T / (kappa * g)};
}

}  // namespace detail

/// Solves d^2 A / (dm dx) = lambda^2 A with A(0) = 1, A'(0-) = 0 by exact
/// per-cell transfer matrices (A' jumps by lambda^2 w A at an atom of mass w),
/// then D = A * integral_x^inf A^-2 with the tail beyond x_max taken from the
/// string continued with its last cell density.
inline ABSolutions integrate_AD(const StringMeasure& m, double lambda, double x_max = 0.0,
                                const KreinOptions& opt = {}) {
  require(lambda > 0 && std::isfinite(lambda), Errc::domain, "integrate_AD needs lambda > 0");
  const auto nodes = m.nodes();
  const auto cm = m.cell_mass();
  const auto am = m.atom_mass();
  if (x_max <= 0) x_max = m.x_max();
  require(x_max <= m.x_max() * (1 + 1e-15), Errc::domain, "x_max beyond the string grid");
  std::size_t n = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), x_max * (1 + 1e-15)) - nodes.begin());
  require(n >= 2, Errc::domain, "x_max leaves no cell");
  const double l2 = lambda * lambda;

  ABSolutions out;
  out.lambda = lambda;
  out.xs.assign(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<double> logA(n), slope(n), J(n - 1);
  logA[0] = 0.0;
  slope[0] = l2 * am[0];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto step = detail::propagate_cell(slope[i], nodes[i + 1] - nodes[i], cm[i], lambda);
    J[i] = step.inv_sq;
    logA[i + 1] = logA[i] + step.log_a;
    slope[i + 1] = step.slope + l2 * am[i + 1];
  }
  // Tail: continue with the density of the last cell.
  const double rho_last = cm[n - 2] / (nodes[n - 1] - nodes[n - 2]);
  const double kappa = lambda * std::sqrt(rho_last);
  double tail;
  if (kappa > 0)
    tail = 1.0 / (kappa + slope[n - 1]);
  else if (slope[n - 1] > 0)
    tail = 1.0 / slope[n - 1];
  else
    throw Error(Errc::tail_estimation, "A is flat at x_max; the tail integral diverges");

  // Scaled remainders S_i = e^{2 logA_i} * integral_{x_i}^inf A^-2.
  std::vector<double> S(n);
  S[n - 1] = tail;
  for (std::size_t i = n - 1; i-- > 0;) S[i] = J[i] + std::exp(-2.0 * (logA[i + 1] - logA[i])) * S[i + 1];
  out.tail_share = std::exp(-2.0 * logA[n - 1]) * tail / S[0];
  if (!(out.tail_share <= opt.max_tail_share)) {
    throw Error(Errc::tail_estimation,
                "x_max too small: the tail beyond it carries " + std::to_string(out.tail_share) +
                    " of D(0); A has not reached its exponential regime");
  }

  out.A.resize(n);
  out.A_prime.resize(n);
  out.D.resize(n);
  out.D_prime.resize(n);
  out.log_A = logA;
  out.log_minus_DDprime.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(logA[i]), ie = std::exp(-logA[i]);
    out.A[i] = e;
    out.A_prime[i] = slope[i] * e;
    out.D[i] = S[i] * ie;
    const double dprime_scaled = slope[i] * S[i] - 1.0;
    out.D_prime[i] = dprime_scaled * ie;
    out.log_minus_DDprime[i] = std::log(S[i] * -dprime_scaled) - 2.0 * logA[i];
  }
  return out;
}

/// D recomputed by integrating the string equation backward from
/// (D(x_max), D'(x_max)), independent of the A * integral construction.
inline std::vector<double> backward_D(const StringMeasure& m, const ABSolutions& sol) {
  const auto nodes = m.nodes();
  const auto cm = m.cell_mass();
  const auto am = m.atom_mass();
  const std::size_t n = sol.xs.size();
  const double l = sol.lambda;
  std::vector<double> D(n);
  double d = sol.D[n - 1], dp = sol.D_prime[n - 1];
  D[n - 1] = d;
  for (std::size_t i = n - 1; i-- > 0;) {
    dp -= l * l * am[i + 1] * d;  // left limit at node i+1
    const double h = nodes[i + 1] - nodes[i];
    const double kappa = l * std::sqrt(cm[i] / h);
    double nd, ndp;
    if (kappa * h < 1e-8) {
      nd = d - dp * h;
      ndp = dp - l * l * cm[i] * d;
    } else {
      const double c = std::cosh(kappa * h), s = std::sinh(kappa * h);
      nd = c * d - s / kappa * dp;
      ndp = -kappa * s * d + c * dp;
    }
    d = nd;
    dp = ndp;
    D[i] = d;
  }
  return D;
}

/// D(0, lambda) for each lambda.
inline std::vector<double> spectral_transform(const StringMeasure& m, std::span<const double> lambdas,
                                              double x_max = 0.0, const KreinOptions& opt = {}) {
  std::vector<double> out;
  out.reserve(lambdas.size());
  for (double l : lambdas) {
    require(l > 0, Errc::domain, "spectral_transform needs positive lambdas");
    out.push_back(integrate_AD(m, l, x_max, opt).D.front());
  }
  return out;
}

/// Density of a spectral measure on a u-grid, linear between nodes, constant
/// below the first node and a power law with tail_exponent above the last.
struct SpectralDensity {
  std::vector<double> us;
  std::vector<double> density;
  double tail_exponent = 0.0;
  double residual = 0.0;  // rms relative forward residual of the fit
  bool ill_posed = false;

  double operator()(double u) const {
    if (u <= us.front()) return density.front();
    if (u >= us.back()) return density.back() * std::pow(u / us.back(), tail_exponent);
    const auto j = static_cast<std::size_t>(std::upper_bound(us.begin(), us.end(), u) - us.begin());
    const double a = density[j - 1], b = density[j];
    const double w = (u - us[j - 1]) / (us[j] - us[j - 1]);
    return a + w * (b - a);
  }

  /// (2/pi) integral of Delta'(u) / (u^2 + lambda^2).
  double transform(double lambda) const {
    QuadratureSpec q;
    q.u_max = us.back();
    q.tail_order = tail_exponent;
    return stieltjes_integral(*this, lambda, q, us);
  }
};

namespace detail {

// Lawson-Hanson active set solution of min |A x - b| subject to x >= 0.
inline Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index n = A.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * A.norm() * std::max(1.0, b.norm());
  for (int outer = 0; outer < 3 * n + 10; ++outer) {
    Eigen::VectorXd w = A.transpose() * (b - A * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
      Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
      const Eigen::VectorXd z = Ap.colPivHouseholderQr().solve(b);
      bool feasible = true;
      for (Eigen::Index k = 0; k < z.size(); ++k) feasible = feasible && z(k) > 0;
      if (feasible) {
        x.setZero();
        for (std::size_t k = 0; k < idx.size(); ++k) x(idx[k]) = z(static_cast<Eigen::Index>(k));
        break;
      }
      double alpha = 1.0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double zk = z(static_cast<Eigen::Index>(k));
        if (zk <= 0) alpha = std::min(alpha, x(idx[k]) / (x(idx[k]) - zk));
      }
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double zk = z(static_cast<Eigen::Index>(k));
        x(idx[k]) += alpha * (zk - x(idx[k]));
        if (x(idx[k]) <= 1e-300) {
          x(idx[k]) = 0.0;
          passive[static_cast<std::size_t>(idx[k])] = false;
        }
      }
    }
  }
  return x;
}

// Transform of the piecewise-linear hat basis on us (flat below us[0],
// power law above us.back()).
inline Eigen::MatrixXd hat_kernel(std::span<const double> lambdas, std::span<const double> us, double tail_exponent) {
  const std::size_t n = us.size();
  Eigen::MatrixXd K(static_cast<Eigen::Index>(lambdas.size()), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < lambdas.size(); ++r) {
    const double l = lambdas[r];
    auto ker = [l](double u) { return 1.0 / (u * u + l * l); };
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      if (j == 0) v += std::atan(us[0] / l) / l;
      if (j > 0) {
        const double a = us[j - 1], b = us[j];
        v += quad::gauss_kronrod([&](double u) { return (u - a) / (b - a) * ker(u); }, a, b, 1e-12).value;
      }
      if (j + 1 < n) {
        const double a = us[j], b = us[j + 1];
        v += quad::gauss_kronrod([&](double u) { return (b - u) / (b - a) * ker(u); }, a, b, 1e-12).value;
      }
      if (j + 1 == n) v += power_tail(std::pow(us[j], -tail_exponent), tail_exponent, l, us[j]);
      K(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = 2.0 / std::numbers::pi * v;
    }
  }
  return K;
}

}  // namespace detail

struct SpectralFitOptions {
  double residual_threshold = 1e-2;
  int tail_iterations = 6;
};

/// Exploratory inversion of D(0, lambda) samples: nonnegative least squares
/// for Delta' at the u-grid nodes with relative residuals and a ridge on the
/// second differences of log-scaled coefficients (deviations from a power
/// law). The tail exponent is re-estimated from the fitted top decade.
inline SpectralDensity fit_spectral_density(std::span<const double> lambdas, std::span<const double> values,
                                            std::span<const double> us, double ridge,
                                            const SpectralFitOptions& opt = {}) {
  require(!lambdas.empty() && lambdas.size() == values.size(), Errc::precondition,
          "fit_spectral_density needs matching samples");
  require(lambdas.size() >= 8, Errc::precondition, "fit_spectral_density needs at least 8 samples");
  const auto [lo, hi] = std::minmax_element(lambdas.begin(), lambdas.end());
  require(*lo > 0 && std::log10(*hi / *lo) >= 1.5, Errc::precondition, "samples must span 1.5 decades");
  require(us.size() >= 4 && us.front() > 0, Errc::precondition, "u grid needs at least 4 positive nodes");
  require(ridge >= 0, Errc::domain, "ridge must be nonnegative");
  const auto m = static_cast<Eigen::Index>(lambdas.size());
  const auto n = static_cast<Eigen::Index>(us.size());

  double p = 0.0;
  SpectralDensity out;
  out.us.assign(us.begin(), us.end());
  for (int it = 0; it < opt.tail_iterations; ++it) {
    const Eigen::MatrixXd K = detail::hat_kernel(lambdas, us, p);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + n - 2, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m + n - 2);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index j = 0; j < n; ++j)
        A(r, j) = K(r, j) * std::pow(us[static_cast<std::size_t>(j)], p) / values[static_cast<std::size_t>(r)];
      b(r) = 1.0;
    }
    const double sr = std::sqrt(ridge);
    for (Eigen::Index j = 1; j + 1 < n; ++j) {
      A(m + j - 1, j - 1) = sr;
      A(m + j - 1, j) = -2 * sr;
      A(m + j - 1, j + 1) = sr;
    }
    const Eigen::VectorXd e = detail::nnls(A, b);
    out.density.resize(us.size());
    for (std::size_t j = 0; j < us.size(); ++j) out.density[j] = e(static_cast<Eigen::Index>(j)) * std::pow(us[j], p);
    out.tail_exponent = p;
    // Re-estimate the tail exponent on the top decade of positive values.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t j = 0; j < us.size(); ++j) {
      if (us[j] < us.back() / 10 || out.density[j] <= 0) continue;
      const double lx = std::log(us[j]), ly = std::log(out.density[j]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++cnt;
    }
    if (cnt < 2) break;
    const double next = std::clamp((cnt * sxy - sx * sy) / (cnt * sxx - sx * sx), -0.95, 0.95);
    if (std::abs(next - p) < 1e-4) break;
    p = next;
  }
  const Eigen::MatrixXd K = detail::hat_kernel(lambdas, us, out.tail_exponent);
  Eigen::VectorXd c(n);
  for (Eigen::Index j = 0; j < n; ++j) c(j) = out.density[static_cast<std::size_t>(j)];
  const Eigen::VectorXd fwd = K * c;
  double ss = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) {
    const double rel = fwd(r) / values[static_cast<std::size_t>(r)] - 1.0;
    ss += rel * rel;
  }
  out.residual = std::sqrt(ss / static_cast<double>(m));
  out.ill_posed = out.residual > opt.residual_threshold;
  return out;
}

struct EntropyResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool plateau = false;
  double plateau_spread = 0.0;
  std::vector<double> xs;        // evaluation points of the limit sequence
  std::vector<double> sequence;  // its values
};

struct EntropyOptions {
  double plateau_tol = 1e-3;
  double step_ratio = 1.25;  // spacing of the limit sequence
  double x_start = 0.0;      // first evaluation point (default: 1% of x_max)
  double x_stop_fraction = 0.9;
};

/// Left side of the entropy formula, (2 lambda / pi) integral of
/// log Delta'(u) / (u^2 + lambda^2), for a callable log-density. The log
/// singularities at zeros of Delta' are integrable and left to the
/// endpoint-clustered tanh-sinh rule.
template <class LogDensity>
double entropy_lhs(LogDensity&& log_density, double lambda, double u_max = 1e8) {
  QuadratureSpec q;
  q.u_max = u_max;
  q.tail = TailModel::logarithmic;
  q.rel_tol = 1e-12;
  return lambda * stieltjes_integral(log_density, lambda, q);
}

inline double entropy_lhs(const SpectralDensity& delta, double lambda) {
  require(!delta.density.empty(), Errc::precondition, "empty spectral density");
  for (double d : delta.density) require(d > 0, Errc::precondition, "entropy needs a positive density");
  std::vector<double> breaks(delta.us.begin(), delta.us.end());
  // Split at sign changes of log density.
  for (std::size_t j = 0; j + 1 < delta.us.size(); ++j) {
    const double a = delta.density[j], b = delta.density[j + 1];
    if ((a - 1) * (b - 1) < 0) breaks.push_back(delta.us[j] + (1 - a) / (b - a) * (delta.us[j + 1] - delta.us[j]));
  }
  std::sort(breaks.begin(), breaks.end());
  QuadratureSpec q;
  q.u_max = delta.us.back();
  q.tail = TailModel::logarithmic;
  q.rel_tol = 1e-12;
  return lambda * stieltjes_integral([&](double u) { return std::log(delta(u)); }, lambda, q, breaks);
}

/// Right side: the limit of log(-D D' e^{2 lambda tau(x)}) + log lambda along
/// an increasing sequence of x, where tau is the exponential type
/// integral_0^x sqrt(dm/dx) (computed from the cells unless a table is given).
/// A plateau is three consecutive values within plateau_tol.
inline EntropyResult entropy_rhs(const StringMeasure& m, double lambda, const MonotoneTable* type_map = nullptr,
                                 const EntropyOptions& opt = {}) {
  const auto sol = integrate_AD(m, lambda, 0.0, KreinOptions{1.0});
  const auto nodes = m.nodes();
  const auto cm = m.cell_mass();
  std::vector<double> tau(sol.xs.size(), 0.0);
  for (std::size_t i = 0; i + 1 < sol.xs.size(); ++i)
    tau[i + 1] = tau[i] + std::sqrt(cm[i] * (nodes[i + 1] - nodes[i]));
  if (type_map)
    for (std::size_t i = 0; i < sol.xs.size(); ++i) tau[i] = (*type_map)(sol.xs[i]);
  EntropyResult res;
  const double x_stop = opt.x_stop_fraction * m.x_max();
  double x = opt.x_start > 0 ? opt.x_start : 0.01 * m.x_max();
  while (x <= x_stop) {
    const auto j = static_cast<std::size_t>(std::lower_bound(sol.xs.begin(), sol.xs.end(), x) - sol.xs.begin());
    if (j >= sol.xs.size()) break;
    if (res.xs.empty() || sol.xs[j] > res.xs.back()) {
      res.xs.push_back(sol.xs[j]);
      res.sequence.push_back(sol.log_minus_DDprime[j] + 2 * lambda * tau[j] + std::log(lambda));
    }
    x *= opt.step_ratio;
  }
  require(res.sequence.size() >= 3, Errc::non_convergence, "entropy: fewer than three evaluation points");
  for (std::size_t k = 2; k < res.sequence.size(); ++k) {
    const double a = res.sequence[k - 2], b = res.sequence[k - 1], c = res.sequence[k];
    const double spread = std::max({a, b, c}) - std::min({a, b, c});
    if (spread < opt.plateau_tol) {
      res.plateau = true;
      res.plateau_spread = spread;
      res.rhs = c;
      // Keep walking: later plateaus are closer to the limit.
    }
  }
  if (!res.plateau) {
    res.rhs = res.sequence.back();
    const std::size_t k = res.sequence.size();
    res.plateau_spread = std::max({res.sequence[k - 1], res.sequence[k - 2], res.sequence[k - 3]}) -
                         std::min({res.sequence[k - 1], res.sequence[k - 2], res.sequence[k - 3]});
  }
  return res;
}

/// Both sides of the entropy formula for a tabulated spectral density.
inline EntropyResult entropy_formula(const StringMeasure& m, const MonotoneTable* type_map,
                                     const SpectralDensity& delta, double lambda, const EntropyOptions& opt = {}) {
  auto res = entropy_rhs(m, lambda, type_map, opt);
  res.lhs = entropy_lhs(delta, lambda);
  return res;
}

}  // namespace bilateral
