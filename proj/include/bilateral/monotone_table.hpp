#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "bilateral/error.hpp"

namespace bilateral {

/// Tabulated nondecreasing function. Log-log linear between nodes (linear
/// where a node is zero), a fitted power law below the first node and
/// constant above the last one.
class MonotoneTable {
 public:
  MonotoneTable() = default;

  MonotoneTable(std::vector<double> xs, std::vector<double> ys)
      : xs_(std::move(xs)), ys_(std::move(ys)) {
    require(!xs_.empty() && xs_.size() == ys_.size(), Errc::domain,
            "table needs matching nonempty xs and ys");
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      require(std::isfinite(xs_[i]) && std::isfinite(ys_[i]), Errc::domain, "table entries must be finite");
      require(xs_[i] >= 0 && ys_[i] >= 0, Errc::domain, "table entries must be nonnegative");
      if (i > 0) {
        require(xs_[i] > xs_[i - 1], Errc::domain, "table xs must be strictly increasing");
        require(ys_[i] >= ys_[i - 1], Errc::domain, "table ys must be nondecreasing");
      }
    }
    prepare();
  }

  static MonotoneTable power_law(double c, double exponent, std::span<const double> xs) {
    std::vector<double> ys(xs.size());
    std::transform(xs.begin(), xs.end(), ys.begin(),
                   [&](double x) { return c * std::pow(x, exponent); });
    return MonotoneTable({xs.begin(), xs.end()}, std::move(ys));
  }

  std::span<const double> xs() const { return xs_; }
  std::span<const double> ys() const { return ys_; }
  std::size_t size() const { return xs_.size(); }
  bool empty() const { return xs_.empty(); }
  double x_front() const { return xs_.front(); }
  double x_back() const { return xs_.back(); }
  double y_back() const { return ys_.back(); }

  /// Exponent of the power law used below the first node (NaN if the
  /// extension is identically zero or the first node sits at 0).
  double front_exponent() const { return front_exponent_; }

  double operator()(double x) const {
    if (x <= xs_.front()) {
      if (x == xs_.front() || xs_.front() == 0.0) return ys_.front();
      if (std::isnan(front_exponent_)) return ys_.front();
      if (x <= 0.0) return front_exponent_ > 0 ? 0.0 : ys_.front();
      return ys_.front() * std::pow(x / xs_.front(), front_exponent_);
    }
    if (x >= xs_.back()) return ys_.back();
    const std::size_t i =
        static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin()) - 1;
    return cell_value(i, x);
  }

  /// Generalized inverse inf{x : F(x) >= y}.
  double inverse(double y) const {
    require(y <= ys_.back() * (1 + 1e-15), Errc::domain, "inverse: level above table range");
    if (y <= 0.0) return 0.0;
    if (y < ys_.front()) {
      if (front_exponent_ > 0) return xs_.front() * std::pow(y / ys_.front(), 1.0 / front_exponent_);
      return xs_.front();
    }
    const auto it = std::lower_bound(ys_.begin(), ys_.end(), y);
    const std::size_t j = static_cast<std::size_t>(it - ys_.begin());
    if (j == 0) return xs_.front();
    if (j >= ys_.size()) return xs_.back();
    const std::size_t i = j - 1;
    if (log_cell_[i]) return xs_[i] * std::exp(std::log(y / ys_[i]) / slope_[i]);
    return xs_[i] + (y - ys_[i]) / (ys_[j] - ys_[i]) * (xs_[j] - xs_[i]);
  }

 private:
  double cell_value(std::size_t i, double x) const {
    if (log_cell_[i]) return ys_[i] * std::exp(slope_[i] * std::log(x / xs_[i]));
    const double w = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
    return ys_[i] + w * (ys_[i + 1] - ys_[i]);
  }

  void prepare() {
    const std::size_t n = xs_.size();
    slope_.assign(n > 0 ? n - 1 : 0, 0.0);
    log_cell_.assign(slope_.size(), false);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (xs_[i] > 0 && ys_[i] > 0 && ys_[i + 1] > ys_[i]) {
        log_cell_[i] = true;
        slope_[i] = std::log(ys_[i + 1] / ys_[i]) / std::log(xs_[i + 1] / xs_[i]);
      }
    }
    front_exponent_ = std::numeric_limits<double>::quiet_NaN();
    if (xs_.front() <= 0 || ys_.front() <= 0) return;
    // Least squares in log-log over the first decade of positive nodes.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (std::size_t i = 0; i < n && xs_[i] <= 10 * xs_.front(); ++i) {
      const double lx = std::log(xs_[i]), ly = std::log(ys_[i]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++count;
    }
    if (count >= 2) {
      const double den = count * sxx - sx * sx;
      if (den > 0) front_exponent_ = (count * sxy - sx * sy) / den;
    } else if (n >= 2 && ys_[1] > 0) {
      front_exponent_ = std::log(ys_[1] / ys_[0]) / std::log(xs_[1] / xs_[0]);
    }
    if (front_exponent_ < 0) front_exponent_ = 0.0;
  }

  std::vector<double> xs_, ys_, slope_;
  std::vector<bool> log_cell_;
  double front_exponent_ = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace bilateral
