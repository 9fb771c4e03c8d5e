#ifndef QGLAND_QUADRATURE_HPP
#define QGLAND_QUADRATURE_HPP

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace qgland::quad {

using Density = std::function<double(double)>;

/// Fixed 20-point Gauss-Legendre on [a, b].
inline double gauss(const Density& f, double a, double b) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

/// Gauss-Legendre with a u^2 substitution at endpoints where the integrand
/// behaves like a square root of the distance (turning points).
inline double gauss_sqrt_ends(const Density& f, double a, double b, bool sing_a, bool sing_b) {
  if (a == b) return 0.0;
  if (sing_a && sing_b) {
    double m = 0.5 * (a + b);
    return gauss_sqrt_ends(f, a, m, true, false) + gauss_sqrt_ends(f, m, b, false, true);
  }
  const double w = b - a;
  if (sing_a) {
    return gauss([&](double u) { return f(a + w * u * u) * 2.0 * w * u; }, 0.0, 1.0);
  }
  if (sing_b) {
    return gauss([&](double u) { return f(b - w * u * u) * 2.0 * w * u; }, 0.0, 1.0);
  }
  return gauss(f, a, b);
}

/// Sign changes of f on [s0, s1], located by a scan of `n_scan` cells and
/// bisection to |f| <= ftol (or interval width at machine precision).
/// Touching zeros without a sign change are not reported.
inline std::vector<double> crossings(const Density& f, double s0, double s1, int n_scan, double ftol) {
  std::vector<double> roots;
  double prev_s = s0;
  bool prev_pos = f(s0) > 0.0;
  for (int i = 1; i <= n_scan; ++i) {
    double s = s0 + (s1 - s0) * static_cast<double>(i) / n_scan;
    bool pos = f(s) > 0.0;
    if (pos != prev_pos) {
      double lo = prev_s, hi = s;
      for (int it = 0; it < 200 && hi - lo > 4e-16 * std::max(1.0, std::abs(lo)); ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (std::abs(fm) <= ftol) {
          lo = hi = mid;
          break;
        }
        if ((fm > 0.0) == prev_pos)
          lo = mid;
        else
          hi = mid;
      }
      double r = 0.5 * (lo + hi);
      if (r > s0 && r < s1) roots.push_back(r);
    }
    prev_s = s;
    prev_pos = pos;
  }
  return roots;
}

/// Tabulated cumulative integral s -> int_0^s density on [0, length]. Nodes
/// flagged as breakpoints get the square-root endpoint treatment.
class Cumulative {
 public:
  Cumulative() = default;

  Cumulative(Density density, double length, std::vector<double> breakpoints, double max_cell, bool sqrt_breaks)
      : f_(std::move(density)), sqrt_breaks_(sqrt_breaks) {
    std::sort(breakpoints.begin(), breakpoints.end());
    std::vector<double> anchors{0.0};
    for (double b : breakpoints)
      if (b > 0.0 && b < length) anchors.push_back(b);
    anchors.push_back(length);
    for (std::size_t i = 0; i + 1 < anchors.size(); ++i) {
      double a = anchors[i], b = anchors[i + 1];
      int n = std::max(1, static_cast<int>(std::ceil((b - a) / max_cell)));
      for (int j = 0; j < n; ++j) {
        nodes_.push_back(a + (b - a) * j / n);
        is_break_.push_back(j == 0 && i > 0);
      }
    }
    nodes_.push_back(length);
    is_break_.push_back(false);
    cum_.assign(nodes_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
      cum_[i + 1] = cum_[i] + cell(i, nodes_[i], nodes_[i + 1]);
  }

  double length() const { return nodes_.back(); }
  double total() const { return cum_.back(); }

  double operator()(double s) const {
    s = std::clamp(s, 0.0, length());
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), s);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - nodes_.begin()) - 1));
    if (i + 1 >= nodes_.size()) return cum_.back();
    if (s == nodes_[i]) return cum_[i];
    bool right_break = sqrt_breaks_ && is_break_[i + 1];
    bool left_break = sqrt_breaks_ && is_break_[i];
    if (right_break && !left_break) return cum_[i + 1] - cell(i, s, nodes_[i + 1]);
    return cum_[i] + cell(i, nodes_[i], s);
  }

  /// int_{s0}^{s1} with sign (s1 may be below s0).
  double between(double s0, double s1) const { return (*this)(s1) - (*this)(s0); }

 private:
  double cell(std::size_t i, double a, double b) const {
    bool sa = sqrt_breaks_ && is_break_[i] && a == nodes_[i];
    bool sb = sqrt_breaks_ && i + 1 < nodes_.size() && is_break_[i + 1] && b == nodes_[i + 1];
    return gauss_sqrt_ends(f_, a, b, sa, sb);
  }

  Density f_;
  bool sqrt_breaks_ = false;
  std::vector<double> nodes_;
  std::vector<char> is_break_;
  std::vector<double> cum_;
};

}  // namespace qgland::quad

#endif  // QGLAND_QUADRATURE_HPP
