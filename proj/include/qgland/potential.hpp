#ifndef QGLAND_POTENTIAL_HPP
#define QGLAND_POTENTIAL_HPP

#include <qgland/error.hpp>
#include <qgland/graph.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace qgland {

namespace potential {

struct Constant {
  double c = 0.0;
};

/// a + b cos(omega s + phi)
struct Cosine {
  double a = 0.0;
  double b = 0.0;
  double omega = 1.0;
  double phi = 0.0;
};

/// c0 + c1 s + c2 s^2
struct Quadratic {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

/// Values on a uniform grid spanning [0, length]; linear interpolation.
struct Sampled {
  std::vector<double> values;
};

using Descriptor = std::variant<Constant, Cosine, Quadratic, Sampled>;

}  // namespace potential

/// Nonnegative potential, one closed-form or sampled descriptor per edge,
/// stored in the edge's own orientation.
class PotentialField {
 public:
  PotentialField() = default;

  PotentialField(const MetricGraph& g, std::vector<potential::Descriptor> per_edge)
      : lengths_(g.num_edges()), desc_(std::move(per_edge)) {
    if (desc_.size() != g.num_edges())
      fail(ErrorKind::InvalidArgument, "potential needs one descriptor per edge");
    for (std::size_t e = 0; e < g.num_edges(); ++e) lengths_[e] = g.length(e);
    for (std::size_t e = 0; e < desc_.size(); ++e) {
      if (auto* smp = std::get_if<potential::Sampled>(&desc_[e]); smp && smp->values.size() < 2)
        fail(ErrorKind::InvalidArgument, "sampled potential needs at least two values");
      auto [lo, hi] = range(e, 0.0, lengths_[e]);
      (void)hi;
      if (!(lo >= 0.0) || !std::isfinite(lo))
        fail(ErrorKind::NegativePotential,
             "edge " + g.edge(e).name + " has minimum potential " + std::to_string(lo));
    }
  }

  static PotentialField zero(const MetricGraph& g) {
    return PotentialField(g, std::vector<potential::Descriptor>(g.num_edges(), potential::Constant{0.0}));
  }

  std::size_t num_edges() const { return desc_.size(); }
  const potential::Descriptor& descriptor(std::size_t e) const { return desc_.at(e); }
  const std::vector<potential::Descriptor>& descriptors() const { return desc_; }

  double operator()(std::size_t e, double s) const {
    return std::visit([&](const auto& d) { return eval(d, e, s); }, desc_.at(e));
  }
  double operator()(const GraphPoint& p) const { return (*this)(p.edge, p.s); }

  double derivative(std::size_t e, double s) const {
    return std::visit([&](const auto& d) { return deriv(d, e, s); }, desc_.at(e));
  }

  /// Exact (min, max) of V over [s0, s1] on edge e.
  std::pair<double, double> range(std::size_t e, double s0, double s1) const {
    if (s1 < s0) std::swap(s0, s1);
    return std::visit([&](const auto& d) { return range_of(d, e, s0, s1); }, desc_.at(e));
  }

  double min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < desc_.size(); ++e) m = std::min(m, range(e, 0.0, lengths_[e]).first);
    return m;
  }
  double max_value() const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < desc_.size(); ++e) m = std::max(m, range(e, 0.0, lengths_[e]).second);
    return m;
  }

  /// V + c on every edge; used for gauge shifts (E moves by the same c).
  PotentialField shifted(const MetricGraph& g, double c) const {
    std::vector<potential::Descriptor> out;
    out.reserve(desc_.size());
    for (const auto& d : desc_) {
      out.push_back(std::visit(
          [c](const auto& x) -> potential::Descriptor {
            using T = std::decay_t<decltype(x)>;
            T y = x;
            if constexpr (std::is_same_v<T, potential::Constant>) y.c += c;
            if constexpr (std::is_same_v<T, potential::Cosine>) y.a += c;
            if constexpr (std::is_same_v<T, potential::Quadratic>) y.c0 += c;
            if constexpr (std::is_same_v<T, potential::Sampled>)
              for (auto& v : y.values) v += c;
            return y;
          },
          d));
    }
    return PotentialField(g, std::move(out));
  }

 private:
  double eval(const potential::Constant& d, std::size_t, double) const { return d.c; }
  double eval(const potential::Cosine& d, std::size_t, double s) const {
    return d.a + d.b * std::cos(d.omega * s + d.phi);
  }
  double eval(const potential::Quadratic& d, std::size_t, double s) const { return d.c0 + s * (d.c1 + s * d.c2); }
  double eval(const potential::Sampled& d, std::size_t e, double s) const {
    const auto n = d.values.size() - 1;
    double t = std::clamp(s / lengths_[e], 0.0, 1.0) * static_cast<double>(n);
    auto i = std::min(static_cast<std::size_t>(t), n - 1);
    double w = t - static_cast<double>(i);
    return (1.0 - w) * d.values[i] + w * d.values[i + 1];
  }

  double deriv(const potential::Constant&, std::size_t, double) const { return 0.0; }
  double deriv(const potential::Cosine& d, std::size_t, double s) const {
    return -d.b * d.omega * std::sin(d.omega * s + d.phi);
  }
  double deriv(const potential::Quadratic& d, std::size_t, double s) const { return d.c1 + 2.0 * d.c2 * s; }
  double deriv(const potential::Sampled& d, std::size_t e, double s) const {
    const auto n = d.values.size() - 1;
    double h = lengths_[e] / static_cast<double>(n);
    auto i = std::min(static_cast<std::size_t>(std::clamp(s / h, 0.0, double(n))), n - 1);
    return (d.values[i + 1] - d.values[i]) / h;
  }

  std::pair<double, double> range_of(const potential::Constant& d, std::size_t, double, double) const {
    return {d.c, d.c};
  }
  std::pair<double, double> range_of(const potential::Cosine& d, std::size_t, double s0, double s1) const {
    double lo = std::min(eval(d, 0, s0), eval(d, 0, s1));
    double hi = std::max(eval(d, 0, s0), eval(d, 0, s1));
    if (d.omega != 0.0 && d.b != 0.0) {
      // critical points: omega s + phi = k pi
      double t0 = d.omega * s0 + d.phi, t1 = d.omega * s1 + d.phi;
      if (t1 < t0) std::swap(t0, t1);
      for (double k = std::ceil(t0 / std::numbers::pi); k * std::numbers::pi <= t1; k += 1.0) {
        double v = d.a + d.b * std::cos(k * std::numbers::pi);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    return {lo, hi};
  }
  std::pair<double, double> range_of(const potential::Quadratic& d, std::size_t, double s0, double s1) const {
    double lo = std::min(eval(d, 0, s0), eval(d, 0, s1));
    double hi = std::max(eval(d, 0, s0), eval(d, 0, s1));
    if (d.c2 != 0.0) {
      double sc = -d.c1 / (2.0 * d.c2);
      if (sc > s0 && sc < s1) {
        lo = std::min(lo, eval(d, 0, sc));
        hi = std::max(hi, eval(d, 0, sc));
      }
    }
    return {lo, hi};
  }
  std::pair<double, double> range_of(const potential::Sampled& d, std::size_t e, double s0, double s1) const {
    double lo = std::min(eval(d, e, s0), eval(d, e, s1));
    double hi = std::max(eval(d, e, s0), eval(d, e, s1));
    const auto n = d.values.size() - 1;
    double h = lengths_[e] / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) {
      double s = h * static_cast<double>(i);
      if (s > s0 && s < s1) {
        lo = std::min(lo, d.values[i]);
        hi = std::max(hi, d.values[i]);
      }
    }
    return {lo, hi};
  }

  std::vector<double> lengths_;
  std::vector<potential::Descriptor> desc_;
};

/// Same per-edge potential on a graph produced by `double_leaves`.
inline PotentialField double_leaves(const PotentialField& V, const MetricGraph& doubled) {
  auto d = V.descriptors();
  if (doubled.num_edges() == d.size()) return PotentialField(doubled, d);
  auto copy = d;
  d.insert(d.end(), copy.begin(), copy.end());
  return PotentialField(doubled, std::move(d));
}

}  // namespace qgland

#endif  // QGLAND_POTENTIAL_HPP
