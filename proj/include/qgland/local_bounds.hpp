#ifndef QGLAND_LOCAL_BOUNDS_HPP
#define QGLAND_LOCAL_BOUNDS_HPP

#include <qgland/agmon.hpp>
#include <qgland/envelope.hpp>
#include <qgland/error.hpp>
#include <qgland/graph.hpp>
#include <qgland/potential.hpp>
#include <qgland/quadrature.hpp>
#include <qgland/shortest_path.hpp>
#include <qgland/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

namespace qgland {

/// g(x) = psi^2 + psi'^2 / (E - E_m)
inline double g_function(const Eigenpair& psi, double E_m, std::size_t e, double s) {
  if (!(E_m < psi.E)) fail(ErrorKind::ShiftNotBelowE, "E_m must lie below E");
  auto pv = psi.at(e, s);
  return pv.value * pv.value + pv.derivative * pv.derivative / (psi.E - E_m);
}

namespace detail {
/// Cumulative int_0^s |V - c| on edge e, split where V crosses c.
inline std::shared_ptr<quad::Cumulative> abs_excess_cumulative(const PotentialField& V, std::size_t e, double length,
                                                               double c) {
  auto f = [V, e, c](double s) { return V(e, s) - c; };
  auto br = quad::crossings(f, 0.0, length, std::clamp(static_cast<int>(length / 0.005), 256, 4096), 1e-13);
  return std::make_shared<quad::Cumulative>([V, e, c](double s) { return std::abs(V(e, s) - c); }, length, br,
                                            std::min(0.1, length / 8), false);
}

inline double default_shift(const PotentialField& V, std::size_t e, double length) {
  return V.range(e, 0.0, length).first;
}
}  // namespace detail

/// |psi(x)| <= sqrt(g(y)) exp(1/2 (E-E_m)^{-1/2} |int_y^x |V - E_m||) on one edge.
/// Defaults: E_m = min of V on the edge, y = grid point minimizing g.
inline Envelope davies_envelope(const MetricGraph& g, const PotentialField& V, const Eigenpair& psi, std::size_t e,
                                std::optional<double> anchor = std::nullopt,
                                std::optional<double> shift = std::nullopt) {
  const double l = g.length(e);
  const double Em = shift ? *shift : detail::default_shift(V, e, l);
  const double E = psi.E;
  if (!(Em < E)) fail(ErrorKind::ShiftNotBelowE, "E_m must lie below E");
  double y = 0.0;
  if (anchor) {
    y = std::clamp(*anchor, 0.0, l);
  } else {
    double best = std::numeric_limits<double>::infinity();
    const auto& es = psi.edges.at(e);
    for (std::size_t j = 0; j <= es.cells(); ++j) {
      double gv = g_function(psi, Em, e, es.s(j));
      if (gv < best) {
        best = gv;
        y = es.s(j);
      }
    }
  }
  const double gy = g_function(psi, Em, e, y);
  auto cum = detail::abs_excess_cumulative(V, e, l, Em);
  const double rate = 0.5 / std::sqrt(E - Em), amp = std::sqrt(gy);
  Envelope env;
  env.method = "davies";
  env.add(e, 0.0, l, [cum, y, rate, amp](double s) { return amp * std::exp(rate * std::abs(cum->between(y, s))); });
  env.provenance = {{"E", E}, {"E_m", Em}, {"anchor", y}, {"g_anchor", gy}};
  env.notes.push_back("edge-local: not propagated through vertices");
  return env;
}

/// |psi| on one edge from sup |psi| over a sub-interval (x1, x2) on which
/// E - V >= k^2 and x2 - x1 >= pi / k.
inline Envelope oscillation_envelope(const MetricGraph& g, const PotentialField& V, double E, double psi_sup,
                                     std::size_t e, double x1, double x2,
                                     std::optional<double> shift = std::nullopt) {
  const double l = g.length(e);
  if (!(0.0 <= x1 && x1 < x2 && x2 <= l)) fail(ErrorKind::InvalidArgument, "sub-interval must lie on the edge");
  const double Em = shift ? *shift : detail::default_shift(V, e, l);
  if (!(Em < E)) fail(ErrorKind::ShiftNotBelowE, "E_m must lie below E");
  const double k2 = E - V.range(e, x1, x2).second;
  if (!(k2 > 0.0)) fail(ErrorKind::SubintervalTooShort, "E - V is not positive on the sub-interval");
  const double k = std::sqrt(k2);
  if (x2 - x1 < std::numbers::pi / k)
    fail(ErrorKind::SubintervalTooShort, "sub-interval shorter than pi/k = " + std::to_string(std::numbers::pi / k));
  auto cum = detail::abs_excess_cumulative(V, e, l, Em);
  const double rate = 0.5 / std::sqrt(E - Em);
  Envelope env;
  env.method = "oscillation";
  env.add(e, 0.0, l, [cum, x1, x2, rate, psi_sup](double s) {
    double b = std::numeric_limits<double>::infinity();
    if (s >= x1) b = std::min(b, psi_sup * std::exp(rate * cum->between(x1, s)));
    if (s <= x2) b = std::min(b, psi_sup * std::exp(rate * cum->between(s, x2)));
    return b;
  });
  env.provenance = {{"E", E}, {"E_m", Em}, {"k", k}, {"x1", x1}, {"x2", x2}, {"psi_sup", psi_sup}};
  env.notes.push_back("edge-local: not propagated through vertices");
  return env;
}

inline Envelope oscillation_envelope(const MetricGraph& g, const PotentialField& V, const Eigenpair& psi,
                                     std::size_t e, double x1, double x2,
                                     std::optional<double> shift = std::nullopt) {
  return oscillation_envelope(g, V, psi.E, psi.sup_norm(e, x1, x2) * (1.0 + 1e-12), e, x1, x2, shift);
}

/// Sub-interval of [s0, s1] on edge e with E - V >= k^2 and length >= pi/k,
/// found by lowering a threshold from max(E - V); nullopt if none exists.
inline std::optional<std::pair<double, double>> oscillation_subinterval(const PotentialField& V, double E,
                                                                        std::size_t e, double s0, double s1) {
  const int n = 2048;
  std::vector<double> vals(n + 1);
  for (int i = 0; i <= n; ++i) vals[i] = E - V(e, s0 + (s1 - s0) * i / n);
  double vmax = *std::max_element(vals.begin(), vals.end());
  for (int level = 1; level <= 200 && vmax > 0.0; ++level) {
    const double t = vmax * (1.0 - level / 200.0) + 1e-12;
    for (int i = 0; i <= n;) {
      if (vals[i] < t) {
        ++i;
        continue;
      }
      int j = i;
      while (j + 1 <= n && vals[j + 1] >= t) ++j;
      double a = s0 + (s1 - s0) * i / n, b = s0 + (s1 - s0) * j / n;
      if (b > a && E - V.range(e, a, b).second > 0.0) {
        double k = std::sqrt(E - V.range(e, a, b).second);
        if (b - a >= std::numbers::pi / k) return std::make_pair(a, b);
      }
      i = j + 1;
    }
  }
  return std::nullopt;
}

/// Window bound: |psi(x)|^2 <= (l^-2 int_{B_l} psi^2 + int_W (E-V)_+ psi^2) dist(x, dW)
/// for x in W with dist(x, dW) >= l. W is a connected union of edge intervals.
inline Envelope window_envelope(const MetricGraph& g, const PotentialField& V, double E,
                                const std::vector<EdgeInterval>& W, double ell, const Eigenpair* psi = nullptr) {
  if (W.empty() || !(ell > 0.0)) fail(ErrorKind::InvalidArgument, "window needs intervals and ell > 0");
  const double tol = 1e-9;
  auto end_covered = [&](const EdgeEnd& end) {
    const double s = end.at_start ? 0.0 : g.length(end.edge);
    for (const auto& iv : W)
      if (iv.edge == end.edge && iv.contains(s, tol)) return true;
    return false;
  };
  auto point_covered_twice = [&](std::size_t e, double s, std::size_t self) {
    for (std::size_t i = 0; i < W.size(); ++i)
      if (i != self && W[i].edge == e && W[i].contains(s, tol)) return true;
    return false;
  };
  std::vector<GraphPoint> boundary;
  std::vector<std::size_t> boundary_vertices;
  for (std::size_t i = 0; i < W.size(); ++i) {
    for (double s : {W[i].s0, W[i].s1}) {
      if (auto v = g.vertex_at({W[i].edge, s}, tol)) {
        bool all = true;
        for (const auto& end : g.incident(*v)) all = all && end_covered(end);
        if (!all && std::find(boundary_vertices.begin(), boundary_vertices.end(), *v) == boundary_vertices.end()) {
          boundary_vertices.push_back(*v);
          boundary.push_back(g.vertex_point(*v));
        }
      } else if (!point_covered_twice(W[i].edge, s, i)) {
        boundary.push_back({W[i].edge, s});
      }
    }
  }
  if (boundary.empty()) fail(ErrorKind::InvalidArgument, "window has no boundary");
  auto plain = std::make_shared<DistanceField>(g, unit_weight(), boundary);
  // collar must be free of vertices other than boundary vertices
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    if (std::find(boundary_vertices.begin(), boundary_vertices.end(), v) != boundary_vertices.end()) continue;
    bool inside = false;
    for (const auto& end : g.incident(v)) inside = inside || end_covered(end);
    if (inside && plain->vertex_distance(v) < ell)
      fail(ErrorKind::CollarContainsVertex, "collar of width ell contains vertex " + g.vertex_name(v));
  }

  double collar_sq = 0.0, excess_sq = 0.0, excess_max = 0.0;
  std::vector<std::pair<EdgeInterval, std::vector<std::pair<double, double>>>> far;
  for (const auto& iv : W) {
    auto keep = detail::far_from_boundary(g, *plain, boundary, iv, ell);
    far.push_back({iv, keep});
    // collar = iv minus keep
    double cur = iv.s0;
    std::vector<std::pair<double, double>> collar;
    for (auto [a, b] : keep) {
      if (a > cur) collar.push_back({cur, a});
      cur = std::max(cur, b);
    }
    if (iv.s1 > cur) collar.push_back({cur, iv.s1});
    excess_max = std::max(excess_max, E - V.range(iv.edge, iv.s0, iv.s1).first);
    if (psi) {
      for (auto [a, b] : collar) collar_sq += psi->l2_squared(iv.edge, a, b);
      excess_sq += detail::weighted_l2(*psi, iv.edge, iv.s0, iv.s1,
                                       [&](double s) { return std::max(0.0, E - V(iv.edge, s)); });
    }
  }
  excess_max = std::max(0.0, excess_max);
  const double N2 = psi ? collar_sq / (ell * ell) + excess_sq : 1.0 / (ell * ell) + excess_max;
  Envelope env;
  env.method = "window";
  for (const auto& [iv, keep] : far)
    for (auto [a, b] : keep) {
      const std::size_t e = iv.edge;
      env.add(e, a, b, [plain, e, N2](double s) { return std::sqrt(N2 * plain->distance({e, s})); });
    }
  env.provenance = {{"E", E},           {"ell", ell},           {"N_sq", N2},
                    {"collar_norm_sq", collar_sq}, {"excess_term", psi ? excess_sq : excess_max},
                    {"measured", psi ? 1.0 : 0.0}};
  if (env.pieces.empty()) env.notes.push_back("no point of the window is at distance ell from its boundary");
  return env;
}

/// Components of {|V - E| <= tau} on each edge, as candidate windows.
inline std::vector<EdgeInterval> transition_windows(const MetricGraph& g, const PotentialField& V, double E,
                                                    double tau) {
  std::vector<EdgeInterval> out;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const double l = g.length(e);
    auto f = [&](double s) { return tau - std::abs(V(e, s) - E); };
    auto br = quad::crossings(f, 0.0, l, std::clamp(static_cast<int>(l / 0.005), 256, 4096), 1e-13);
    std::vector<double> pts{0.0};
    for (double b : br) pts.push_back(b);
    pts.push_back(l);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      if (pts[i + 1] > pts[i] && f(0.5 * (pts[i] + pts[i + 1])) >= 0.0) {
        if (!out.empty() && out.back().edge == e && std::abs(out.back().s1 - pts[i]) < 1e-12)
          out.back().s1 = pts[i + 1];
        else
          out.push_back({e, pts[i], pts[i + 1]});
      }
  }
  return out;
}

enum class GronwallForm { Rigorous, AsStated };

/// Shooting bound along edge e from x0 towards x1:
/// |psi(x)| <= a(x) exp(int_{x0}^x |x - t| |V - E| dt), where a(x) is
/// max(|psi0|, |psi0 + (x - x0) dpsi0|) (Rigorous) or |psi0 + (x - x0) dpsi0| (AsStated).
/// dpsi0 is the derivative with respect to the edge coordinate.
inline Envelope gronwall_envelope(const MetricGraph& g, const PotentialField& V, double E, std::size_t e, double x0,
                                  double x1, double psi0, double dpsi0,
                                  GronwallForm form = GronwallForm::Rigorous) {
  const double l = g.length(e);
  if (x0 < 0.0 || x0 > l || x1 < 0.0 || x1 > l) fail(ErrorKind::InvalidArgument, "segment must lie on the edge");
  auto f = [V, e, E](double s) { return V(e, s) - E; };
  auto br = quad::crossings(f, 0.0, l, std::clamp(static_cast<int>(l / 0.005), 256, 4096), 1e-13);
  const double cell = std::min(0.05, l / 16);
  // int_{x0}^x |x - t| |V - E| dt = |x - x0| I0 - sign (I1) with I0 = int |V-E|, I1 = int (t - x0)|V-E|
  auto I0 = std::make_shared<quad::Cumulative>([V, e, E](double s) { return std::abs(V(e, s) - E); }, l, br, cell,
                                               false);
  auto I1 = std::make_shared<quad::Cumulative>(
      [V, e, E, x0](double s) { return (s - x0) * std::abs(V(e, s) - E); }, l, br, cell, false);
  const bool rig = form == GronwallForm::Rigorous;
  Envelope env;
  env.method = "gronwall";
  env.add(e, std::min(x0, x1), std::max(x0, x1), [=](double x) {
    const double lin = std::abs(psi0 + (x - x0) * dpsi0);
    const double a = rig ? std::max(std::abs(psi0), lin) : lin;
    // (x - x0) int_{x0}^x |V-E| - int_{x0}^x (t - x0)|V-E|, nonnegative in both directions
    double expo = (x - x0) * I0->between(x0, x) - I1->between(x0, x);
    return a * std::exp(std::max(0.0, expo));
  });
  env.provenance = {{"E", E}, {"x0", x0}, {"x1", x1}, {"psi0", psi0}, {"dpsi0", dpsi0}, {"rigorous", rig ? 1.0 : 0.0}};
  env.notes.push_back("not vertex-propagating");
  return env;
}

inline Envelope gronwall_envelope(const MetricGraph& g, const PotentialField& V, const Eigenpair& psi, std::size_t e,
                                  double x0, double x1, GronwallForm form = GronwallForm::Rigorous) {
  auto pv = psi.at(e, x0);
  return gronwall_envelope(g, V, psi.E, e, x0, x1, pv.value, pv.derivative, form);
}

}  // namespace qgland

#endif  // QGLAND_LOCAL_BOUNDS_HPP
