#ifndef QGLAND_UNIFORM_HPP
#define QGLAND_UNIFORM_HPP

#include <qgland/envelope.hpp>
#include <qgland/error.hpp>
#include <qgland/graph.hpp>
#include <qgland/spectral.hpp>

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

namespace qgland {

/// theta_3(0, q) = 1 + 2 sum_{n>=1} q^{n^2}, 0 <= q < 1, summed until the
/// geometric tail bound drops below tol.
inline double theta3(double q, double tol = 1e-15) {
  if (!(q >= 0.0 && q < 1.0)) fail(ErrorKind::InvalidArgument, "theta3 needs 0 <= q < 1");
  double sum = 1.0;
  for (int n = 1;; ++n) {
    const double term = std::pow(q, static_cast<double>(n) * n);
    sum += 2.0 * term;
    // remaining terms: q^{(n+k)^2} <= term * r^k with r = q^{2n+1}
    const double r = std::pow(q, 2.0 * n + 1.0);
    if (r < 1.0 && 2.0 * term * r / (1.0 - r) < tol * sum) break;
    if (n > 100000000) fail(ErrorKind::InvalidArgument, "theta3 series did not converge");
  }
  return sum;
}

/// sum_{k>=1} exp(-(k pi / L)^2 t)
inline double neumann_sum(double L, double t) {
  return 0.5 * (theta3(std::exp(-std::pow(std::numbers::pi / L, 2) * t)) - 1.0);
}

/// p_e(t, e) for a decoupled Neumann edge: theta_3(0, e^{-(pi/|e|)^2 t}) / |e|
inline double edge_heat_majorant(double L, double t) {
  return theta3(std::exp(-std::pow(std::numbers::pi / L, 2) * t)) / L;
}

/// M = 2 max_{x >= pi} 1 / (1 - sin x / x)
inline double heat_constant_M() {
  // sin x / x is largest on [pi, inf) in its first positive lobe (2 pi, 3 pi)
  auto r = boost::math::tools::brent_find_minima([](double x) { return -std::sin(x) / x; }, 2.0 * std::numbers::pi,
                                                 3.0 * std::numbers::pi, 52);
  return 2.0 / (1.0 + r.second);
}

/// (|e|/2)(1 - |sin(k|e|)|/(k|e|)): lower bound of ||psi||^2_{L2(e)} / ||psi||^2_inf
/// for a free mode cos(k(x - phi)) when k |e| >= pi, sharp over phi.
inline double cosine_comparison_constant(double k, double L) {
  if (!(k * L >= std::numbers::pi)) fail(ErrorKind::InvalidArgument, "needs k |e| >= pi");
  return 0.5 * L * (1.0 - std::abs(std::sin(k * L)) / (k * L));
}

struct UniformBound {
  double value = 0.0;    // max of the two below
  double theorem = 0.0;  // C (E - V_min)^{1/4}, C^2 = 3m / (2 min|e|)
  double heat = 0.0;     // optimized heat-kernel bound
  double C2 = 0.0;
  std::size_t m = 0;
  double min_edge = 0.0;
  double t = 0.0;  // optimal time for the heat bound
};

namespace detail {
/// Upper bound for sup_x p_Gamma(t, x, x) of the free graph: eigenvalues are
/// bounded below by the decoupled Neumann ones, and every mode satisfies
/// ||phi||^2_{L inf(e)} <= 3 / |e|.
inline double free_diagonal_majorant(const MetricGraph& g, double t) {
  double s = static_cast<double>(g.num_edges()) - 1.0;
  for (std::size_t e = 0; e < g.num_edges(); ++e) s += neumann_sum(g.length(e), t);
  return 1.0 / g.total_length() + 3.0 / g.shortest_edge() * s;
}
}  // namespace detail

/// Uniform L-infinity bound for eigenfunctions with eigenvalue <= E.
inline UniformBound uniform_bound(const MetricGraph& g, double E, double V_min) {
  if (!(E > V_min)) fail(ErrorKind::EnergyBelowInf, "E must exceed inf V");
  UniformBound u;
  u.m = g.num_edges();
  u.min_edge = g.shortest_edge();
  u.C2 = 3.0 * static_cast<double>(u.m) / (2.0 * u.min_edge);
  u.theorem = std::sqrt(u.C2) * std::pow(E - V_min, 0.25);
  const double d = E - V_min;
  auto log_bound = [&](double lt) {
    const double t = std::exp(lt);
    return d * t + std::log(detail::free_diagonal_majorant(g, t));
  };
  // scan log t, then refine
  const double c = std::log(0.5 / d);
  double best_lt = c, best = log_bound(c);
  for (int i = -60; i <= 60; ++i) {
    const double lt = c + 0.2 * i;
    const double v = log_bound(lt);
    if (v < best) {
      best = v;
      best_lt = lt;
    }
  }
  auto r = boost::math::tools::brent_find_minima(log_bound, best_lt - 0.2, best_lt + 0.2, 40);
  if (r.second < best) {
    best = r.second;
    best_lt = r.first;
  }
  u.t = std::exp(best_lt);
  u.heat = std::exp(0.5 * best);
  u.value = std::max(u.theorem, u.heat);
  return u;
}

inline Envelope uniform_envelope(const MetricGraph& g, double E, double V_min) {
  auto u = uniform_bound(g, E, V_min);
  auto env = constant_envelope(g, u.value, "uniform");
  env.provenance = {{"E", E},     {"V_min", V_min}, {"m", static_cast<double>(u.m)}, {"min_edge", u.min_edge},
                    {"C2", u.C2}, {"theorem", u.theorem}, {"heat", u.heat},         {"t", u.t}};
  return env;
}

/// sqrt(C^2 (sqrt(2 e (E - V_min) / pi) + sqrt(e) / |e|))
inline double refined_cluster_bound(double E, double V_min, double edge_length, double C2) {
  if (!(E > V_min)) fail(ErrorKind::EnergyBelowInf, "E must exceed inf V");
  const double e = std::numbers::e;
  return std::sqrt(C2 * (std::sqrt(2.0 * e * (E - V_min) / std::numbers::pi) + std::sqrt(e) / edge_length));
}

/// Eigenvalues with squared per-edge sup norms of L2-normalized modes.
struct SpectralData {
  std::vector<double> E;
  std::vector<std::vector<double>> sup_sq;  // [mode][edge]
};

inline SpectralData spectral_data(const std::vector<Eigenpair>& pairs) {
  SpectralData d;
  for (const auto& p : pairs) {
    d.E.push_back(p.E);
    std::vector<double> row;
    for (std::size_t e = 0; e < p.edges.size(); ++e) row.push_back(std::pow(p.sup_norm(e) / p.norm, 2));
    d.sup_sq.push_back(row);
  }
  return d;
}

struct HeatMajorant {
  double t = 0.0;
  std::vector<double> p_gamma;  // p_Gamma(t, e) from the data plus tail
  std::vector<double> p_edge;   // decoupled p_e(t, e)
  std::vector<double> hkub_rhs;
  double tail = 0.0;  // certified bound on the omitted modes, per unit 3/|e|
  double sum_p_gamma = 0.0;
  double sum_p_edge = 0.0;
  bool hkub2_holds() const { return sum_p_gamma <= 1.5 * sum_p_edge; }
};

namespace detail {
/// sum over n >= N of exp(-mu_n t), mu_n the sorted decoupled Neumann
/// eigenvalues (index 0 = first eigenvalue).
inline double decoupled_tail(const MetricGraph& g, std::size_t N, double t) {
  double total = static_cast<double>(g.num_edges());
  for (std::size_t e = 0; e < g.num_edges(); ++e) total += neumann_sum(g.length(e), t);
  // subtract the first N terms, enumerated in increasing order
  using Item = std::pair<double, std::pair<std::size_t, std::size_t>>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (std::size_t e = 0; e < g.num_edges(); ++e) pq.push({0.0, {e, 0}});
  double head = 0.0;
  for (std::size_t n = 0; n < N && !pq.empty(); ++n) {
    auto [mu, ek] = pq.top();
    pq.pop();
    head += std::exp(-mu * t);
    const double L = g.length(ek.first);
    const double k = static_cast<double>(ek.second + 1);
    pq.push({std::pow(k * std::numbers::pi / L, 2), {ek.first, ek.second + 1}});
  }
  return std::max(0.0, total - head);
}
}  // namespace detail

/// Heat-kernel majorants at time t from free-graph spectral data (modes in
/// increasing order, starting with the constant mode).
inline HeatMajorant heat_majorant(const MetricGraph& g, const SpectralData& data, double t, double tail_tol = 1e-6) {
  if (!(t > 0.0)) fail(ErrorKind::InvalidArgument, "t must be positive");
  if (data.E.empty()) fail(ErrorKind::InsufficientSpectrum, "no spectral data");
  HeatMajorant h;
  h.t = t;
  const double M = heat_constant_M();
  const std::size_t N = data.E.size();
  h.tail = detail::decoupled_tail(g, N, t);
  const double Gamma = g.total_length();
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const double L = g.length(e);
    double pg = 1.0 / Gamma, three = 0.0, em = 0.0;
    for (std::size_t n = 1; n < N; ++n) {
      const double w = std::exp(-data.E[n] * t);
      pg += w * data.sup_sq[n][e];
      (data.E[n] * L * L < std::numbers::pi * std::numbers::pi ? three : em) += w;
    }
    const double tail = 3.0 / L * h.tail;
    if (tail > tail_tol * pg)
      fail(ErrorKind::InsufficientSpectrum,
           "spectral tail " + std::to_string(tail) + " exceeds tolerance at t = " + std::to_string(t));
    pg += tail;
    h.p_gamma.push_back(pg);
    h.p_edge.push_back(edge_heat_majorant(L, t));
    h.hkub_rhs.push_back(1.0 / Gamma + (3.0 * three + M * em) / L + tail);
    h.sum_p_gamma += pg;
    h.sum_p_edge += h.p_edge.back();
  }
  return h;
}

struct ClusterBound {
  double E = 0.0;
  std::vector<double> lhs;          // sum over modes of ||psi_j||^2_{L inf(e)}
  std::vector<double> rhs_theorem;  // C^2 sqrt(E - V_min)
  std::vector<double> rhs_refined;  // C^2 (sqrt(2e(E - V_min)/pi) + sqrt(e)/|e|)
  double pointwise = 0.0;           // sampled sup_x sum_j psi_j(x)^2
  double rhs_heat = 0.0;            // heat bound squared, bounds the pointwise sum
  double C2 = 0.0;
};

/// Both sides of the cluster inequality per edge, over modes with E_j <= E.
inline ClusterBound cluster_bound(const MetricGraph& g, const std::vector<Eigenpair>& pairs, double E, double V_min,
                                  int samples_per_edge = 2048) {
  auto u = uniform_bound(g, E, V_min);
  ClusterBound c;
  c.E = E;
  c.C2 = u.C2;
  c.rhs_heat = u.heat * u.heat;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    double s = 0.0;
    for (const auto& p : pairs)
      if (p.E <= E) s += std::pow(p.sup_norm(e) / p.norm, 2);
    c.lhs.push_back(s);
    for (int i = 0; i <= samples_per_edge; ++i) {
      const double x = g.length(e) * i / samples_per_edge;
      double p = 0.0;
      for (const auto& q : pairs)
        if (q.E <= E) p += std::pow(q(e, x) / q.norm, 2);
      c.pointwise = std::max(c.pointwise, p);
    }
    c.rhs_theorem.push_back(u.C2 * std::sqrt(E - V_min));
    c.rhs_refined.push_back(std::pow(refined_cluster_bound(E, V_min, g.length(e), u.C2), 2));
  }
  return c;
}

}  // namespace qgland

#endif  // QGLAND_UNIFORM_HPP
