#ifndef QGLAND_VERIFY_HPP
#define QGLAND_VERIFY_HPP

#include <qgland/envelope.hpp>
#include <qgland/error.hpp>
#include <qgland/graph.hpp>
#include <qgland/potential.hpp>
#include <qgland/shortest_path.hpp>
#include <qgland/spectral.hpp>

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace qgland {

struct DominationReport {
  std::string method;
  std::vector<GraphPoint> grid;
  std::vector<double> margin;  // Upsilon - |psi| on the grid
  double worst = std::numeric_limits<double>::infinity();
  GraphPoint worst_at;
  double tol = 0.0;
  bool pass = true;
  std::vector<GraphPoint> violations;
};

/// Samples Upsilon - |psi| on every envelope piece (uniform points plus the
/// eigenfunction's own nodes).
inline DominationReport check_domination(const Eigenpair& psi, const Envelope& env, int per_piece = 1024) {
  DominationReport r;
  r.method = env.method;
  r.tol = 1e-6 * std::max(1.0, psi.sup_norm());
  for (const auto& p : env.pieces) {
    std::vector<double> ss;
    for (int i = 0; i <= per_piece; ++i) ss.push_back(p.s0 + (p.s1 - p.s0) * i / per_piece);
    const auto& es = psi.edges.at(p.edge);
    for (std::size_t j = 0; j < es.psi.size(); ++j) {
      const double s = es.h * static_cast<double>(j);
      if (s > p.s0 && s < p.s1) ss.push_back(s);
    }
    std::sort(ss.begin(), ss.end());
    for (double s : ss) {
      const double m = *env.at({p.edge, s}) - std::abs(psi(p.edge, s));
      r.grid.push_back({p.edge, s});
      r.margin.push_back(m);
      if (m < r.worst) {
        r.worst = m;
        r.worst_at = {p.edge, s};
      }
      if (m < -r.tol) r.violations.push_back({p.edge, s});
    }
  }
  r.pass = r.violations.empty() && !r.grid.empty();
  return r;
}

struct HarnackResult {
  double C = 1.0;
  double path_length = 0.0;
  double potential_term = 0.0;  // 2 int eta^2 (V - E), before clamping
  double ramp_term = 0.0;       // 4 int eta'^2
  double ramp_width = 0.0;
  bool clamped = false;
  GraphPath path;
};

namespace detail {
inline std::vector<EdgeInterval> merged_on(std::span<const EdgeInterval> W, std::size_t e) {
  std::vector<EdgeInterval> iv;
  for (const auto& w : W)
    if (w.edge == e) iv.push_back({e, std::min(w.s0, w.s1), std::max(w.s0, w.s1)});
  std::sort(iv.begin(), iv.end(), [](const auto& a, const auto& b) { return a.s0 < b.s0; });
  std::vector<EdgeInterval> out;
  for (const auto& x : iv) {
    if (!out.empty() && x.s0 <= out.back().s1 + 1e-12)
      out.back().s1 = std::max(out.back().s1, x.s1);
    else
      out.push_back(x);
  }
  return out;
}

inline bool inside(std::span<const EdgeInterval> W, std::size_t e, double a, double b) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  for (const auto& iv : merged_on(W, e))
    if (lo >= iv.s0 - 1e-12 && hi <= iv.s1 + 1e-12) return true;
  return false;
}
}  // namespace detail

/// exp(sqrt(|P| max(0, 2 int eta^2 (V - E) + 4 int eta'^2))) for the shortest
/// path P from a to b inside W; eta = 1 on P, falling linearly to 0 at
/// distance L_min/2. A positive solution must exist on the collar.
inline HarnackResult harnack_constant(const MetricGraph& g, const PotentialField& V, double E,
                                      std::span<const EdgeInterval> W, const GraphPoint& a, const GraphPoint& b) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (!detail::inside(W, a.edge, a.s, a.s) || !detail::inside(W, b.edge, b.s, b.s))
    fail(ErrorKind::PathNotFound, "endpoints must lie in W");
  HarnackResult h;
  h.ramp_width = 0.5 * g.shortest_edge();
  if (g.same_point(a, b)) return h;

  EdgeIntegral w = [&](std::size_t e, double s0, double s1) {
    return detail::inside(W, e, s0, s1) ? std::abs(s1 - s0) : inf;
  };
  GraphPoint src[1] = {a};
  ShortestPathResult sp;
  try {
    sp = shortest_path(g, w, src, b);
  } catch (const Error&) {
    fail(ErrorKind::PathNotFound, "no path inside W");
  }
  h.path = sp.path;
  h.path_length = sp.path.length();

  // distance to P: sources are the path's segment ends
  std::vector<GraphPoint> ends;
  for (const auto& seg : sp.path.segments) {
    ends.push_back({seg.edge, seg.s_in});
    ends.push_back({seg.edge, seg.s_out});
  }
  DistanceField field(g, unit_weight(), ends);
  const double rw = h.ramp_width;

  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const double L = g.length(e);
    const double da = field.vertex_distance(g.edge(e).from), db = field.vertex_distance(g.edge(e).to);
    std::vector<std::pair<double, double>> on_path;  // segments of P on e
    std::vector<double> pts;
    for (const auto& seg : sp.path.segments)
      if (seg.edge == e) {
        on_path.push_back({std::min(seg.s_in, seg.s_out), std::max(seg.s_in, seg.s_out)});
        pts.push_back(seg.s_in);
        pts.push_back(seg.s_out);
      }
    auto dist = [&](double s) {
      double d = std::min(da + s, db + L - s);
      for (auto [lo, hi] : on_path) {
        if (s >= lo && s <= hi) return 0.0;
        d = std::min(d, std::min(std::abs(s - lo), std::abs(s - hi)));
      }
      return d;
    };
    // lines whose minimum is the distance; breakpoints at crossings and at level rw
    std::vector<std::pair<double, double>> lines{{da, 1.0}, {db + L, -1.0}};
    for (double p : pts) {
      lines.push_back({-p, 1.0});
      lines.push_back({p, -1.0});
    }
    std::vector<double> br{0.0, L};
    br.insert(br.end(), pts.begin(), pts.end());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (std::isfinite(lines[i].first)) br.push_back((rw - lines[i].first) / lines[i].second);
      for (std::size_t j = i + 1; j < lines.size(); ++j)
        if (lines[i].second != lines[j].second && std::isfinite(lines[i].first) && std::isfinite(lines[j].first))
          br.push_back((lines[j].first - lines[i].first) / (lines[i].second - lines[j].second));
    }
    std::erase_if(br, [&](double x) { return !(x >= 0.0 && x <= L); });
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    for (std::size_t k = 0; k + 1 < br.size(); ++k) {
      const double s0 = br[k], s1 = br[k + 1];
      if (s1 - s0 < 1e-15) continue;
      const double dm = dist(0.5 * (s0 + s1));
      if (dm >= rw) continue;
      auto eta = [&](double s) { return std::max(0.0, 1.0 - dist(s) / rw); };
      h.potential_term += 2.0 * boost::math::quadrature::gauss<double, 20>::integrate(
                                    [&](double s) { return eta(s) * eta(s) * (V(e, s) - E); }, s0, s1);
      if (dm > 0.0) h.ramp_term += 4.0 * (s1 - s0) / (rw * rw);
    }
  }
  double r2 = h.path_length * (h.potential_term + h.ramp_term);
  if (r2 < 0.0) {
    h.clamped = true;
    r2 = 0.0;
  }
  h.C = std::exp(std::sqrt(r2));
  return h;
}

enum class Regime { Tunneling, Transition, Allowed, HighEnergy };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::Tunneling: return "tunneling";
    case Regime::Transition: return "transition";
    case Regime::Allowed: return "allowed-moderate";
    case Regime::HighEnergy: return "high-energy";
  }
  return "?";
}

struct RegimeThresholds {
  double delta_t = 0.0;
  double tau = -1.0;  // negative: 0.05 max(1, E)
  double R = 5.0;
};

struct RegionPlan {
  EdgeInterval interval;
  Regime regime = Regime::Allowed;
  std::vector<std::string> families;
};

struct RegimeMap {
  double E = 0.0;
  RegimeThresholds thresholds;
  std::vector<GraphPoint> grid;
  std::vector<Regime> labels;
  std::vector<RegionPlan> plan;

  Regime at(const GraphPoint& x) const {
    for (const auto& p : plan)
      if (p.interval.edge == x.edge && p.interval.contains(x.s)) return p.regime;
    fail(ErrorKind::InvalidArgument, "point outside the graph");
  }
};

inline std::vector<std::string> recommended_families(Regime r) {
  switch (r) {
    case Regime::Tunneling: return {"agmon"};
    case Regime::Transition: return {"window", "gronwall"};
    case Regime::Allowed: return {"torsion", "torsion-agmon"};
    case Regime::HighEnergy: return {"davies", "oscillation", "uniform"};
  }
  return {};
}

/// Labels the graph by regime and emits one plan entry per maximal interval.
/// Region boundaries are located by bisection between grid samples.
inline RegimeMap select_regime(const MetricGraph& g, const PotentialField& V, double E, RegimeThresholds th = {},
                               int per_edge = 512) {
  if (th.tau < 0.0) th.tau = 0.05 * std::max(1.0, E);
  RegimeMap m;
  m.E = E;
  m.thresholds = th;
  const bool high = E >= th.R * V.max_value();
  auto label = [&](std::size_t e, double s) {
    if (high) return Regime::HighEnergy;
    const double d = V(e, s) - E;
    if (std::abs(d) < th.tau) return Regime::Transition;
    if (d >= th.delta_t && d > 0.0) return Regime::Tunneling;
    return Regime::Allowed;
  };
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const double L = g.length(e);
    double start = 0.0;
    Regime cur = label(e, 0.0);
    double prev = 0.0;
    for (int i = 0; i <= per_edge; ++i) {
      const double s = L * i / per_edge;
      const Regime r = label(e, s);
      m.grid.push_back({e, s});
      m.labels.push_back(r);
      if (r != cur) {
        double lo = prev, hi = s;
        for (int it = 0; it < 60 && hi - lo > 1e-13 * std::max(1.0, L); ++it) {
          const double mid = 0.5 * (lo + hi);
          (label(e, mid) == cur ? lo : hi) = mid;
        }
        m.plan.push_back({{e, start, hi}, cur, recommended_families(cur)});
        start = hi;
        cur = r;
      }
      prev = s;
    }
    m.plan.push_back({{e, start, L}, cur, recommended_families(cur)});
  }
  return m;
}

/// Grid points where max(f, 0) has a strict local maximum with f > 0, away
/// from the listed boundary vertices. Vertices compare against neighbours on
/// every incident edge.
inline std::vector<GraphPoint> interior_maxima(const MetricGraph& g, const std::function<double(std::size_t, double)>& f,
                                               int per_edge = 400, std::span<const std::size_t> boundary = {}) {
  std::vector<GraphPoint> out;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const double L = g.length(e);
    for (int i = 1; i < per_edge; ++i) {
      const double s = L * i / per_edge, h = L / per_edge;
      const double v = f(e, s);
      if (v > 0.0 && v > f(e, s - h) && v > f(e, s + h)) out.push_back({e, s});
    }
  }
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    if (std::find(boundary.begin(), boundary.end(), v) != boundary.end()) continue;
    auto inc = g.incident(v);
    const auto& first = inc.front();
    const double s0 = first.at_start ? 0.0 : g.length(first.edge);
    const double fv = f(first.edge, s0);
    if (!(fv > 0.0)) continue;
    bool strict = true;
    for (const auto& ee : inc) {
      const double h = g.length(ee.edge) / per_edge;
      const double s = ee.at_start ? h : g.length(ee.edge) - h;
      if (!(fv > f(ee.edge, s))) strict = false;
    }
    if (strict) out.push_back(g.vertex_point(v));
  }
  return out;
}

}  // namespace qgland

#endif  // QGLAND_VERIFY_HPP
