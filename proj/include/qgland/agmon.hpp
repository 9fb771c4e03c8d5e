#ifndef QGLAND_AGMON_HPP
#define QGLAND_AGMON_HPP

#include <qgland/envelope.hpp>
#include <qgland/error.hpp>
#include <qgland/graph.hpp>
#include <qgland/potential.hpp>
#include <qgland/quadrature.hpp>
#include <qgland/shortest_path.hpp>
#include <qgland/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace qgland {

/// Rigorous: adds the collar term int (E-V)_+ eta^2 psi^2 and uses the full
/// path length from the outer collar end. AsStated: the closed forms exactly
/// as usually written, kept for comparison.
enum class AgmonForm { Rigorous, AsStated };

/// Edgewise function whose positive part's square root is the Agmon density.
using Excess = std::function<double(std::size_t edge, double s)>;

/// Per-edge cumulative integral of sqrt(excess_+).
class AgmonWeight {
 public:
  AgmonWeight() = default;

  AgmonWeight(const MetricGraph& g, Excess excess, std::vector<std::vector<double>> extra_breaks = {})
      : excess_(std::move(excess)), cum_(std::make_shared<std::vector<quad::Cumulative>>()) {
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      const double l = g.length(e);
      const int n_scan = std::clamp(static_cast<int>(std::ceil(l / 0.005)), 256, 4096);
      auto f = excess_;
      auto breaks = quad::crossings([f, e](double s) { return f(e, s); }, 0.0, l, n_scan, 1e-15);
      if (e < extra_breaks.size()) breaks.insert(breaks.end(), extra_breaks[e].begin(), extra_breaks[e].end());
      cum_->emplace_back(
          [f, e](double s) { return std::sqrt(std::max(0.0, f(e, s))); }, l, breaks, std::min(0.1, l / 8.0), true);
    }
  }

  static AgmonWeight for_potential(const MetricGraph& g, const PotentialField& V, double E) {
    std::vector<std::vector<double>> breaks(g.num_edges());
    for (std::size_t e = 0; e < g.num_edges(); ++e)
      if (auto* smp = std::get_if<potential::Sampled>(&V.descriptor(e))) {
        const auto n = smp->values.size() - 1;
        for (std::size_t j = 1; j < n; ++j) breaks[e].push_back(g.length(e) * static_cast<double>(j) / n);
      }
    return AgmonWeight(g, [V, E](std::size_t e, double s) { return V(e, s) - E; }, std::move(breaks));
  }

  double density(std::size_t e, double s) const { return std::sqrt(std::max(0.0, excess_(e, s))); }

  /// Unsigned integral over the sub-interval between s0 and s1.
  double between(std::size_t e, double s0, double s1) const { return std::abs((*cum_)[e].between(s0, s1)); }

  EdgeIntegral integral() const {
    auto c = cum_;
    return [c](std::size_t e, double s0, double s1) { return std::abs((*c)[e].between(s0, s1)); };
  }

 private:
  Excess excess_;
  std::shared_ptr<std::vector<quad::Cumulative>> cum_;
};

/// rho_A(x, S; E): least path integral of sqrt((V-E)_+) from S to x.
inline double agmon_distance(const MetricGraph& g, const PotentialField& V, double E,
                             std::span<const GraphPoint> S, const GraphPoint& x) {
  auto w = AgmonWeight::for_potential(g, V, E);
  return DistanceField(g, w.integral(), S).distance(x);
}

/// Cutoff ramp: eta = 1 at `inner`, 0 at `outer`, linear in between.
struct Collar {
  std::size_t edge = 0;
  double inner = 0.0;
  double outer = 0.0;
  double length() const { return std::abs(outer - inner); }
};

namespace detail {

/// int_{s0}^{s1} w(s) psi(s)^2 ds, Gauss per grid cell.
inline double weighted_l2(const Eigenpair& psi, std::size_t e, double s0, double s1,
                          const std::function<double(double)>& w) {
  if (s1 < s0) std::swap(s0, s1);
  const auto& es = psi.edges.at(e);
  double total = 0.0;
  for (std::size_t j = 0; j < es.cells(); ++j) {
    double a = std::max(s0, es.s(j)), b = std::min(s1, es.s(j + 1));
    if (b <= a) continue;
    total += quad::gauss(
        [&](double s) {
          double v = psi(e, s);
          return w(s) * v * v;
        },
        a, b);
  }
  return total;
}

struct CollarBudget {
  double norm_sq = 0.0;  // sum of ||psi||^2 over collars (1 if unmeasured)
  double excess = 0.0;   // sum of int (E-V)_+ eta^2 psi^2, or its bound
  bool measured = false;
};

inline CollarBudget collar_budget(const PotentialField& V, double E, std::span<const Collar> collars,
                                  const Eigenpair* psi) {
  CollarBudget b;
  b.measured = psi != nullptr;
  double max_excess = 0.0;
  for (const auto& c : collars) {
    const double lo = std::min(c.inner, c.outer), hi = std::max(c.inner, c.outer);
    if (psi) {
      b.norm_sq += psi->l2_squared(c.edge, lo, hi);
      b.excess += weighted_l2(*psi, c.edge, lo, hi, [&](double s) {
        double eta = 1.0 - std::abs(s - c.inner) / c.length();
        return std::max(0.0, E - V(c.edge, s)) * eta * eta;
      });
    } else {
      max_excess = std::max(max_excess, E - V.range(c.edge, lo, hi).first);
    }
  }
  if (!psi) {
    b.norm_sq = 1.0;
    b.excess = std::max(0.0, max_excess);
  }
  return b;
}

inline double energy_tol(double E) { return 1e-10 * std::max(1.0, std::abs(E)); }

}  // namespace detail

struct IntervalSpec {
  std::size_t edge = 0;
  double a = 0.0;
  double b = 0.0;
  double ell = 0.0;
};

/// Single-interval Agmon bound on [a, b] with cutoff collars [a-ell, a] and
/// [b, b+ell] on the same edge.
inline Envelope interval_envelope(const MetricGraph& g, const PotentialField& V, double E, const IntervalSpec& iv,
                                  const Eigenpair* psi = nullptr, AgmonForm form = AgmonForm::Rigorous) {
  const double a = iv.a, b = iv.b, ell = iv.ell;
  if (!(b > a) || !(ell > 0.0)) fail(ErrorKind::InvalidArgument, "interval bound needs a < b and ell > 0");
  const double l = g.length(iv.edge);
  const double ptol = 1e-12 * std::max(1.0, l);
  if (a - ell < -ptol || b + ell > l + ptol)
    fail(ErrorKind::CollarContainsVertex, "collars [a-ell, a] and [b, b+ell] must stay inside the edge");
  if (V.range(iv.edge, a, b).first - E < -detail::energy_tol(E))
    fail(ErrorKind::RegionNotTunneling, "V <= E somewhere inside [a, b]");

  const Collar collars[2] = {{iv.edge, a, std::max(0.0, a - ell)}, {iv.edge, b, std::min(l, b + ell)}};
  auto budget = detail::collar_budget(V, E, collars, psi);
  const double stated_sq = budget.norm_sq / (ell * ell);
  const double rigorous_sq = stated_sq + budget.excess;
  const double N = std::sqrt(form == AgmonForm::Rigorous ? rigorous_sq : stated_sq);

  auto w = AgmonWeight::for_potential(g, V, E);
  const std::size_t e = iv.edge;
  Envelope env;
  env.method = "agmon-interval";
  env.add(e, a, b, [w, e, a, b, ell, N](double x) {
    double rho = std::min(w.between(e, a, x), w.between(e, x, b));
    double pre = std::sqrt((x - a + ell) * (b + ell - x) / (b - a + 2.0 * ell));
    return pre * N * std::exp(-rho);
  });
  env.provenance = {{"E", E},
                    {"a", a},
                    {"b", b},
                    {"ell", ell},
                    {"collar_norm_sq", budget.norm_sq},
                    {"collar_norm_measured", budget.measured ? 1.0 : 0.0},
                    {"collar_excess", budget.excess},
                    {"N_stated", std::sqrt(stated_sq)},
                    {"N_rigorous", std::sqrt(rigorous_sq)},
                    {"rigorous", form == AgmonForm::Rigorous ? 1.0 : 0.0}};
  if (budget.excess > 0.0) env.notes.push_back("collars reach into V < E; (E-V)_+ collar term included");
  return env;
}

namespace detail {

/// Collar of a tunneling boundary point along each allowed direction.
inline std::vector<Collar> boundary_collars(const MetricGraph& g, const RegionPartition& part, double ell) {
  std::vector<Collar> out;
  auto allowed_after = [&](std::size_t e, double s, int dir) {
    for (const auto& iv : part.allowed)
      if (iv.edge == e && (dir > 0 ? (std::abs(iv.s0 - s) < 1e-9 && iv.s1 > s) : (std::abs(iv.s1 - s) < 1e-9 && iv.s0 < s)))
        return std::optional<EdgeInterval>(iv);
    return std::optional<EdgeInterval>();
  };
  auto add = [&](std::size_t e, double s, int dir) {
    auto iv = allowed_after(e, s, dir);
    if (!iv) return;
    const double room = iv->length();
    if (ell > room + 1e-12)
      fail(ErrorKind::CollarContainsVertex, "collar of length ell does not fit in the allowed piece of edge " +
                                                g.edge(e).name);
    out.push_back({e, s, s + dir * ell});
  };
  for (const auto& bp : part.boundary) {
    if (bp.vertex) {
      for (const auto& end : g.incident(*bp.vertex)) {
        double s = end.at_start ? 0.0 : g.length(end.edge);
        add(end.edge, s, end.at_start ? +1 : -1);
      }
    } else {
      add(bp.point.edge, bp.point.s, +1);
      add(bp.point.edge, bp.point.s, -1);
    }
  }
  return out;
}

/// Parts of [iv.s0, iv.s1] at unweighted distance >= ell from the boundary.
inline std::vector<std::pair<double, double>> far_from_boundary(const MetricGraph& g, const DistanceField& dist,
                                                                std::span<const GraphPoint> boundary,
                                                                const EdgeInterval& iv, double ell) {
  const auto& ed = g.edge(iv.edge);
  const double l = ed.length;
  // admissible set is an intersection of conditions, each an interval or a complement
  std::vector<std::pair<double, double>> allowed{{iv.s0, iv.s1}};
  auto cut_out = [&](double lo, double hi) {
    std::vector<std::pair<double, double>> next;
    for (auto [p, q] : allowed) {
      if (hi <= p || lo >= q) {
        next.push_back({p, q});
        continue;
      }
      if (lo > p) next.push_back({p, lo});
      if (hi < q) next.push_back({hi, q});
    }
    allowed = std::move(next);
  };
  const double df = dist.vertex_distance(ed.from), dt = dist.vertex_distance(ed.to);
  if (std::isfinite(df)) cut_out(-1.0, ell - df);       // df + s >= ell
  if (std::isfinite(dt)) cut_out(l - ell + dt, l + 1.0);  // dt + l - s >= ell
  for (const auto& b : boundary)
    if (b.edge == iv.edge && !g.vertex_at(b)) cut_out(b.s - ell, b.s + ell);
  std::vector<std::pair<double, double>> out;
  for (auto pq : allowed)
    if (pq.second > pq.first) out.push_back(pq);
  return out;
}

}  // namespace detail

/// Default collar length: half the shortest edge, half the shortest allowed
/// piece adjoining a tunneling boundary, a quarter of the widest tunneling piece.
inline double default_collar_length(const MetricGraph& g, const RegionPartition& part) {
  double ell = 0.5 * g.shortest_edge();
  auto near = [](double a, double b) { return std::abs(a - b) < 1e-9; };
  for (const auto& bp : part.boundary) {
    for (const auto& iv : part.allowed) {
      bool touches = false;
      if (bp.vertex) {
        for (const auto& end : g.incident(*bp.vertex)) {
          if (end.edge != iv.edge) continue;
          touches = touches || (end.at_start ? near(iv.s0, 0.0) : near(iv.s1, g.length(iv.edge)));
        }
      } else if (iv.edge == bp.point.edge) {
        touches = near(iv.s0, bp.point.s) || near(iv.s1, bp.point.s);
      }
      if (touches) ell = std::min(ell, 0.5 * iv.length());
    }
  }
  double widest = 0.0;
  for (const auto& iv : part.tunneling) widest = std::max(widest, iv.length());
  return std::min(ell, 0.25 * widest);
}

/// Graph Agmon bound on the tunneling set, at points with
/// dist(x, boundary) >= ell.
inline Envelope tunneling_envelope(const MetricGraph& g, const PotentialField& V, double E,
                                   const RegionPartition& part, double ell = -1.0, const Eigenpair* psi = nullptr,
                                   AgmonForm form = AgmonForm::Rigorous) {
  if (part.tunneling.empty()) fail(ErrorKind::MethodInapplicable, "tunneling set is empty");
  if (part.boundary.empty()) fail(ErrorKind::MethodInapplicable, "tunneling set has no boundary");
  if (ell <= 0.0) ell = default_collar_length(g, part);
  auto collars = detail::boundary_collars(g, part, ell);
  auto budget = detail::collar_budget(V, E, collars, psi);
  const double stated_sq = budget.norm_sq / (ell * ell);
  const double rigorous_sq = stated_sq + budget.excess;
  const bool rig = form == AgmonForm::Rigorous;
  const double N = std::sqrt(rig ? rigorous_sq : stated_sq);

  std::vector<GraphPoint> bpts;
  for (const auto& bp : part.boundary) bpts.push_back(bp.point);
  auto w = AgmonWeight::for_potential(g, V, E);
  auto agmon = std::make_shared<DistanceField>(g, w.integral(), bpts);
  auto plain = std::make_shared<DistanceField>(g, unit_weight(), bpts);

  Envelope env;
  env.method = "agmon";
  for (const auto& iv : part.tunneling) {
    for (auto [s0, s1] : detail::far_from_boundary(g, *plain, bpts, iv, ell)) {
      const std::size_t e = iv.edge;
      env.add(e, s0, s1, [agmon, plain, e, ell, N, rig](double s) {
        GraphPoint x{e, s};
        double d = plain->distance(x);
        return std::sqrt(rig ? d + ell : d) * N * std::exp(-agmon->distance(x));
      });
    }
  }
  if (env.pieces.empty())
    fail(ErrorKind::PointTooCloseToBoundary, "no tunneling point lies at distance >= ell from the boundary");
  env.provenance = {{"E", E},
                    {"ell", ell},
                    {"collars", static_cast<double>(collars.size())},
                    {"collar_norm_sq", budget.norm_sq},
                    {"collar_norm_measured", budget.measured ? 1.0 : 0.0},
                    {"collar_excess", budget.excess},
                    {"N_stated", std::sqrt(stated_sq)},
                    {"N_rigorous", std::sqrt(rigorous_sq)},
                    {"rigorous", rig ? 1.0 : 0.0}};
  return env;
}

/// Cut interval for the delta bound; eta ramps from 0 at `outer` to 1 at
/// `inner` (the side facing the target component).
using DeltaCut = Collar;

namespace detail {

struct CutComponent {
  Envelope env;
  std::vector<EdgeInterval> pieces;  // the target component
  std::vector<DeltaCut> used;
};

/// Agmon bound separated by cuts: on the component of the graph minus the
/// cuts containing `seed`, with density sqrt(excess_+) measured from the inner
/// cut ends, psi(x)^2 <= factor * sum_cuts ||psi||^2_cut / L_cut^2 * e^{-2 rho}.
/// `min_excess(e, s0, s1)` must bound the excess from below; it has to be
/// nonnegative on the cuts and on the component.
inline CutComponent cut_agmon_envelope(const MetricGraph& g, const Excess& excess,
                                       const std::function<double(std::size_t, double, double)>& min_excess,
                                       double factor, std::span<const DeltaCut> cuts, const GraphPoint& seed,
                                       const Eigenpair* psi, double etol) {
  if (cuts.empty()) fail(ErrorKind::NoSeparatingInterval, "no cut interval given");
  for (const auto& c : cuts) {
    const double lo = std::min(c.inner, c.outer), hi = std::max(c.inner, c.outer);
    if (!(c.length() > 0.0) || lo < 0.0 || hi > g.length(c.edge) + 1e-12)
      fail(ErrorKind::InvalidArgument, "cut interval must be a nondegenerate part of one edge");
    if (min_excess(c.edge, lo, hi) < -etol) fail(ErrorKind::NoSeparatingInterval, "cut interval leaves the region");
  }

  // pieces of each edge between cuts, and their connectivity through vertices
  std::vector<EdgeInterval> pieces;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    std::vector<std::pair<double, double>> cs;
    for (const auto& c : cuts)
      if (c.edge == e) cs.push_back({std::min(c.inner, c.outer), std::max(c.inner, c.outer)});
    std::sort(cs.begin(), cs.end());
    double cur = 0.0;
    for (auto [lo, hi] : cs) {
      if (lo > cur) pieces.push_back({e, cur, lo});
      cur = std::max(cur, hi);
    }
    if (cur < g.length(e)) pieces.push_back({e, cur, g.length(e)});
  }
  const double l_tol = 1e-12;
  auto touches_vertex = [&](const EdgeInterval& p, std::size_t v) {
    const auto& ed = g.edge(p.edge);
    return (ed.from == v && p.s0 <= l_tol) || (ed.to == v && p.s1 >= ed.length - l_tol);
  };
  std::vector<char> in(pieces.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < pieces.size(); ++i)
    if (pieces[i].edge == seed.edge && pieces[i].contains(seed.s, l_tol)) {
      in[i] = 1;
      stack.push_back(i);
      break;
    }
  if (stack.empty()) fail(ErrorKind::InvalidArgument, "seed point lies inside a cut");
  while (!stack.empty()) {
    auto i = stack.back();
    stack.pop_back();
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
      if (!touches_vertex(pieces[i], v)) continue;
      for (std::size_t j = 0; j < pieces.size(); ++j)
        if (!in[j] && touches_vertex(pieces[j], v)) {
          in[j] = 1;
          stack.push_back(j);
        }
    }
  }

  CutComponent out;
  auto in_component = [&](std::size_t e, double s) {
    if (auto v = g.vertex_at({e, s})) {
      for (std::size_t i = 0; i < pieces.size(); ++i)
        if (in[i] && touches_vertex(pieces[i], *v)) return true;
      return false;
    }
    for (std::size_t i = 0; i < pieces.size(); ++i)
      if (in[i] && pieces[i].edge == e && pieces[i].contains(s, l_tol)) return true;
    return false;
  };
  for (const auto& c : cuts) {
    if (in_component(c.edge, c.outer))
      fail(ErrorKind::NoSeparatingInterval, "cut on edge " + g.edge(c.edge).name + " does not separate the target");
    if (in_component(c.edge, c.inner)) out.used.push_back(c);
  }
  if (out.used.empty()) fail(ErrorKind::NoSeparatingInterval, "no cut borders the target component");
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (!in[i]) continue;
    if (min_excess(pieces[i].edge, pieces[i].s0, pieces[i].s1) < -etol)
      fail(ErrorKind::NoSeparatingInterval, "target component leaves the region");
    out.pieces.push_back(pieces[i]);
  }

  double rhs = 0.0, norm_sq = 0.0, min_len = std::numeric_limits<double>::infinity();
  for (const auto& c : out.used) {
    const double L = c.length();
    min_len = std::min(min_len, L);
    if (psi) {
      double n2 = psi->l2_squared(c.edge, c.inner, c.outer);
      norm_sq += n2;
      rhs += n2 / (L * L);
    }
  }
  if (!psi) {
    norm_sq = 1.0;
    rhs = 1.0 / (min_len * min_len);
  }
  rhs *= factor;

  std::vector<GraphPoint> src;
  for (const auto& c : out.used) src.push_back({c.edge, c.inner});
  AgmonWeight w(g, excess);
  auto field = std::make_shared<DistanceField>(g, w.integral(), src);
  const double amp = std::sqrt(rhs);
  for (const auto& p : out.pieces) {
    const std::size_t e = p.edge;
    out.env.add(e, p.s0, p.s1, [field, e, amp](double s) { return amp * std::exp(-field->distance({e, s})); });
  }
  out.env.provenance = {{"cuts", static_cast<double>(out.used.size())},
                        {"L", min_len},
                        {"cut_norm_sq", norm_sq},
                        {"cut_norm_measured", psi ? 1.0 : 0.0},
                        {"factor", factor},
                        {"rhs", rhs}};
  return out;
}

}  // namespace detail

/// Agmon bound with weight sqrt((V-E-delta)_+) measured from the cuts, on the
/// component of the graph minus the cuts that contains `seed`.
inline Envelope delta_envelope(const MetricGraph& g, const PotentialField& V, double E, double delta,
                               std::span<const DeltaCut> cuts, const GraphPoint& seed,
                               const Eigenpair* psi = nullptr) {
  if (!(delta > 0.0)) fail(ErrorKind::InvalidArgument, "delta must be positive");
  auto excess = [V, E, delta](std::size_t e, double s) { return V(e, s) - E - delta; };
  auto min_excess = [&](std::size_t e, double s0, double s1) { return V.range(e, s0, s1).first - E - delta; };
  auto res = detail::cut_agmon_envelope(g, excess, min_excess, 1.0 / std::sqrt(delta), cuts, seed, psi,
                                        detail::energy_tol(E));
  bool reaches_2delta = false;
  for (const auto& p : res.pieces)
    if (V.range(p.edge, p.s0, p.s1).second - E > 2.0 * delta) reaches_2delta = true;
  if (!reaches_2delta) fail(ErrorKind::NoSeparatingInterval, "T_{E+2 delta} does not meet the target component");
  auto env = std::move(res.env);
  env.method = "agmon-delta";
  const double L = env.provenance.at("L"), n2 = env.provenance.at("cut_norm_sq");
  env.provenance["E"] = E;
  env.provenance["delta"] = delta;
  env.provenance["rhs_stated"] =
      std::exp(2.0 * std::sqrt(delta) * L) * (1.0 / (L * L) + delta / L) * n2 / std::sqrt(delta);
  return env;
}

/// Cuts bracketing `x` on its edge: the nearest parts of
/// T_{E+delta} \ T_{E+2 delta} on either side, each trimmed to a vertex-free
/// interval. A side that reaches a vertex while still in T_{E+2 delta} gets no cut.
inline std::vector<DeltaCut> delta_cuts_on_edge(const MetricGraph& g, const PotentialField& V, double E,
                                                double delta, const GraphPoint& x) {
  const std::size_t e = x.edge;
  const double l = g.length(e);
  auto f = [&](double s) { return V(e, s) - E; };
  if (f(x.s) <= 2.0 * delta) fail(ErrorKind::NoSeparatingInterval, "point is not in T_{E+2 delta}");
  auto upper = quad::crossings([&](double s) { return f(s) - 2.0 * delta; }, 0.0, l, 4096, 1e-14);
  auto lower = quad::crossings([&](double s) { return f(s) - delta; }, 0.0, l, 4096, 1e-14);
  std::vector<DeltaCut> cuts;
  // left side
  {
    double u = -1.0, lo = -1.0;
    for (double r : upper)
      if (r < x.s) u = r;
    if (u >= 0.0) {
      for (double r : lower)
        if (r < u) lo = r;
      if (lo >= 0.0) cuts.push_back({e, u, lo});
    }
  }
  {
    double u = -1.0, hi = -1.0;
    for (double r : upper)
      if (r > x.s) {
        u = r;
        break;
      }
    if (u >= 0.0) {
      for (double r : lower)
        if (r > u) {
          hi = r;
          break;
        }
      if (hi >= 0.0) cuts.push_back({e, u, hi});
    }
  }
  if (cuts.empty()) fail(ErrorKind::NoSeparatingInterval, "no separating interval on this edge");
  return cuts;
}

}  // namespace qgland

#endif  // QGLAND_AGMON_HPP
