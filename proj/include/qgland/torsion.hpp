#ifndef QGLAND_TORSION_HPP
#define QGLAND_TORSION_HPP

#include <qgland/agmon.hpp>
#include <qgland/envelope.hpp>
#include <qgland/error.hpp>
#include <qgland/graph.hpp>
#include <qgland/potential.hpp>
#include <qgland/spectral.hpp>

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qgland {

/// V >= V1 + b^2 u^2 on a piece, u the offset from the piece center.
struct QuadraticMinorant {
  double V1 = 0.0;
  double b = 0.0;
  double objective() const { return b + 0.5 * V1; }
};

/// Edge segment of a piece. u(s) = s - s_y is the signed offset from the
/// (possibly virtual) center position s_y on the edge's coordinate line.
struct Arm {
  std::size_t edge = 0;
  double s_lo = 0.0;
  double s_hi = 0.0;
  double s_y = 0.0;
  bool lo_center = false;  // end sits on the piece's own center vertex
  bool hi_center = false;

  double u(double s) const { return s - s_y; }
  double length() const { return s_hi - s_lo; }
  bool contains(double s, double tol = 1e-12) const { return s >= s_lo - tol && s <= s_hi + tol; }
  /// smallest and largest |u| on the arm
  std::pair<double, double> abs_u_range() const {
    double a = std::abs(u(s_lo)), b = std::abs(u(s_hi));
    double lo = (u(s_lo) <= 0.0 && u(s_hi) >= 0.0) ? 0.0 : std::min(a, b);
    return {lo, std::max(a, b)};
  }
};

struct PieceGeometry {
  std::string kind;  // interval | star | privileged-star
  std::vector<Arm> arms;
  std::optional<std::size_t> center_vertex;
};

/// Vertex-free interval [s0, s1] of one edge, centered at y.
inline PieceGeometry interval_piece(const MetricGraph& g, std::size_t e, double s0, double s1, double y) {
  if (!(s0 < s1) || s0 < 0.0 || s1 > g.length(e) + 1e-12 || y < s0 || y > s1)
    fail(ErrorKind::InvalidArgument, "interval piece needs 0 <= s0 <= y <= s1 <= length");
  return {"interval", {Arm{e, s0, std::min(s1, g.length(e)), y}}, std::nullopt};
}

namespace detail {
inline Arm arm_from_vertex(const MetricGraph& g, const EdgeEnd& end, double r, double center_offset) {
  // center_offset: signed distance of the center from the vertex measured along this arm (outward positive)
  const double l = g.length(end.edge);
  if (end.at_start) {
    Arm a{end.edge, 0.0, r, center_offset};
    a.lo_center = true;
    return a;
  }
  Arm a{end.edge, l - r, l, l - center_offset};
  a.hi_center = true;
  return a;
}

inline void check_star_radius(const MetricGraph& g, std::size_t v, double r) {
  if (!(r > 0.0)) fail(ErrorKind::InvalidArgument, "star radius must be positive");
  for (const auto& end : g.incident(v)) {
    const double l = g.length(end.edge);
    const double room = g.edge(end.edge).is_loop() ? 0.5 * l : l;
    if (r > room + 1e-12) fail(ErrorKind::InvalidArgument, "star radius exceeds edge " + g.edge(end.edge).name);
  }
}
}  // namespace detail

/// Star of radius r around vertex v, symmetric about v.
inline PieceGeometry star_piece(const MetricGraph& g, std::size_t v, double r) {
  detail::check_star_radius(g, v, r);
  PieceGeometry p{"star", {}, v};
  for (const auto& end : g.incident(v)) p.arms.push_back(detail::arm_from_vertex(g, end, r, 0.0));
  return p;
}

/// Star of radius r around v whose center lies at distance t along the
/// privileged incident end `privileged` (index into g.incident(v)); on every
/// other arm the piece continues the same profile beyond v.
inline PieceGeometry privileged_star_piece(const MetricGraph& g, std::size_t v, double r, std::size_t privileged,
                                           double t) {
  detail::check_star_radius(g, v, r);
  if (privileged >= g.degree(v)) fail(ErrorKind::InvalidArgument, "privileged end index out of range");
  if (!(t > 0.0) || t >= r) fail(ErrorKind::InvalidArgument, "privileged center needs 0 < t < r");
  PieceGeometry p{"privileged-star", {}, v};
  auto ends = g.incident(v);
  for (std::size_t i = 0; i < ends.size(); ++i)
    p.arms.push_back(detail::arm_from_vertex(g, ends[i], r, i == privileged ? t : -t));
  return p;
}

namespace detail {
struct ArmSample {
  double V;
  double u2;
};
inline std::vector<ArmSample> sample_piece(const PotentialField& V, const PieceGeometry& p, int per_arm) {
  std::vector<ArmSample> out;
  for (const auto& a : p.arms)
    for (int i = 0; i <= per_arm; ++i) {
      double s = a.s_lo + a.length() * i / per_arm;
      double u = a.u(s);
      out.push_back({V(a.edge, s), u * u});
    }
  return out;
}
}  // namespace detail

/// Quadratic minorant maximizing b + V1/2 subject to V >= V1 + b^2 u^2 on a
/// dense check grid. The objective is concave in b, so a log-grid scan
/// followed by Brent refinement finds the optimum.
inline QuadraticMinorant fit_minorant(const PotentialField& V, const PieceGeometry& p, int per_arm = 4096) {
  auto pts = detail::sample_piece(V, p, per_arm);
  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0, bmax2 = std::numeric_limits<double>::infinity();
  for (const auto& q : pts) {
    vmin = std::min(vmin, q.V);
    vmax = std::max(vmax, q.V);
    if (q.u2 > 1e-14) bmax2 = std::min(bmax2, q.V / q.u2);
  }
  auto v1_of = [&](double b) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& q : pts) m = std::min(m, q.V - b * b * q.u2);
    return m;
  };
  // min of V - b^2 u^2 with grid minima refined inside their neighbouring cells
  auto exact_v1 = [&](double b) {
    double m = std::numeric_limits<double>::infinity();
    std::size_t base = 0;
    for (const auto& a : p.arms) {
      auto gfun = [&](double s) { return V(a.edge, s) - b * b * a.u(s) * a.u(s); };
      for (int i = 0; i <= per_arm; ++i) {
        const double gi = pts[base + i].V - b * b * pts[base + i].u2;
        m = std::min(m, gi);
        const bool left = i == 0 || gi <= pts[base + i - 1].V - b * b * pts[base + i - 1].u2;
        const bool right = i == per_arm || gi <= pts[base + i + 1].V - b * b * pts[base + i + 1].u2;
        if (!left || !right) continue;
        const double h = a.length() / per_arm;
        const double lo = std::max(a.s_lo, a.s_lo + h * (i - 1)), hi = std::min(a.s_hi, a.s_lo + h * (i + 1));
        if (hi > lo) m = std::min(m, boost::math::tools::brent_find_minima(gfun, lo, hi, 52).second);
      }
      base += per_arm + 1;
    }
    return m;
  };
  auto phi = [&](double b) { return b + 0.5 * v1_of(b); };
  QuadraticMinorant best{std::max(0.0, exact_v1(0.0)), 0.0};
  if (std::isfinite(bmax2) && bmax2 > 0.0) {
    const double bmax = std::sqrt(bmax2);
    double bb = 0.0, fb = phi(0.0);
    for (int i = 0; i <= 60; ++i) {
      double b = bmax * std::pow(10.0, -6.0 + 6.0 * i / 60.0);
      double f = phi(b);
      if (f > fb) {
        fb = f;
        bb = b;
      }
    }
    double lo = std::max(0.0, bb / std::pow(10.0, 0.1)), hi = std::min(bmax, bb * std::pow(10.0, 0.1));
    if (hi > lo) {
      auto r = boost::math::tools::brent_find_minima([&](double b) { return -phi(b); }, lo, hi, 40);
      if (-r.second > fb) bb = r.first;
    }
    const double vtol = 1e-12 * (1.0 + vmax);
    double v1 = exact_v1(bb);
    if (v1 < -vtol) {
      double lo = 0.0, hi = bb;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (exact_v1(mid) >= -vtol ? lo : hi) = mid;
      }
      bb = lo;
      v1 = exact_v1(bb);
    }
    v1 = std::max(0.0, v1);
    if (bb + 0.5 * v1 > best.objective()) best = {v1, bb};
  }
  best.V1 = std::max(0.0, best.V1 - 1e-13 * (1.0 + vmax));
  return best;
}

struct Amplitude {
  double A = 0.0;
  double A0 = 0.0;
  bool interior_critical = false;
};

/// f(x) = (V1 + b^2 x^2)/2 + (b + V1) e^{-b x^2/2}
inline double torsion_f(const QuadraticMinorant& m, double x) {
  return 0.5 * (m.V1 + m.b * m.b * x * x) + (m.b + m.V1) * std::exp(-0.5 * m.b * x * x);
}

/// A = 1 / min f over the |u| values covered by the piece, and A0 = 1/(b + V1/2).
inline Amplitude amplitude(const QuadraticMinorant& m, const PieceGeometry& p) {
  if (!(m.b > 0.0)) fail(ErrorKind::DegenerateMinorant, "b = 0; use a quadratic piece");
  double fmin = std::numeric_limits<double>::infinity();
  bool interior = false;
  const double xc2 = -(2.0 / m.b) * std::log(m.b / (m.b + m.V1));
  const double xc = std::sqrt(std::max(0.0, xc2));
  for (const auto& a : p.arms) {
    auto [lo, hi] = a.abs_u_range();
    fmin = std::min({fmin, torsion_f(m, lo), torsion_f(m, hi)});
    if (xc2 > 0.0 && xc > lo && xc < hi) {
      double crit = 0.5 * m.V1 - m.b * std::log(m.b / (m.b + m.V1)) + m.b;
      if (crit < fmin) {
        fmin = crit;
        interior = true;
      }
    }
  }
  return {1.0 / fmin, 1.0 / (m.b + 0.5 * m.V1), interior};
}

/// Cancels the end slope of a piece: (eps/2) k (1 - d/eps)^2 for d <= eps,
/// d the distance from the end.
struct Ramp {
  std::size_t arm = 0;
  bool at_hi = false;
  double eps = 0.0;
  double k = 0.0;
};

struct TorsionPiece {
  PieceGeometry geom;
  QuadraticMinorant minorant;
  bool gaussian = true;
  double A = 0.0, A0 = 0.0;  // gaussian A (1/2 + e^{-b u^2/2})
  double a1 = 0.0, b1 = 0.0;  // quadratic a1 - b1 u^2
  std::vector<Ramp> ramps;
  double c = 0.0;

  double base(double u) const {
    if (!gaussian) return a1 - b1 * u * u;
    return A * (0.5 + std::exp(-0.5 * minorant.b * u * u));
  }
  double base_d1(double u) const {
    if (!gaussian) return -2.0 * b1 * u;
    const double b = minorant.b;
    return -A * b * u * std::exp(-0.5 * b * u * u);
  }
  double base_d2(double u) const {
    if (!gaussian) return -2.0 * b1;
    const double b = minorant.b;
    return A * (b * b * u * u - b) * std::exp(-0.5 * b * u * u);
  }

  /// value, first and second derivative in s on arm `ai`, without c
  std::array<double, 3> eval(std::size_t ai, double s) const {
    const auto& a = geom.arms[ai];
    const double u = a.u(s);
    std::array<double, 3> r{base(u), base_d1(u), base_d2(u)};
    for (const auto& rp : ramps) {
      if (rp.arm != ai) continue;
      const double d = rp.at_hi ? a.s_hi - s : s - a.s_lo;
      if (d < 0.0 || d > rp.eps) continue;
      const double w = 1.0 - d / rp.eps;
      const double dd = rp.at_hi ? -1.0 : 1.0;
      r[0] += 0.5 * rp.eps * rp.k * w * w;
      r[1] += -rp.k * w * dd;
      r[2] += rp.k / rp.eps;
    }
    return r;
  }
};

/// Gaussian piece when b > 0, otherwise a quadratic/constant piece.
inline TorsionPiece make_piece(const PieceGeometry& geom, const QuadraticMinorant& m) {
  TorsionPiece p;
  p.geom = geom;
  p.minorant = m;
  if (m.b > 0.0) {
    auto amp = amplitude(m, geom);
    p.A = amp.A;
    p.A0 = amp.A0;
    return p;
  }
  p.gaussian = false;
  if (m.V1 > 0.0) {
    p.a1 = 1.0 / m.V1;
    p.b1 = 0.0;
  } else {
    double umax = 0.0;
    for (const auto& a : geom.arms) umax = std::max(umax, a.abs_u_range().second);
    p.b1 = 0.5;
    p.a1 = 2.0 * p.b1 * umax * umax + 1e-3;
  }
  return p;
}

inline TorsionPiece make_piece(const PotentialField& V, const PieceGeometry& geom) {
  return make_piece(geom, fit_minorant(V, geom));
}

struct LandscapeOptions {
  double eps = -1.0;         // ramp width; default 5% of the arm length
  int grid_per_arm = 2048;   // verification grid (at least)
  double tol = 1e-8;         // slack for H Upsilon >= 1 and the vertex condition
};

/// Assembled supersolution H Upsilon >= 1 on the covered region S.
class LandscapeFunction {
 public:
  MetricGraph graph;
  PotentialField potential;
  std::vector<TorsionPiece> pieces;
  double c0 = 0.0;
  std::vector<GraphPoint> boundary;           // points of the boundary of S
  std::vector<std::size_t> interior_vertices;
  double min_slack = 0.0;                      // min over the grid of H Upsilon - 1
  double max_vertex_flux = 0.0;                // max over interior vertices of sum of outgoing derivatives
  bool verified = false;
  std::vector<std::string> notes;

  std::optional<std::pair<std::size_t, std::size_t>> locate(std::size_t e, double s) const {
    for (std::size_t p = 0; p < pieces.size(); ++p)
      for (std::size_t a = 0; a < pieces[p].geom.arms.size(); ++a) {
        const auto& arm = pieces[p].geom.arms[a];
        if (arm.edge == e && arm.contains(s)) return std::make_pair(p, a);
      }
    return std::nullopt;
  }
  bool covers(std::size_t e, double s) const { return locate(e, s).has_value(); }

  std::array<double, 3> eval(std::size_t e, double s) const {
    auto loc = locate(e, s);
    if (!loc) fail(ErrorKind::InvalidArgument, "point outside the landscape region");
    auto r = pieces[loc->first].eval(loc->second, s);
    r[0] += pieces[loc->first].c + c0;
    return r;
  }
  double operator()(std::size_t e, double s) const { return eval(e, s)[0]; }
  /// value at a graph point; vertices are looked up through any covered incident end
  double operator()(const GraphPoint& x) const {
    if (covers(x.edge, x.s)) return eval(x.edge, x.s)[0];
    if (auto v = graph.vertex_at(x, 1e-9))
      for (const auto& end : graph.incident(*v)) {
        const double s = end.at_start ? 0.0 : graph.length(end.edge);
        if (covers(end.edge, s)) return eval(end.edge, s)[0];
      }
    fail(ErrorKind::InvalidArgument, "point outside the landscape region");
  }
  /// -Upsilon'' + V Upsilon
  double H(std::size_t e, double s) const {
    auto r = eval(e, s);
    return -r[2] + potential(e, s) * r[0];
  }
  /// sum over incident ends of the outgoing derivative at vertex v
  double vertex_flux(std::size_t v) const {
    double sum = 0.0;
    for (const auto& end : graph.incident(v)) {
      const double l = graph.length(end.edge);
      sum += end.at_start ? eval(end.edge, 0.0)[1] : -eval(end.edge, l)[1];
    }
    return sum;
  }
  std::vector<EdgeInterval> region() const {
    std::vector<EdgeInterval> out;
    for (const auto& p : pieces)
      for (const auto& a : p.geom.arms) out.push_back({a.edge, a.s_lo, a.s_hi});
    return out;
  }
};

namespace detail {

struct EndRef {
  std::size_t piece, arm;
  bool hi;
};

inline bool arm_end_at(const Arm& a, bool hi, double s) { return std::abs((hi ? a.s_hi : a.s_lo) - s) < 1e-9; }

}  // namespace detail

/// Glue pieces into a C^1 supersolution: ramps at interior junctions,
/// per-piece constants for continuity, and a global c0 for H Upsilon >= 1.
inline LandscapeFunction assemble_landscape(const MetricGraph& g, const PotentialField& V,
                                            std::vector<TorsionPiece> pieces, const LandscapeOptions& opt = {}) {
  if (pieces.empty()) fail(ErrorKind::InvalidArgument, "no pieces");
  LandscapeFunction L;
  L.graph = g;
  L.potential = V;

  // overlap check: arms on one edge may only touch at end points
  std::vector<std::tuple<std::size_t, double, double>> spans;
  for (const auto& p : pieces)
    for (const auto& a : p.geom.arms) spans.emplace_back(a.edge, a.s_lo, a.s_hi);
  for (std::size_t i = 0; i < spans.size(); ++i)
    for (std::size_t j = i + 1; j < spans.size(); ++j) {
      auto [e1, a1, b1] = spans[i];
      auto [e2, a2, b2] = spans[j];
      if (e1 == e2 && std::min(b1, b2) - std::max(a1, a2) > 1e-9)
        fail(ErrorKind::InvalidArgument, "pieces overlap on edge " + g.edge(e1).name);
    }

  auto covered_end = [&](const EdgeEnd& end) -> std::optional<detail::EndRef> {
    const double s = end.at_start ? 0.0 : g.length(end.edge);
    for (std::size_t p = 0; p < pieces.size(); ++p)
      for (std::size_t a = 0; a < pieces[p].geom.arms.size(); ++a) {
        const auto& arm = pieces[p].geom.arms[a];
        if (arm.edge != end.edge) continue;
        if (end.at_start && detail::arm_end_at(arm, false, s)) return detail::EndRef{p, a, false};
        if (!end.at_start && detail::arm_end_at(arm, true, s)) return detail::EndRef{p, a, true};
      }
    return std::nullopt;
  };

  // junction groups: arm ends meeting in the interior of S
  std::vector<std::vector<detail::EndRef>> groups;
  std::vector<char> at_vertex;
  std::vector<char> vertex_done(g.num_vertices(), 0);
  std::map<std::tuple<std::size_t, long long>, std::size_t> point_group;
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    for (std::size_t a = 0; a < pieces[p].geom.arms.size(); ++a) {
      const auto& arm = pieces[p].geom.arms[a];
      for (bool hi : {false, true}) {
        if (hi ? arm.hi_center : arm.lo_center) continue;
        const double s = hi ? arm.s_hi : arm.s_lo;
        if (auto v = g.vertex_at({arm.edge, s}, 1e-9)) {
          if (vertex_done[*v]) continue;
          vertex_done[*v] = 1;
          std::vector<detail::EndRef> grp;
          bool all = true;
          for (const auto& end : g.incident(*v)) {
            auto ref = covered_end(end);
            if (!ref) {
              all = false;
              break;
            }
            grp.push_back(*ref);
          }
          if (all) {
            groups.push_back(grp);
            at_vertex.push_back(1);
            L.interior_vertices.push_back(*v);
          } else {
            L.boundary.push_back(g.vertex_point(*v));
          }
          continue;
        }
        auto key = std::make_tuple(arm.edge, std::llround(s * 1e9));
        auto it = point_group.find(key);
        if (it == point_group.end()) {
          point_group[key] = groups.size();
          groups.push_back({detail::EndRef{p, a, hi}});
          at_vertex.push_back(0);
        } else {
          groups[it->second].push_back({p, a, hi});
        }
      }
    }
  }
  // center vertices of stars are interior too
  for (const auto& p : pieces)
    if (p.geom.center_vertex) L.interior_vertices.push_back(*p.geom.center_vertex);

  // single-end groups at edge interiors are boundary points
  std::vector<std::vector<detail::EndRef>> junctions;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& grp = groups[gi];
    if (grp.size() == 1 && !at_vertex[gi]) {
      const auto& arm = pieces[grp[0].piece].geom.arms[grp[0].arm];
      L.boundary.push_back({arm.edge, grp[0].hi ? arm.s_hi : arm.s_lo});
    } else {
      junctions.push_back(grp);
    }
  }

  // Step 1: ramps at junction ends
  for (const auto& grp : junctions)
    for (const auto& ref : grp) {
      auto& piece = pieces[ref.piece];
      const auto& arm = piece.geom.arms[ref.arm];
      const double eps = opt.eps > 0.0 ? std::min(opt.eps, 0.5 * arm.length()) : 0.05 * arm.length();
      const double s = ref.hi ? arm.s_hi : arm.s_lo;
      const double slope = piece.base_d1(arm.u(s));
      piece.ramps.push_back({ref.arm, ref.hi, eps, ref.hi ? -slope : slope});
    }

  // Step 2: constants making junction values agree (weighted union-find)
  const std::size_t np = pieces.size();
  std::vector<std::size_t> parent(np);
  std::vector<double> offset(np, 0.0);  // c_p = c_root + offset[p]
  for (std::size_t i = 0; i < np; ++i) parent[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) -> std::size_t {
    if (parent[x] == x) return x;
    auto r = find(parent[x]);
    offset[x] += offset[parent[x]];
    parent[x] = r;
    return r;
  };
  auto end_value = [&](const detail::EndRef& ref) {
    const auto& arm = pieces[ref.piece].geom.arms[ref.arm];
    return pieces[ref.piece].eval(ref.arm, ref.hi ? arm.s_hi : arm.s_lo)[0];
  };
  double worst_mismatch = 0.0;
  for (const auto& grp : junctions) {
    const auto& r0 = grp[0];
    const double v0 = end_value(r0);
    for (std::size_t k = 1; k < grp.size(); ++k) {
      const double vk = end_value(grp[k]);
      // want c_k - c_0 = v0 - vk
      auto a = find(r0.piece), b = find(grp[k].piece);
      const double want = v0 - vk;
      if (a == b) {
        double have = offset[grp[k].piece] - offset[r0.piece];
        worst_mismatch = std::max(worst_mismatch, std::abs(have - want) / std::max(1.0, std::abs(v0)));
        continue;
      }
      // attach b under a
      parent[b] = a;
      offset[b] = offset[r0.piece] + want - offset[grp[k].piece];
    }
  }
  if (worst_mismatch > 1e-9)
    fail(ErrorKind::AssemblyInfeasible,
         "piece constants cannot be made consistent around a cycle (mismatch " + std::to_string(worst_mismatch) + ")");
  for (std::size_t p = 0; p < np; ++p) {
    find(p);
    pieces[p].c = offset[p];
  }
  // each connected group of pieces gets its own lift to c >= 0
  std::map<std::size_t, double> group_min;
  for (std::size_t p = 0; p < np; ++p) {
    auto r = find(p);
    auto it = group_min.find(r);
    if (it == group_min.end()) group_min[r] = pieces[p].c;
    else it->second = std::min(it->second, pieces[p].c);
  }
  for (std::size_t p = 0; p < np; ++p) pieces[p].c -= group_min[find(p)];
  L.pieces = std::move(pieces);

  // vertex condition: sum of outgoing derivatives <= 0
  double scale = 1.0;
  for (const auto& p : L.pieces) scale = std::max(scale, p.gaussian ? p.A : p.a1);
  L.max_vertex_flux = -std::numeric_limits<double>::infinity();
  for (auto v : L.interior_vertices) L.max_vertex_flux = std::max(L.max_vertex_flux, L.vertex_flux(v));
  if (L.interior_vertices.empty()) L.max_vertex_flux = 0.0;
  if (L.max_vertex_flux > opt.tol * scale)
    fail(ErrorKind::SupersolutionFailure,
         "sum of outgoing derivatives is positive at a vertex: " + std::to_string(L.max_vertex_flux));

  // Step 3: c0 from the grid, then verification
  struct G {
    std::size_t e;
    double s, h, V, val;
  };
  std::vector<G> grid;
  for (std::size_t p = 0; p < L.pieces.size(); ++p) {
    const auto& piece = L.pieces[p];
    for (std::size_t a = 0; a < piece.geom.arms.size(); ++a) {
      const auto& arm = piece.geom.arms[a];
      const int n = std::max(opt.grid_per_arm, static_cast<int>(std::ceil(arm.length() / 2e-3)));
      std::vector<double> ss;
      for (int i = 0; i <= n; ++i) ss.push_back(arm.s_lo + arm.length() * i / n);
      for (const auto& rp : piece.ramps)
        if (rp.arm == a)
          for (double f : {1.0 - 1e-9, 1.0, 1.0 + 1e-9})
            ss.push_back(rp.at_hi ? arm.s_hi - f * rp.eps : arm.s_lo + f * rp.eps);
      for (double s : ss) {
        auto r = piece.eval(a, s);
        const double val = r[0] + piece.c;
        const double Vs = V(arm.edge, s);
        grid.push_back({arm.edge, s, -r[2] + Vs * val, Vs, val});
      }
    }
  }
  double c0 = 0.0, worst = std::numeric_limits<double>::infinity();
  for (const auto& q : grid) {
    if (q.h >= 1.0) continue;
    if (q.V <= 1e-14) {
      worst = std::min(worst, q.h - 1.0);
      continue;
    }
    c0 = std::max(c0, (1.0 - q.h) / q.V);
  }
  if (worst < -opt.tol)
    fail(ErrorKind::SupersolutionFailure,
         "H Upsilon < 1 where V vanishes; worst slack " + std::to_string(worst));
  L.c0 = c0;
  double slack = std::numeric_limits<double>::infinity(), vmin = std::numeric_limits<double>::infinity();
  for (const auto& q : grid) {
    slack = std::min(slack, q.h + q.V * c0 - 1.0);
    vmin = std::min(vmin, q.val + c0);
  }
  L.min_slack = slack;
  if (slack < -opt.tol)
    fail(ErrorKind::SupersolutionFailure, "H Upsilon >= 1 fails; worst slack " + std::to_string(slack));
  if (!(vmin > 0.0)) fail(ErrorKind::SupersolutionFailure, "landscape function is not positive");
  L.verified = true;
  for (const auto& p : L.pieces)
    if (!p.gaussian) L.notes.push_back("quadratic piece (uniform-grade)");
  return L;
}

/// |psi| <= max_boundary (|psi_b| - E psi_sup Upsilon)_+ + E psi_sup Upsilon.
inline Envelope max_principle_envelope(const LandscapeFunction& L, double E, double psi_sup,
                                       const std::vector<std::pair<GraphPoint, double>>& boundary_values) {
  if (!L.verified) fail(ErrorKind::UnverifiedSupersolution, "landscape function was not verified");
  if (E < 0.0 || psi_sup < 0.0) fail(ErrorKind::InvalidArgument, "E and psi_sup must be nonnegative");
  double W = 0.0;
  for (const auto& b : L.boundary) {
    std::optional<double> bv;
    for (const auto& [pt, val] : boundary_values)
      if (L.graph.same_point(pt, b, 1e-9)) bv = bv ? std::max(*bv, val) : val;
    if (!bv) fail(ErrorKind::InvalidArgument, "missing boundary value at a boundary point of the region");
    W = std::max(W, *bv - E * psi_sup * L(b));
  }
  Envelope env;
  env.method = "torsion";
  auto Lp = std::make_shared<LandscapeFunction>(L);
  const double k = E * psi_sup;
  for (const auto& iv : L.region()) {
    const std::size_t e = iv.edge;
    env.add(e, iv.s0, iv.s1, [Lp, e, k, W](double s) { return W + k * (*Lp)(e, s); });
  }
  env.provenance = {{"E", E},        {"psi_sup", psi_sup},  {"boundary_term", W},
                    {"c0", L.c0},    {"min_slack", L.min_slack}, {"pieces", static_cast<double>(L.pieces.size())}};
  return env;
}

/// Same, with psi_sup and boundary values read off an eigenpair.
inline Envelope max_principle_envelope(const LandscapeFunction& L, double E, const Eigenpair& psi) {
  double sup = 0.0;
  for (const auto& iv : L.region()) sup = std::max(sup, psi.sup_norm(iv.edge, iv.s0, iv.s1));
  std::vector<std::pair<GraphPoint, double>> bv;
  for (const auto& b : L.boundary) bv.push_back({b, std::abs(psi(b))});
  return max_principle_envelope(L, E, sup * (1.0 + 1e-12), bv);
}

/// Agmon-type bound inside the landscape region with density
/// sqrt(((1-theta)/Upsilon + theta V - E - delta)_+), separated by cuts.
inline Envelope torsion_agmon_extension(const LandscapeFunction& L, double E, double delta,
                                        std::span<const DeltaCut> cuts, const GraphPoint& seed,
                                        const Eigenpair* psi = nullptr, double theta = 0.5) {
  if (!L.verified) fail(ErrorKind::UnverifiedSupersolution, "landscape function was not verified");
  if (!(delta > 0.0) || !(theta > 0.0) || !(theta < 1.0))
    fail(ErrorKind::InvalidArgument, "need delta > 0 and 0 < theta < 1");
  auto Lp = std::make_shared<LandscapeFunction>(L);
  auto gap = [Lp, theta, E](std::size_t e, double s) {
    return (1.0 - theta) / (*Lp)(e, s) + theta * Lp->potential(e, s) - E;
  };
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& iv : L.region())
    for (int i = 0; i <= 512; ++i) best = std::max(best, gap(iv.edge, iv.s0 + iv.length() * i / 512));
  if (best <= delta) fail(ErrorKind::EmptyRegion, "(1-theta)/Upsilon + theta V - E never exceeds delta");
  auto excess = [Lp, gap, delta](std::size_t e, double s) {
    if (!Lp->covers(e, s)) return -1.0;
    return gap(e, s) - delta;
  };
  auto min_excess = [Lp, gap, delta](std::size_t e, double s0, double s1) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 1024; ++i) {
      double s = s0 + (s1 - s0) * i / 1024;
      if (!Lp->covers(e, s)) return -std::numeric_limits<double>::infinity();
      m = std::min(m, gap(e, s) - delta);
    }
    return m;
  };
  auto res = detail::cut_agmon_envelope(L.graph, excess, min_excess, 1.0 / std::sqrt(theta * delta), cuts, seed,
                                        psi, 1e-12);
  auto env = std::move(res.env);
  env.method = "torsion-agmon";
  env.provenance["E"] = E;
  env.provenance["delta"] = delta;
  env.provenance["theta"] = theta;
  return env;
}

}  // namespace qgland

#endif  // QGLAND_TORSION_HPP
