#ifndef QGLAND_SHORTEST_PATH_HPP
#define QGLAND_SHORTEST_PATH_HPP

#include <qgland/error.hpp>
#include <qgland/graph.hpp>

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <queue>
#include <span>
#include <vector>

namespace qgland {

/// Integral of a nonnegative weight density over [min(s0,s1), max(s0,s1)] on
/// an edge. Partial-edge weights come straight from this oracle.
using EdgeIntegral = std::function<double(std::size_t edge, double s0, double s1)>;

inline EdgeIntegral unit_weight() {
  return [](std::size_t, double s0, double s1) { return std::abs(s1 - s0); };
}

struct ShortestPathResult {
  double weight = 0.0;
  GraphPath path;
};

/// Single-run Dijkstra from a set of (possibly mid-edge) source points; any
/// number of targets can then be queried.
class DistanceField {
 public:
  DistanceField(const MetricGraph& g, EdgeIntegral w, std::span<const GraphPoint> sources)
      : g_(std::make_shared<const MetricGraph>(g)), w_(std::move(w)), sources_(sources.begin(), sources.end()) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const auto nv = g.num_vertices();
    dist_.assign(nv, inf);
    pred_.assign(nv, Pred{});
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;

    auto offer = [&](std::size_t v, double d, Pred p) {
      if (d < dist_[v]) {
        dist_[v] = d;
        pred_[v] = p;
        heap.push({d, v});
      }
    };

    for (std::size_t k = 0; k < sources_.size(); ++k) {
      const auto& p = sources_[k];
      const auto& ed = g.edge(p.edge);
      if (auto v = g.vertex_at(p)) {
        offer(*v, 0.0, Pred{Pred::Source, k, p.edge, *v});
        continue;
      }
      offer(ed.from, w_(p.edge, 0.0, p.s), Pred{Pred::Source, k, p.edge, ed.from});
      offer(ed.to, w_(p.edge, p.s, ed.length), Pred{Pred::Source, k, p.edge, ed.to});
    }

    std::vector<char> done(nv, 0);
    while (!heap.empty()) {
      auto [d, v] = heap.top();
      heap.pop();
      if (done[v] || d > dist_[v]) continue;
      done[v] = 1;
      for (const auto& end : g.incident(v)) {
        const auto& ed = g.edge(end.edge);
        auto u = end.at_start ? ed.to : ed.from;
        offer(u, d + w_(end.edge, 0.0, ed.length), Pred{Pred::ViaEdge, v, end.edge, u});
      }
    }
  }

  double vertex_distance(std::size_t v) const { return dist_.at(v); }

  double distance(const GraphPoint& x) const { return best(x).weight; }

  ShortestPathResult path_to(const GraphPoint& x) const {
    auto b = best(x);
    if (!std::isfinite(b.weight)) fail(ErrorKind::Unreachable, "target is not reachable from the source set");
    ShortestPathResult res;
    res.weight = b.weight;
    // segments are collected backwards from the target
    std::vector<PathSegment> rev;
    const auto& ed = g_->edge(x.edge);
    if (b.kind == Best::SameEdge) {
      rev.push_back({x.edge, sources_[b.index].s, x.s});
    } else if (b.kind == Best::AtVertex) {
      unwind(b.index, rev);
    } else {
      auto v = b.index;
      double s_v = (v == ed.from && b.from_start) ? 0.0 : ed.length;
      rev.push_back({x.edge, s_v, x.s});
      unwind(v, rev);
    }
    std::reverse(rev.begin(), rev.end());
    for (auto& seg : rev)
      if (seg.length() > 0.0 || rev.size() == 1) res.path.segments.push_back(seg);
    return res;
  }

 private:
  struct Pred {
    enum Kind { None, Source, ViaEdge } kind = None;
    std::size_t index = 0;  // source index or predecessor vertex
    std::size_t edge = 0;
    std::size_t vertex = 0;  // the vertex this record belongs to
  };
  struct Best {
    enum Kind { AtVertex, FromEndpoint, SameEdge } kind = AtVertex;
    double weight = std::numeric_limits<double>::infinity();
    std::size_t index = 0;
    bool from_start = true;
  };

  Best best(const GraphPoint& x) const {
    Best b;
    if (auto v = g_->vertex_at(x)) {
      b.kind = Best::AtVertex;
      b.weight = dist_[*v];
      b.index = *v;
      for (std::size_t k = 0; k < sources_.size(); ++k)
        if (g_->same_point(sources_[k], x)) {
          b.weight = 0.0;
          b.kind = Best::SameEdge;
          b.index = k;
        }
      return b;
    }
    const auto& ed = g_->edge(x.edge);
    double via_from = dist_[ed.from] + w_(x.edge, 0.0, x.s);
    double via_to = dist_[ed.to] + w_(x.edge, x.s, ed.length);
    if (via_from <= via_to) {
      b = {Best::FromEndpoint, via_from, ed.from, true};
    } else {
      b = {Best::FromEndpoint, via_to, ed.to, false};
    }
    for (std::size_t k = 0; k < sources_.size(); ++k) {
      if (sources_[k].edge != x.edge || g_->vertex_at(sources_[k])) continue;
      double d = w_(x.edge, sources_[k].s, x.s);
      if (d < b.weight) b = {Best::SameEdge, d, k, true};
    }
    return b;
  }

  void unwind(std::size_t v, std::vector<PathSegment>& rev) const {
    for (std::size_t guard = 0; guard <= g_->num_vertices(); ++guard) {
      const auto& p = pred_[v];
      const auto& ed = g_->edge(p.edge);
      double s_v = (v == ed.to && !(v == ed.from)) ? ed.length : 0.0;
      if (p.kind == Pred::Source) {
        const auto& src = sources_[p.index];
        if (!g_->vertex_at(src)) {
          // a loop edge reaches its vertex at both ends; pick the closer one
          if (ed.is_loop()) s_v = (w_(p.edge, 0.0, src.s) <= w_(p.edge, src.s, ed.length)) ? 0.0 : ed.length;
          rev.push_back({p.edge, src.s, s_v});
        }
        return;
      }
      if (p.kind != Pred::ViaEdge) return;
      double s_u = (s_v == 0.0) ? ed.length : 0.0;
      rev.push_back({p.edge, s_u, s_v});
      v = p.index;
    }
  }

  std::shared_ptr<const MetricGraph> g_;
  EdgeIntegral w_;
  std::vector<GraphPoint> sources_;
  std::vector<double> dist_;
  std::vector<Pred> pred_;
};

/// Minimal total weight over all paths from `from` to `to`, with one
/// realizing path.
inline ShortestPathResult shortest_path(const MetricGraph& g, const EdgeIntegral& w,
                                        std::span<const GraphPoint> from, const GraphPoint& to) {
  DistanceField field(g, w, from);
  return field.path_to(to);
}

/// Ordinary metric distance between two graph points.
inline double graph_distance(const MetricGraph& g, const GraphPoint& a, const GraphPoint& b) {
  GraphPoint src[1] = {a};
  return DistanceField(g, unit_weight(), src).distance(b);
}

}  // namespace qgland

#endif  // QGLAND_SHORTEST_PATH_HPP
