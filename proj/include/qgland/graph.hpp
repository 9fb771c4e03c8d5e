#ifndef QGLAND_GRAPH_HPP
#define QGLAND_GRAPH_HPP

#include <qgland/error.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace qgland {

/// Tunable versions of the standing assumptions on the graph.
struct GraphConfig {
  double min_edge_length = 1e-6;
  std::size_t max_degree = 64;
};

struct Edge {
  std::string name;
  std::size_t from = 0;
  std::size_t to = 0;
  double length = 0.0;

  bool is_loop() const { return from == to; }
};

/// One end of an edge as seen from a vertex. `at_start` means the vertex sits
/// at arclength 0 of the edge; a loop contributes two ends to its vertex.
struct EdgeEnd {
  std::size_t edge = 0;
  bool at_start = true;
};

struct GraphSpec {
  struct EdgeSpec {
    std::string name;
    std::string from;
    std::string to;
    double length = 0.0;
  };
  std::vector<std::string> vertices;
  std::vector<EdgeSpec> edges;
};

/// Point on an edge, arclength `s` measured from the edge's first endpoint.
struct GraphPoint {
  std::size_t edge = 0;
  double s = 0.0;
};

/// Piece of a path traversing edge `edge` from `s_in` to `s_out`; orientation
/// is implied by the ordering of the two coordinates.
struct PathSegment {
  std::size_t edge = 0;
  double s_in = 0.0;
  double s_out = 0.0;

  bool forward() const { return s_out >= s_in; }
  double length() const { return std::abs(s_out - s_in); }
};

struct GraphPath {
  std::vector<PathSegment> segments;

  double length() const {
    double total = 0.0;
    for (const auto& seg : segments) total += seg.length();
    return total;
  }
};

class MetricGraph {
 public:
  MetricGraph() = default;

  MetricGraph(std::vector<std::string> vertex_names, std::vector<Edge> edges, GraphConfig config = {})
      : names_(std::move(vertex_names)), edges_(std::move(edges)), config_(config) {
    incident_.resize(names_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& ed = edges_[e];
      if (ed.from >= names_.size() || ed.to >= names_.size())
        fail(ErrorKind::InvalidArgument, "edge '" + ed.name + "' references an unknown vertex");
      incident_[ed.from].push_back({e, true});
      incident_[ed.to].push_back({e, false});
    }
    validate();
  }

  std::size_t num_vertices() const { return names_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }
  double length(std::size_t e) const { return edges_.at(e).length; }
  const std::string& vertex_name(std::size_t v) const { return names_.at(v); }
  const std::vector<std::string>& vertex_names() const { return names_; }
  const GraphConfig& config() const { return config_; }

  std::span<const EdgeEnd> incident(std::size_t v) const { return incident_.at(v); }
  std::size_t degree(std::size_t v) const { return incident_.at(v).size(); }

  double total_length() const {
    return std::accumulate(edges_.begin(), edges_.end(), 0.0,
                           [](double acc, const Edge& e) { return acc + e.length; });
  }

  double shortest_edge() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& e : edges_) m = std::min(m, e.length);
    return m;
  }

  std::optional<std::size_t> find_vertex(const std::string& name) const {
    for (std::size_t v = 0; v < names_.size(); ++v)
      if (names_[v] == name) return v;
    return std::nullopt;
  }

  std::optional<std::size_t> find_edge(const std::string& name) const {
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (edges_[e].name == name) return e;
    return std::nullopt;
  }

  /// Vertex located at `p`, if `p` is an edge endpoint (within `tol`).
  std::optional<std::size_t> vertex_at(const GraphPoint& p, double tol = 1e-12) const {
    const auto& ed = edge(p.edge);
    if (p.s <= tol) return ed.from;
    if (p.s >= ed.length - tol) return ed.to;
    return std::nullopt;
  }

  GraphPoint vertex_point(std::size_t v) const {
    const auto& end = incident_.at(v).front();
    return {end.edge, end.at_start ? 0.0 : edges_[end.edge].length};
  }

  /// Identity of graph points, with endpoint coordinates identified with
  /// the corresponding vertex on every incident edge.
  bool same_point(const GraphPoint& a, const GraphPoint& b, double tol = 1e-12) const {
    auto va = vertex_at(a, tol);
    auto vb = vertex_at(b, tol);
    if (va || vb) return va && vb && *va == *vb;
    return a.edge == b.edge && std::abs(a.s - b.s) <= tol;
  }

  std::vector<std::size_t> leaves() const {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < names_.size(); ++v)
      if (degree(v) == 1) out.push_back(v);
    return out;
  }

 private:
  void validate() const {
    for (const auto& e : edges_) {
      if (!std::isfinite(e.length) || e.length < config_.min_edge_length)
        fail(ErrorKind::EdgeTooShort, "edge '" + e.name + "' has length " + std::to_string(e.length) +
                                          " below L_min = " + std::to_string(config_.min_edge_length));
    }
    for (std::size_t v = 0; v < names_.size(); ++v) {
      if (degree(v) > config_.max_degree)
        fail(ErrorKind::DegreeTooLarge, "vertex '" + names_[v] + "' has degree " + std::to_string(degree(v)));
    }
    if (names_.empty()) fail(ErrorKind::DisconnectedGraph, "graph has no vertices");
    std::vector<char> seen(names_.size(), 0);
    std::queue<std::size_t> todo;
    todo.push(0);
    seen[0] = 1;
    while (!todo.empty()) {
      auto v = todo.front();
      todo.pop();
      for (const auto& end : incident_[v]) {
        const auto& ed = edges_[end.edge];
        auto w = end.at_start ? ed.to : ed.from;
        if (!seen[w]) {
          seen[w] = 1;
          todo.push(w);
        }
      }
    }
    for (std::size_t v = 0; v < names_.size(); ++v)
      if (!seen[v]) fail(ErrorKind::DisconnectedGraph, "vertex '" + names_[v] + "' is not reachable");
  }

  std::vector<std::string> names_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeEnd>> incident_;
  GraphConfig config_;
};

inline MetricGraph build_graph(const GraphSpec& spec, GraphConfig config = {}) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t v = 0; v < spec.vertices.size(); ++v) {
    if (!index.emplace(spec.vertices[v], v).second)
      fail(ErrorKind::InvalidArgument, "duplicate vertex '" + spec.vertices[v] + "'");
  }
  std::vector<Edge> edges;
  edges.reserve(spec.edges.size());
  for (const auto& es : spec.edges) {
    auto u = index.find(es.from);
    auto w = index.find(es.to);
    if (u == index.end() || w == index.end())
      fail(ErrorKind::InvalidArgument, "edge '" + es.name + "' references an unknown vertex");
    edges.push_back({es.name, u->second, w->second, es.length});
  }
  return MetricGraph(spec.vertices, std::move(edges), config);
}

/// Two copies of `g` glued at their leaves. Edge `e + m` of the result is the
/// copy of edge `e`; vertex names of the second copy carry a trailing `'`.
/// A leafless graph is returned unchanged.
inline MetricGraph double_leaves(const MetricGraph& g) {
  const auto leaf_list = g.leaves();
  if (leaf_list.empty()) return g;
  std::vector<char> is_leaf(g.num_vertices(), 0);
  for (auto v : leaf_list) is_leaf[v] = 1;

  std::vector<std::string> names = g.vertex_names();
  std::vector<std::size_t> copy_of(g.num_vertices());
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    if (is_leaf[v]) {
      copy_of[v] = v;
    } else {
      copy_of[v] = names.size();
      names.push_back(g.vertex_name(v) + "'");
    }
  }
  std::vector<Edge> edges = g.edges();
  for (const auto& e : g.edges())
    edges.push_back({e.name + "'", copy_of[e.from], copy_of[e.to], e.length});
  return MetricGraph(std::move(names), std::move(edges), g.config());
}

}  // namespace qgland

#endif  // QGLAND_GRAPH_HPP
