#ifndef QGLAND_ENVELOPE_HPP
#define QGLAND_ENVELOPE_HPP

#include <qgland/graph.hpp>
#include <qgland/spectral.hpp>

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qgland {

/// Upper bound on one edge sub-interval.
struct EnvelopePiece {
  std::size_t edge = 0;
  double s0 = 0.0;
  double s1 = 0.0;
  std::function<double(double)> value;
};

/// Pointwise upper bound |psi| <= Upsilon on a validity region, with the
/// measured inputs and constants that went into it.
struct Envelope {
  std::string method;
  std::vector<EnvelopePiece> pieces;
  std::map<std::string, double> provenance;
  std::vector<std::string> notes;

  bool covers(const GraphPoint& x, double tol = 1e-12) const {
    for (const auto& p : pieces)
      if (p.edge == x.edge && x.s >= p.s0 - tol && x.s <= p.s1 + tol) return true;
    return false;
  }

  /// Smallest value among pieces covering x; nullopt outside the region.
  std::optional<double> at(const GraphPoint& x, double tol = 1e-12) const {
    std::optional<double> best;
    for (const auto& p : pieces) {
      if (p.edge != x.edge || x.s < p.s0 - tol || x.s > p.s1 + tol) continue;
      double v = p.value(std::clamp(x.s, p.s0, p.s1));
      if (!best || v < *best) best = v;
    }
    return best;
  }

  std::vector<EdgeInterval> validity() const {
    std::vector<EdgeInterval> out;
    for (const auto& p : pieces) out.push_back({p.edge, p.s0, p.s1});
    return out;
  }

  void add(std::size_t edge, double s0, double s1, std::function<double(double)> f) {
    if (s1 < s0) std::swap(s0, s1);
    pieces.push_back({edge, s0, s1, std::move(f)});
  }
};

/// Constant envelope on the whole graph.
inline Envelope constant_envelope(const MetricGraph& g, double c, std::string method) {
  Envelope env;
  env.method = std::move(method);
  for (std::size_t e = 0; e < g.num_edges(); ++e) env.add(e, 0.0, g.length(e), [c](double) { return c; });
  return env;
}

/// Pointwise minimum of several envelopes, defined where any of them is.
inline Envelope min_envelope(const std::vector<Envelope>& parts, std::string method = "min") {
  Envelope env;
  env.method = std::move(method);
  for (const auto& p : parts) {
    for (const auto& piece : p.pieces) env.pieces.push_back(piece);
    for (const auto& [k, v] : p.provenance) env.provenance[p.method + "." + k] = v;
  }
  return env;
}

}  // namespace qgland

#endif  // QGLAND_ENVELOPE_HPP
