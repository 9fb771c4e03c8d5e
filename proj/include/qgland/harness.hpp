#ifndef QGLAND_HARNESS_HPP
#define QGLAND_HARNESS_HPP

#include <qgland/agmon.hpp>
#include <qgland/case_studies.hpp>
#include <qgland/envelope.hpp>
#include <qgland/error.hpp>
#include <qgland/graph.hpp>
#include <qgland/local_bounds.hpp>
#include <qgland/potential.hpp>
#include <qgland/spectral.hpp>
#include <qgland/torsion.hpp>
#include <qgland/uniform.hpp>
#include <qgland/verify.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace qgland {

inline constexpr std::string_view tool_version = "0.1.0";

// ---------------------------------------------------------------- text utils

/// Shortest decimal form that reads back to the same double.
inline std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i)
    if (i == line.size() || line[i] == ',') {
      out.emplace_back(line.substr(start, i - start));
      start = i + 1;
    }
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 15];
  return s;
}

/// Write to a sibling temp file, then rename over the target.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    if (!out) fail(ErrorKind::InvalidArgument, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::InvalidArgument, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- graph spec

/// Graph plus one potential descriptor per edge, in edge order.
struct ProblemSpec {
  GraphSpec graph;
  std::vector<potential::Descriptor> potential;
};

namespace detail {
[[noreturn]] inline void parse_fail(std::size_t line, const std::string& msg) {
  fail(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + msg);
}

inline double number(std::size_t line, const std::string& tok) {
  auto v = parse_double(tok);
  if (!v || !std::isfinite(*v)) parse_fail(line, "bad number '" + tok + "'");
  return *v;
}
}  // namespace detail

/// Sections `[vertices]` (one name per line), `[edges]` (name from to length)
/// and `[potential]` (edge kind params...). Kinds: constant c | cosine a b
/// omega phi | quadratic c0 c1 c2 | sampled v0 v1 .... `#` starts a comment.
/// Edges without a potential line get V = 0.
inline ProblemSpec parse_problem(std::string_view text) {
  ProblemSpec ps;
  std::map<std::string, std::size_t> edge_index;
  std::set<std::string> vertices;
  std::map<std::size_t, potential::Descriptor> pot;
  std::string section;
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    auto tok = split_ws(raw);
    if (tok.empty()) continue;
    if (tok[0].front() == '[') {
      if (tok.size() != 1 || tok[0].back() != ']') detail::parse_fail(lineno, "malformed section header");
      section = tok[0].substr(1, tok[0].size() - 2);
      if (section != "vertices" && section != "edges" && section != "potential")
        detail::parse_fail(lineno, "unknown section '" + section + "'");
      continue;
    }
    for (const auto& t : tok)
      if (t.find(',') != std::string::npos) detail::parse_fail(lineno, "commas are not allowed");
    if (section == "vertices") {
      if (tok.size() != 1) detail::parse_fail(lineno, "expected one vertex name");
      if (!vertices.insert(tok[0]).second) detail::parse_fail(lineno, "duplicate vertex '" + tok[0] + "'");
      ps.graph.vertices.push_back(tok[0]);
    } else if (section == "edges") {
      if (tok.size() != 4) detail::parse_fail(lineno, "expected: name from to length");
      for (int i : {1, 2})
        if (!vertices.count(tok[i])) detail::parse_fail(lineno, "unknown vertex '" + tok[i] + "'");
      if (edge_index.count(tok[0])) detail::parse_fail(lineno, "duplicate edge '" + tok[0] + "'");
      edge_index[tok[0]] = ps.graph.edges.size();
      ps.graph.edges.push_back({tok[0], tok[1], tok[2], detail::number(lineno, tok[3])});
    } else if (section == "potential") {
      if (tok.size() < 2) detail::parse_fail(lineno, "expected: edge kind params");
      auto it = edge_index.find(tok[0]);
      if (it == edge_index.end()) detail::parse_fail(lineno, "unknown edge '" + tok[0] + "'");
      if (pot.count(it->second)) detail::parse_fail(lineno, "duplicate potential for '" + tok[0] + "'");
      std::vector<double> p;
      for (std::size_t i = 2; i < tok.size(); ++i) p.push_back(detail::number(lineno, tok[i]));
      const auto& kind = tok[1];
      auto need = [&](std::size_t n) {
        if (p.size() != n) detail::parse_fail(lineno, kind + " takes " + std::to_string(n) + " parameters");
      };
      if (kind == "constant") {
        need(1);
        pot[it->second] = potential::Constant{p[0]};
      } else if (kind == "cosine") {
        need(4);
        pot[it->second] = potential::Cosine{p[0], p[1], p[2], p[3]};
      } else if (kind == "quadratic") {
        need(3);
        pot[it->second] = potential::Quadratic{p[0], p[1], p[2]};
      } else if (kind == "sampled") {
        if (p.size() < 2) detail::parse_fail(lineno, "sampled takes at least two values");
        pot[it->second] = potential::Sampled{p};
      } else {
        detail::parse_fail(lineno, "unknown potential kind '" + kind + "'");
      }
    } else {
      detail::parse_fail(lineno, "content outside a section");
    }
  }
  if (ps.graph.vertices.empty()) fail(ErrorKind::ParseError, "no vertices");
  if (ps.graph.edges.empty()) fail(ErrorKind::ParseError, "no edges");
  for (std::size_t e = 0; e < ps.graph.edges.size(); ++e) {
    auto it = pot.find(e);
    ps.potential.push_back(it == pot.end() ? potential::Descriptor{potential::Constant{0.0}} : it->second);
  }
  return ps;
}

inline std::string serialize_problem(const ProblemSpec& ps) {
  std::string out = "[vertices]\n";
  for (const auto& v : ps.graph.vertices) out += v + "\n";
  out += "[edges]\n";
  for (const auto& e : ps.graph.edges) out += e.name + " " + e.from + " " + e.to + " " + fmt(e.length) + "\n";
  out += "[potential]\n";
  for (std::size_t e = 0; e < ps.graph.edges.size(); ++e) {
    out += ps.graph.edges[e].name + " ";
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, potential::Constant>) {
            out += "constant " + fmt(d.c);
          } else if constexpr (std::is_same_v<T, potential::Cosine>) {
            out += "cosine " + fmt(d.a) + " " + fmt(d.b) + " " + fmt(d.omega) + " " + fmt(d.phi);
          } else if constexpr (std::is_same_v<T, potential::Quadratic>) {
            out += "quadratic " + fmt(d.c0) + " " + fmt(d.c1) + " " + fmt(d.c2);
          } else {
            out += "sampled";
            for (double v : d.values) out += " " + fmt(v);
          }
        },
        ps.potential[e]);
    out += "\n";
  }
  return out;
}

inline ProblemSpec problem_spec(const MetricGraph& g, const PotentialField& V) {
  ProblemSpec ps;
  ps.graph.vertices = g.vertex_names();
  for (const auto& e : g.edges()) ps.graph.edges.push_back({e.name, g.vertex_name(e.from), g.vertex_name(e.to), e.length});
  for (std::size_t e = 0; e < g.num_edges(); ++e) ps.potential.push_back(V.descriptor(e));
  return ps;
}

// ---------------------------------------------------------------- problems

/// A loaded problem: a named case study or a parsed spec file.
struct Problem {
  std::string name;
  MetricGraph graph;
  PotentialField potential;
  std::map<std::string, double> parameters;
  std::vector<double> reference_energies;
  double energy_shift = 0.0;
  std::string spec_text;  // canonical serialization
};

inline bool is_case_study(const std::string& name) {
  static const std::set<std::string> names{"circle-free",      "flower",         "lasso-truncated", "sine-circle",
                                           "square-well-star", "mathieu-circle", "tetrahedron"};
  return names.count(name) > 0;
}

inline Problem load_problem(const std::string& target, const std::map<std::string, double>& params = {},
                            GraphConfig config = {}) {
  Problem p;
  if (is_case_study(target)) {
    auto cs = build_case_study(target, params);
    p.name = cs.name;
    p.graph = cs.graph;
    p.potential = cs.potential;
    p.parameters = cs.parameters;
    p.reference_energies = cs.reference_energies;
    p.energy_shift = cs.energy_shift;
  } else {
    if (!std::filesystem::exists(target))
      fail(ErrorKind::BadParameters, "'" + target + "' is neither a case study nor a spec file");
    auto ps = parse_problem(read_file(target));
    p.name = std::filesystem::path(target).stem().string();
    p.graph = build_graph(ps.graph, config);
    p.potential = PotentialField(p.graph, ps.potential);
    p.parameters = params;
  }
  p.spec_text = serialize_problem(problem_spec(p.graph, p.potential));
  return p;
}

// ---------------------------------------------------------------- archives

inline std::string eigenvalues_csv(const std::vector<Eigenpair>& pairs, const std::vector<double>& extrapolated = {}) {
  std::string out = extrapolated.empty() ? "index,E,residual\n" : "index,E,E_extrapolated,residual\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out += std::to_string(i) + "," + fmt(pairs[i].E);
    if (!extrapolated.empty()) out += "," + fmt(extrapolated.at(i));
    out += "," + fmt(pairs[i].residual) + "\n";
  }
  return out;
}

/// Node values and derivatives of an L2-normalized eigenfunction.
inline std::string eigenfunction_csv(const MetricGraph& g, Eigenpair psi) {
  normalize(psi);
  std::string out = "edge,s,value,derivative\n";
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const auto& es = psi.edges[e];
    for (std::size_t j = 0; j < es.psi.size(); ++j)
      out += g.edge(e).name + "," + fmt(es.h * static_cast<double>(j)) + "," + fmt(es.psi[j]) + "," +
             fmt(es.dpsi[j]) + "\n";
  }
  return out;
}

namespace detail {
inline std::size_t edge_by_name(const MetricGraph& g, const std::string& name) {
  auto e = g.find_edge(name);
  if (!e) fail(ErrorKind::GridMismatch, "unknown edge '" + name + "'");
  return *e;
}

inline std::vector<std::vector<std::string>> csv_rows(std::string_view text, std::size_t min_cols,
                                                      std::vector<std::string>* header) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in{std::string(text)};
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_csv(line);
    if (lineno == 1) {
      if (header) *header = cols;
      continue;
    }
    if (cols.size() < min_cols) parse_fail(lineno, "expected at least " + std::to_string(min_cols) + " columns");
    rows.push_back(std::move(cols));
  }
  return rows;
}
}  // namespace detail

/// Reads `eigenfunction_csv` output back; grids must be uniform and span
/// each edge.
inline Eigenpair read_eigenfunction(const MetricGraph& g, std::string_view text, double E) {
  Eigenpair ep;
  ep.E = E;
  ep.edges.resize(g.num_edges());
  std::vector<std::vector<std::array<double, 3>>> rows(g.num_edges());
  for (const auto& c : detail::csv_rows(text, 4, nullptr)) {
    const auto e = detail::edge_by_name(g, c[0]);
    std::array<double, 3> r{};
    for (int i = 0; i < 3; ++i) r[i] = detail::number(0, c[i + 1]);
    rows[e].push_back(r);
  }
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    auto& rs = rows[e];
    std::sort(rs.begin(), rs.end());
    if (rs.size() < 2) fail(ErrorKind::GridMismatch, "edge " + g.edge(e).name + " has fewer than two samples");
    const double L = g.length(e), h = L / static_cast<double>(rs.size() - 1);
    for (std::size_t j = 0; j < rs.size(); ++j)
      if (std::abs(rs[j][0] - h * static_cast<double>(j)) > 1e-9 * std::max(1.0, L))
        fail(ErrorKind::GridMismatch, "non-uniform grid on edge " + g.edge(e).name);
    auto& es = ep.edges[e];
    es.h = h;
    for (const auto& r : rs) {
      es.psi.push_back(r[1]);
      es.dpsi.push_back(r[2]);
    }
  }
  return ep;
}

// ---------------------------------------------------------------- envelopes

inline const std::vector<std::string>& bound_methods() {
  static const std::vector<std::string> m{"auto",   "agmon",    "torsion",     "davies",
                                          "window", "gronwall", "oscillation", "uniform"};
  return m;
}

struct BoundOptions {
  double tau = -1.0;  // transition threshold; negative means 0.05 max(1, E)
  RegimeThresholds thresholds;
};

namespace detail {
inline const Eigenpair& need_psi(const Eigenpair* psi, const std::string& method) {
  if (!psi) fail(ErrorKind::MethodInapplicable, method + " needs an eigenfunction");
  return *psi;
}

inline Envelope collect(std::vector<Envelope> parts, const std::string& method) {
  if (parts.empty()) fail(ErrorKind::MethodInapplicable, method + " applies nowhere on this graph");
  auto env = min_envelope(parts, method);
  env.provenance.clear();
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (const auto& [k, v] : parts[i].provenance) env.provenance[std::to_string(i) + "." + k] = v;
  return env;
}

/// Interval pieces between interior local maxima of V, centred at the middle
/// of each piece's minimizing set.
inline std::vector<PieceGeometry> auto_pieces(const MetricGraph& g, const PotentialField& V) {
  std::vector<PieceGeometry> out;
  const int n = 2048;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const double L = g.length(e);
    std::vector<double> vs(n + 1);
    for (int i = 0; i <= n; ++i) vs[i] = V(e, L * i / n);
    std::vector<int> cuts{0};
    for (int i = 1; i < n; ++i)
      if (vs[i] > vs[i - 1] && vs[i] >= vs[i + 1]) cuts.push_back(i);
    cuts.push_back(n);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const int a = cuts[k], b = cuts[k + 1];
      double lo = *std::min_element(vs.begin() + a, vs.begin() + b + 1);
      const double tol = 1e-12 * (1.0 + std::abs(lo));
      int first = -1, last = -1;
      for (int i = a; i <= b; ++i)
        if (vs[i] <= lo + tol) {
          if (first < 0) first = i;
          last = i;
        }
      const double y = 0.5 * (L * first / n + L * last / n);
      out.push_back(interval_piece(g, e, L * a / n, L * b / n, y));
    }
  }
  return out;
}
}  // namespace detail

/// Torsion landscape plus maximum principle on the whole graph. Tries V as
/// given, then the gauge shift V + E (energy 2E).
inline Envelope auto_torsion_envelope(const MetricGraph& g, const PotentialField& V, const Eigenpair& psi) {
  auto geoms = detail::auto_pieces(g, V);
  std::string last;
  for (double sigma : {0.0, std::max(psi.E, 1e-3)}) {
    try {
      auto Vs = sigma > 0.0 ? V.shifted(g, sigma) : V;
      std::vector<TorsionPiece> pieces;
      for (const auto& geom : geoms) pieces.push_back(make_piece(Vs, geom));
      auto L = assemble_landscape(g, Vs, pieces);
      auto env = max_principle_envelope(L, psi.E + sigma, psi);
      env.provenance["shift"] = sigma;
      return env;
    } catch (const Error& err) {
      last = err.what();
    }
  }
  fail(ErrorKind::MethodInapplicable, "no torsion landscape could be assembled: " + last);
}

/// One bound family on the whole graph. psi may be null for methods that
/// only need E (uniform, agmon).
inline Envelope build_envelope(const MetricGraph& g, const PotentialField& V, double E, const Eigenpair* psi,
                               const std::string& method, const BoundOptions& opt = {}) {
  if (method == "uniform") return uniform_envelope(g, E, V.min_value());
  if (method == "agmon") {
    auto part = classify_regions(g, V, E);
    if (part.tunneling.empty()) fail(ErrorKind::MethodInapplicable, "agmon needs a tunneling region (V > E)");
    return tunneling_envelope(g, V, E, part, -1.0, psi);
  }
  if (method == "torsion") return auto_torsion_envelope(g, V, detail::need_psi(psi, method));
  if (method == "davies") {
    const auto& p = detail::need_psi(psi, method);
    std::vector<Envelope> parts;
    for (std::size_t e = 0; e < g.num_edges(); ++e)
      if (V.range(e, 0.0, g.length(e)).first < p.E) parts.push_back(davies_envelope(g, V, p, e));
    return detail::collect(std::move(parts), method);
  }
  if (method == "oscillation") {
    const auto& p = detail::need_psi(psi, method);
    std::vector<Envelope> parts;
    for (std::size_t e = 0; e < g.num_edges(); ++e)
      if (auto sub = oscillation_subinterval(V, p.E, e, 0.0, g.length(e)))
        parts.push_back(oscillation_envelope(g, V, p, e, sub->first, sub->second));
    return detail::collect(std::move(parts), method);
  }
  if (method == "window") {
    const double tau = opt.tau > 0.0 ? opt.tau : 0.05 * std::max(1.0, E);
    std::vector<Envelope> parts;
    for (const auto& w : transition_windows(g, V, E, tau)) {
      const double ell = std::min(0.5 * g.shortest_edge(), 0.25 * w.length());
      if (!(ell > 0.0)) continue;
      try {
        parts.push_back(window_envelope(g, V, E, {w}, ell, psi));
      } catch (const Error&) {
      }
    }
    return detail::collect(std::move(parts), method);
  }
  if (method == "gronwall") {
    const auto& p = detail::need_psi(psi, method);
    std::vector<Envelope> parts;
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      const double mid = 0.5 * g.length(e);
      parts.push_back(gronwall_envelope(g, V, p, e, mid, 0.0));
      parts.push_back(gronwall_envelope(g, V, p, e, mid, g.length(e)));
    }
    return detail::collect(std::move(parts), method);
  }
  fail(ErrorKind::BadParameters, "unknown method '" + method + "'");
}

struct EnvelopeRow {
  std::size_t edge = 0;
  double s = 0.0;
  double value = 0.0;
  std::string method;
  std::string regime;
};

/// Samples an envelope on `per_edge` uniform cells of every edge it covers.
inline std::vector<EnvelopeRow> sample_envelope(const MetricGraph& g, const Envelope& env, int per_edge,
                                                const std::string& regime = "") {
  std::vector<EnvelopeRow> rows;
  for (std::size_t e = 0; e < g.num_edges(); ++e)
    for (int i = 0; i <= per_edge; ++i) {
      const double s = g.length(e) * i / per_edge;
      if (auto v = env.at({e, s})) rows.push_back({e, s, *v, env.method, regime});
    }
  return rows;
}

/// Regime-dispatched envelope: at each sample the smallest envelope among the
/// families recommended for its regime and the uniform bound.
inline std::vector<EnvelopeRow> auto_envelope(const MetricGraph& g, const PotentialField& V, double E,
                                              const Eigenpair* psi, int per_edge, const BoundOptions& opt = {}) {
  auto map = select_regime(g, V, E, opt.thresholds);
  std::map<std::string, std::optional<Envelope>> cache;
  auto family = [&](const std::string& name) -> const std::optional<Envelope>& {
    const std::string base = name == "torsion-agmon" ? "torsion" : name;
    auto it = cache.find(base);
    if (it != cache.end()) return it->second;
    std::optional<Envelope> env;
    try {
      env = build_envelope(g, V, E, psi, base, opt);
    } catch (const Error&) {
    }
    return cache.emplace(base, std::move(env)).first->second;
  };
  const auto& fallback = family("uniform");
  std::vector<EnvelopeRow> rows;
  for (std::size_t e = 0; e < g.num_edges(); ++e)
    for (int i = 0; i <= per_edge; ++i) {
      const double s = g.length(e) * i / per_edge;
      const auto regime = map.at({e, s});
      EnvelopeRow row{e, s, std::numeric_limits<double>::infinity(), "", to_string(regime)};
      for (const auto& fam : recommended_families(regime)) {
        const auto& env = family(fam);
        if (!env) continue;
        if (auto v = env->at({e, s}); v && *v < row.value) {
          row.value = *v;
          row.method = env->method;
        }
      }
      if (fallback)
        if (auto v = fallback->at({e, s}); v && *v < row.value) {
          row.value = *v;
          row.method = fallback->method;
        }
      if (!row.method.empty()) rows.push_back(row);
    }
  return rows;
}

inline std::string envelope_csv(const MetricGraph& g, const std::vector<EnvelopeRow>& rows) {
  std::string out = "edge,s,value,method,regime\n";
  for (const auto& r : rows)
    out += g.edge(r.edge).name + "," + fmt(r.s) + "," + fmt(r.value) + "," + r.method + "," + r.regime + "\n";
  return out;
}

inline std::vector<EnvelopeRow> read_envelope(const MetricGraph& g, std::string_view text) {
  std::vector<EnvelopeRow> rows;
  for (const auto& c : detail::csv_rows(text, 3, nullptr)) {
    EnvelopeRow r;
    r.edge = detail::edge_by_name(g, c[0]);
    r.s = detail::number(0, c[1]);
    r.value = detail::number(0, c[2]);
    if (c.size() > 3) r.method = c[3];
    if (c.size() > 4) r.regime = c[4];
    const double L = g.length(r.edge);
    if (r.s < -1e-9 * std::max(1.0, L) || r.s > L * (1 + 1e-9))
      fail(ErrorKind::GridMismatch, "sample s = " + fmt(r.s) + " outside edge " + c[0]);
    r.s = std::clamp(r.s, 0.0, L);
    rows.push_back(r);
  }
  return rows;
}

/// Margins value - |psi| at the envelope's own samples.
inline DominationReport check_rows(const Eigenpair& psi, const std::vector<EnvelopeRow>& rows) {
  DominationReport r;
  r.method = rows.empty() ? "" : rows.front().method;
  r.tol = 1e-6 * std::max(1.0, psi.sup_norm() / psi.norm);
  for (const auto& row : rows) {
    const double m = row.value - std::abs(psi(row.edge, row.s)) / psi.norm;
    r.grid.push_back({row.edge, row.s});
    r.margin.push_back(m);
    if (m < r.worst) {
      r.worst = m;
      r.worst_at = {row.edge, row.s};
    }
    if (m < -r.tol) r.violations.push_back({row.edge, row.s});
  }
  r.pass = r.violations.empty() && !r.grid.empty();
  return r;
}

// ---------------------------------------------------------------- manifest

/// Ordered `key = value` lines.
struct Manifest {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& k, const std::string& v) {
    for (auto& [key, val] : entries)
      if (key == k) {
        val = v;
        return;
      }
    entries.emplace_back(k, v);
  }
  void set(const std::string& k, double v) { set(k, fmt(v)); }
  std::string str() const {
    std::string out;
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
    return out;
  }
};

/// 0 pass, 1 verification failure, 2 input error, 3 numerical failure.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::StepTooCoarse:
    case ErrorKind::ConvergenceFailure:
    case ErrorKind::SupersolutionFailure:
    case ErrorKind::UnverifiedSupersolution:
    case ErrorKind::AssemblyInfeasible:
    case ErrorKind::DegenerateMinorant:
    case ErrorKind::InsufficientSpectrum:
      return 3;
    default:
      return 2;
  }
}

}  // namespace qgland

#endif  // QGLAND_HARNESS_HPP
