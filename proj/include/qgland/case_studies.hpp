#ifndef QGLAND_CASE_STUDIES_HPP
#define QGLAND_CASE_STUDIES_HPP

#include <qgland/error.hpp>
#include <qgland/graph.hpp>
#include <qgland/potential.hpp>
#include <qgland/spectral.hpp>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

namespace qgland {

struct CaseStudy {
  std::string name;
  MetricGraph graph;
  PotentialField potential;
  std::map<std::string, double> parameters;
  /// Eigenvalues known in closed form or from a secular equation.
  std::vector<double> reference_energies;
  /// Internal energy = stated energy + shift (potentials are kept >= 0).
  double energy_shift = 0.0;
};

namespace detail {

inline double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline double toms748_root(const std::function<double(double)>& f, double a, double b) {
  boost::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  auto r = boost::math::tools::toms748_solve(f, a, b, tol, iters);
  return 0.5 * (r.first + r.second);
}

/// Even solution of -y'' + 2q(1 + cos 2x) y = E y with y(0) = 1, y'(0) = 0,
/// evaluated at the (nonnegative, sorted) abscissae xs.
inline std::vector<std::array<double, 2>> even_mathieu(double q, double E, const std::vector<double>& xs) {
  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 2>;
  auto rhs = [&](const State& y, State& dy, double x) {
    dy[0] = y[1];
    dy[1] = (2.0 * q * (1.0 + std::cos(2.0 * x)) - E) * y[0];
  };
  std::vector<State> out;
  out.reserve(xs.size());
  State y{1.0, 0.0};
  std::vector<double> times;
  times.push_back(0.0);
  for (double x : xs)
    if (x > times.back()) times.push_back(x);
  std::vector<State> at;
  auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_fehlberg78<State>());
  ode::integrate_times(stepper, rhs, y, times.begin(), times.end(), 1e-3,
                       [&](const State& s, double) { at.push_back(s); });
  std::size_t k = 0;
  for (double x : xs) {
    while (k + 1 < times.size() && times[k] < x) ++k;
    out.push_back(at[k]);
  }
  return out;
}

}  // namespace detail

/// Circle of length L, V = 0. Eigenvalues (2 pi n / L)^2.
inline CaseStudy circle_free(double L = 2.0 * std::numbers::pi) {
  if (!(L > 0.0)) fail(ErrorKind::BadParameters, "circle length must be positive");
  CaseStudy cs{"circle-free", build_graph({{"O"}, {{"c", "O", "O", L}}}), {}, {{"L", L}}, {}, 0.0};
  cs.potential = PotentialField::zero(cs.graph);
  for (int n = 0; n < 6; ++n) {
    double w = 2.0 * std::numbers::pi * n / L;
    cs.reference_energies.push_back(w * w);
    if (n > 0) cs.reference_energies.push_back(w * w);
  }
  return cs;
}

/// Chain of `circles` circles of length 2 pi / k, each split into two arcs at
/// nodal vertices P_j, Q_j; connectors Q_j -> P_{j+1}. V = 0.
inline CaseStudy flower(int k = 2, int circles = 3, double connector = 1.0) {
  if (k < 1 || circles < 1 || !(connector > 0.0)) fail(ErrorKind::BadParameters, "flower needs k, circles >= 1");
  GraphSpec s;
  const double arc = std::numbers::pi / k;
  for (int j = 0; j < circles; ++j) {
    s.vertices.push_back("P" + std::to_string(j));
    s.vertices.push_back("Q" + std::to_string(j));
  }
  for (int j = 0; j < circles; ++j) {
    auto P = "P" + std::to_string(j), Q = "Q" + std::to_string(j);
    s.edges.push_back({"a" + std::to_string(j), P, Q, arc});
    s.edges.push_back({"b" + std::to_string(j), Q, P, arc});
    if (j + 1 < circles) s.edges.push_back({"c" + std::to_string(j), Q, "P" + std::to_string(j + 1), connector});
  }
  CaseStudy cs{"flower", build_graph(s), {}, {{"k", double(k)}, {"circles", double(circles)}, {"connector", connector}},
               {double(k) * k}, 0.0};
  cs.potential = PotentialField::zero(cs.graph);
  return cs;
}

/// mu_j sin(k x) on circle j, zero on connectors; E = k^2. Not normalized.
inline Eigenpair flower_eigenfunction(const CaseStudy& cs, const std::vector<double>& mu, std::size_t cells_per_edge) {
  const double k = cs.parameters.at("k");
  const auto& g = cs.graph;
  std::vector<std::size_t> cells(g.num_edges(), cells_per_edge);
  return sample_function(g, k * k, cells, [&](std::size_t e, double s) -> std::pair<double, double> {
    const auto& name = g.edge(e).name;
    auto j = static_cast<std::size_t>(std::stoul(name.substr(1)));
    double m = j < mu.size() ? mu[j] : 1.0;
    if (name[0] == 'a') return {m * std::sin(k * s), m * k * std::cos(k * s)};
    if (name[0] == 'b') return {-m * std::sin(k * s), -m * k * std::cos(k * s)};
    return {0.0, 0.0};
  });
}

/// Small circle with V = E at O, edge O-P of length a with V = 0, and a long
/// barrier P-Q with V = E + kappa^2 truncated at `trunc`; kappa = sqrt(E)
/// tan(sqrt(E) a) makes the ground state constant on the circle.
inline CaseStudy lasso_truncated(double E = 1.0, double a = 0.5, double circle = 0.5, double trunc = 24.0) {
  const double k = std::sqrt(E);
  if (!(E > 0.0) || !(a > 0.0) || k * a >= std::numbers::pi / 2 || !(circle > 0.0) || !(trunc > 0.0))
    fail(ErrorKind::BadParameters, "lasso needs E > 0 and sqrt(E) a < pi/2");
  const double kappa = k * std::tan(k * a);
  auto g = build_graph({{"O", "P", "Q"}, {{"circle", "O", "O", circle}, {"well", "O", "P", a}, {"barrier", "P", "Q", trunc}}});
  PotentialField V(g, {potential::Constant{E}, potential::Constant{0.0}, potential::Constant{E + kappa * kappa}});
  return {"lasso-truncated", g, V, {{"E", E}, {"a", a}, {"circle", circle}, {"trunc", trunc}, {"kappa", kappa}}, {E}, 0.0};
}

/// V = sin 2x on a circle of length pi, shifted by +1. The vertex sits at
/// x = -pi/4 and the edge coordinate is s = x + pi/4, so V = 1 - cos 2s.
inline CaseStudy sine_circle() {
  auto g = build_graph({{"O"}, {{"c", "O", "O", std::numbers::pi}}});
  PotentialField V(g, {potential::Cosine{1.0, -1.0, 2.0, 0.0}});
  return {"sine-circle", g, V, {{"x_at_vertex", -std::numbers::pi / 4}}, {}, 1.0};
}

/// n parallel edges A-B of length 2 with V = 0 (|x| <= 1), and outer edges
/// L-A, B-R of length `outer` with V = M.
inline CaseStudy square_well_star(int n = 1, double M = 25.0, double outer = 8.0) {
  if (n < 1 || !(M > 0.0) || !(outer > 0.0)) fail(ErrorKind::BadParameters, "square well needs n >= 1, M > 0");
  GraphSpec s{{"L", "A", "B", "R"}, {{"outL", "L", "A", outer}}};
  for (int i = 0; i < n; ++i) s.edges.push_back({"w" + std::to_string(i), "A", "B", 2.0});
  s.edges.push_back({"outR", "B", "R", outer});
  auto g = build_graph(s);
  std::vector<potential::Descriptor> d(g.num_edges(), potential::Constant{0.0});
  d.front() = potential::Constant{M};
  d.back() = potential::Constant{M};
  PotentialField V(g, d);
  auto f = [&](double E) { return std::tan(std::sqrt(E)) - std::sqrt(M / E - 1.0) / n; };
  double hi = std::min(M, std::numbers::pi * std::numbers::pi / 4) * (1.0 - 1e-14);
  double E0 = detail::toms748_root(f, 1e-12, hi);
  return {"square-well-star", g, V, {{"n", double(n)}, {"M", M}, {"outer", outer}}, {E0}, 0.0};
}

/// Even ground state: cos(sqrt(E) x) inside, cos(sqrt E) e^{-kappa(|x|-1)}
/// outside (truncated). Normalized.
inline Eigenpair square_well_eigenfunction(const CaseStudy& cs, std::size_t cells_per_unit) {
  const double E = cs.reference_energies.at(0), M = cs.parameters.at("M");
  const double k = std::sqrt(E), kappa = std::sqrt(M - E);
  const auto& g = cs.graph;
  std::vector<std::size_t> cells(g.num_edges());
  for (std::size_t e = 0; e < g.num_edges(); ++e)
    cells[e] = static_cast<std::size_t>(std::ceil(g.length(e) * cells_per_unit));
  const double c1 = std::cos(k);
  const auto last = g.num_edges() - 1;
  auto ep = sample_function(g, E, cells, [&](std::size_t e, double s) -> std::pair<double, double> {
    if (e == 0) {
      double t = g.length(0) - s;  // distance from A
      return {c1 * std::exp(-kappa * t), kappa * c1 * std::exp(-kappa * t)};
    }
    if (e == last) return {c1 * std::exp(-kappa * s), -kappa * c1 * std::exp(-kappa * s)};
    double x = s - 1.0;
    return {std::cos(k * x), -k * std::sin(k * x)};
  });
  normalize(ep);
  return ep;
}

/// Circle of length 2 pi with V = 2q(1 + cos 2x), x the edge coordinate.
inline CaseStudy mathieu_circle(double q = 10.0) {
  if (!(q >= 0.0)) fail(ErrorKind::BadParameters, "q must be nonnegative");
  auto g = build_graph({{"O"}, {{"c", "O", "O", 2.0 * std::numbers::pi}}});
  PotentialField V(g, {potential::Cosine{2.0 * q, 2.0 * q, 2.0, 0.0}});
  return {"mathieu-circle", g, V, {{"q", q}}, {}, 0.0};
}

/// Regular tetrahedron, edges of length 2 pi. Edges B_i -> T carry the
/// constant V0 = E + kappa^2; the bottom triangle carries 2q(1 + cos 2s)
/// (x = s - pi is zero at the edge centre). kappa solves
/// kappa tanh(2 pi kappa) = -2 y'(pi) / y(pi) for the even Mathieu solution y.
inline CaseStudy tetrahedron(double q = 10.0, double E = 72.0) {
  if (!(q >= 0.0) || !(E > 0.0)) fail(ErrorKind::BadParameters, "tetrahedron needs q >= 0, E > 0");
  const double L = 2.0 * std::numbers::pi;
  auto yp = detail::even_mathieu(q, E, {std::numbers::pi}).front();
  const double rhs = -2.0 * yp[1] / yp[0];
  if (!(rhs > 0.0) || !std::isfinite(rhs))
    fail(ErrorKind::BadParameters, "no hyperbolic-cosine matching for these (q, E)");
  double hi = 1.0;
  while (hi * std::tanh(L * hi) < rhs) hi *= 2.0;
  const double kappa = detail::toms748_root([&](double k) { return k * std::tanh(L * k) - rhs; }, 0.0, hi);
  auto g = build_graph({{"T", "B0", "B1", "B2"},
                        {{"t0", "B0", "T", L}, {"t1", "B1", "T", L}, {"t2", "B2", "T", L},
                         {"m0", "B0", "B1", L}, {"m1", "B1", "B2", L}, {"m2", "B2", "B0", L}}});
  const double V0 = E + kappa * kappa;
  PotentialField V(g, {potential::Constant{V0}, potential::Constant{V0}, potential::Constant{V0},
                       potential::Cosine{2.0 * q, 2.0 * q, 2.0, 0.0}, potential::Cosine{2.0 * q, 2.0 * q, 2.0, 0.0},
                       potential::Cosine{2.0 * q, 2.0 * q, 2.0, 0.0}});
  return {"tetrahedron", g, V, {{"q", q}, {"E", E}, {"kappa", kappa}, {"V0", V0}}, {E}, 0.0};
}

/// The symmetric eigenfunction of `tetrahedron`, normalized.
inline Eigenpair tetrahedron_eigenfunction(const CaseStudy& cs, std::size_t cells_per_edge) {
  const double q = cs.parameters.at("q"), E = cs.parameters.at("E"), kappa = cs.parameters.at("kappa");
  const double L = 2.0 * std::numbers::pi, pi = std::numbers::pi;
  const auto& g = cs.graph;
  const double h = L / static_cast<double>(cells_per_edge);
  // |x| = |s - pi| on the sample grid
  std::vector<double> xs;
  for (std::size_t j = 0; j <= cells_per_edge; ++j) {
    double x = std::abs(h * j - pi);
    xs.push_back(x);
  }
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  auto ys = detail::even_mathieu(q, E, sorted);
  auto lookup = [&](double x) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
    return ys[static_cast<std::size_t>(it - sorted.begin())];
  };
  const auto ypi = detail::even_mathieu(q, E, {pi}).front();
  const double D = ypi[0] / std::cosh(kappa * L);
  std::vector<std::size_t> cells(g.num_edges(), cells_per_edge);
  auto ep = sample_function(g, E, cells, [&](std::size_t e, double s) -> std::pair<double, double> {
    if (e < 3) return {D * std::cosh(kappa * (L - s)), -D * kappa * std::sinh(kappa * (L - s))};
    double x = s - pi;
    auto y = lookup(std::abs(x));
    return {y[0], x < 0 ? -y[1] : y[1]};
  });
  normalize(ep);
  return ep;
}

/// Dispatch by name with a parameter map; unknown names or bad values give
/// BadParameters.
inline CaseStudy build_case_study(const std::string& name, const std::map<std::string, double>& p = {}) {
  using detail::param;
  if (name == "circle-free") return circle_free(param(p, "L", 2.0 * std::numbers::pi));
  if (name == "flower")
    return flower(static_cast<int>(param(p, "k", 2)), static_cast<int>(param(p, "circles", 3)), param(p, "connector", 1.0));
  if (name == "lasso-truncated")
    return lasso_truncated(param(p, "E", 1.0), param(p, "a", 0.5), param(p, "circle", 0.5), param(p, "trunc", 24.0));
  if (name == "sine-circle") return sine_circle();
  if (name == "square-well-star")
    return square_well_star(static_cast<int>(param(p, "n", 1)), param(p, "M", 25.0), param(p, "outer", 8.0));
  if (name == "mathieu-circle") return mathieu_circle(param(p, "q", 10.0));
  if (name == "tetrahedron") return tetrahedron(param(p, "q", 10.0), param(p, "E", 72.0));
  fail(ErrorKind::BadParameters, "unknown case study '" + name + "'");
}

}  // namespace qgland

#endif  // QGLAND_CASE_STUDIES_HPP
