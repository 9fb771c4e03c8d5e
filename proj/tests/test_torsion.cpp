#include <qgland/case_studies.hpp>
#include <qgland/torsion.hpp>

#include <boost/math/quadrature/gauss.hpp>
#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "helpers.hpp"

using namespace qgland;
constexpr double pi = std::numbers::pi;

namespace {

LandscapeFunction mathieu_landscape(const CaseStudy& cs) {
  std::vector<TorsionPiece> pieces{make_piece(cs.potential, interval_piece(cs.graph, 0, 0.0, pi, pi / 2)),
                                   make_piece(cs.potential, interval_piece(cs.graph, 0, pi, 2 * pi, 1.5 * pi))};
  return assemble_landscape(cs.graph, cs.potential, pieces);
}

/// Break points of the piecewise-smooth landscape on edge e.
std::vector<double> landscape_breaks(const LandscapeFunction& L, std::size_t e) {
  std::vector<double> br;
  for (const auto& p : L.pieces)
    for (std::size_t a = 0; a < p.geom.arms.size(); ++a) {
      const auto& arm = p.geom.arms[a];
      if (arm.edge != e) continue;
      br.push_back(arm.s_lo);
      br.push_back(arm.s_hi);
      for (const auto& r : p.ramps)
        if (r.arm == a) br.push_back(r.at_hi ? arm.s_hi - r.eps : arm.s_lo + r.eps);
    }
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end(), [](double x, double y) { return std::abs(x - y) < 1e-13; }), br.end());
  return br;
}

template <class F>
double integrate_pieces(const std::vector<double>& br, F&& f) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const int sub = 64;
    for (int k = 0; k < sub; ++k) {
      double a = br[i] + (br[i + 1] - br[i]) * k / sub, b = br[i] + (br[i + 1] - br[i]) * (k + 1) / sub;
      total += boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
    }
  }
  return total;
}

/// -Phi''/Phi evaluated strictly inside a smooth cell.
double neg_log_curv(const LandscapeFunction& L, std::size_t e, double s) {
  auto r = L.eval(e, s);
  return -r[2] / r[0];
}

MetricGraph three_star() {
  return build_graph({{"C", "L0", "L1", "L2"}, {{"e0", "C", "L0", 1.0}, {"e1", "C", "L1", 1.0}, {"e2", "C", "L2", 1.0}}});
}

}  // namespace

TEST(FitMinorant, FlatPotential) {
  auto g = build_graph({{"a", "b"}, {{"e", "a", "b", 2.0}}});
  PotentialField V(g, {potential::Constant{3.5}});
  auto m = fit_minorant(V, interval_piece(g, 0, 0.0, 2.0, 1.0));
  // never worse than the flat choice b = 0, V1 = M
  EXPECT_GE(m.objective(), 0.5 * 3.5 - 1e-12);
  // for constant M the objective b + (M - b^2 u_max^2)/2 peaks at b = 1/u_max^2
  const double b_opt = std::min(1.0, std::sqrt(3.5));
  EXPECT_NEAR(m.b, b_opt, 1e-6);
  EXPECT_NEAR(m.V1, 3.5 - b_opt * b_opt, 1e-6);
  // tiny interval: the Gaussian would be too steep to fit, b stays at sqrt(M)/u_max
  auto t = fit_minorant(V, interval_piece(g, 0, 0.9, 1.1, 1.0));
  EXPECT_NEAR(t.b, std::sqrt(3.5) / 0.1, 1e-4);
  EXPECT_NEAR(t.V1, 0.0, 1e-6);
}

TEST(FitMinorant, ShiftedSquareWellRecoversB) {
  for (double b : {0.7, 1.5, 3.0}) {
    auto g = build_graph({{"a", "b"}, {{"e", "a", "b", 2.0}}});
    // b^2 ((s-1)^2 - 1) + b^2 = b^2 (s-1)^2
    PotentialField V(g, {potential::Quadratic{b * b, -2.0 * b * b, b * b}});
    auto m = fit_minorant(V, interval_piece(g, 0, 0.0, 2.0, 1.0));
    EXPECT_NEAR(m.V1, 0.0, 1e-9);
    EXPECT_NEAR(m.b, b, 1e-6 * b);
  }
}

TEST(FitMinorant, MatchesBruteForceGridSearch) {
  auto cs = mathieu_circle(10.0);
  const auto& V = cs.potential;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> start(0.0, 2.0), len(0.3, 1.5), frac(0.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    const double s0 = start(rng), s1 = s0 + len(rng), y = s0 + frac(rng) * (s1 - s0);
    auto geom = interval_piece(cs.graph, 0, s0, s1, y);
    auto m = fit_minorant(V, geom);
    // feasibility on an independent, finer grid
    double vmax = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      double s = s0 + (s1 - s0) * i / 20000;
      EXPECT_GE(V(0, s) - m.V1 - m.b * m.b * (s - y) * (s - y), -1e-10 * std::max(1.0, V(0, s)));
      vmax = std::max(vmax, V(0, s));
    }
    // exhaustive 2-D search over (b, V1)
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 1000; ++i) {
      double s = s0 + (s1 - s0) * i / 1000;
      pts.push_back({V(0, s), (s - y) * (s - y)});
    }
    double best = 0.0;
    const double bhi = 40.0;
    const int nb = 400, nv = 400;
    for (int i = 0; i <= nb; ++i) {
      const double b = bhi * i / nb;
      for (int j = nv; j >= 0; --j) {
        const double v1 = vmax * j / nv;
        bool ok = true;
        for (const auto& [v, u2] : pts)
          if (v < v1 + b * b * u2) {
            ok = false;
            break;
          }
        if (ok) {
          best = std::max(best, b + 0.5 * v1);
          break;
        }
      }
    }
    EXPECT_GE(m.objective(), best - 1e-9) << trial;
    EXPECT_LE(m.objective(), best + bhi / nb + 0.5 * vmax / nv + 1e-9) << trial;
  }
}

TEST(Amplitude, MatchesDenseGridMinimum) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> bd(0.05, 8.0), vd(0.0, 10.0), yd(0.0, 2.0);
  auto g = build_graph({{"a", "b"}, {{"e", "a", "b", 2.0}}});
  for (int trial = 0; trial < 40; ++trial) {
    QuadraticMinorant m{trial % 5 == 0 ? 0.0 : vd(rng), bd(rng)};
    const double y = trial % 2 ? 1.0 : yd(rng);
    auto geom = interval_piece(g, 0, 0.0, 2.0, y);
    auto amp = amplitude(m, geom);
    double fmin = 1e300;
    const int n = 2000000;
    for (int i = 0; i <= n; ++i) {
      double u = 2.0 * i / n - y;
      fmin = std::min(fmin, 0.5 * (m.V1 + m.b * m.b * u * u) + (m.b + m.V1) * std::exp(-0.5 * m.b * u * u));
    }
    EXPECT_NEAR(1.0 / amp.A, fmin, 1e-8 * fmin) << "V1=" << m.V1 << " b=" << m.b << " y=" << y;
    EXPECT_NEAR(amp.A0, 1.0 / (m.b + 0.5 * m.V1), 1e-15);
    EXPECT_LE(amp.A, amp.A0 * (1.0 + 1e-12));
  }
}

TEST(Amplitude, ZeroV1GivesInverseB) {
  auto g = build_graph({{"a", "b"}, {{"e", "a", "b", 2.0}}});
  for (double b : {0.3, 1.0, 5.0}) {
    auto amp = amplitude({0.0, b}, interval_piece(g, 0, 0.0, 2.0, 0.6));
    EXPECT_NEAR(amp.A, 1.0 / b, 1e-14);
  }
  // b = sqrt(E) in the shifted square well: (E + b^2) A = 2 sqrt(E)
  const double E = 2.0;
  auto amp = amplitude({0.0, std::sqrt(E)}, interval_piece(g, 0, 0.0, 2.0, 1.0));
  EXPECT_NEAR((E + E) * amp.A, 2.0 * std::sqrt(E), 1e-14);
  expect_error(ErrorKind::DegenerateMinorant, [&] { amplitude({1.0, 0.0}, interval_piece(g, 0, 0.0, 2.0, 1.0)); });
}

TEST(Assemble, SinglePieceIsIdentity) {
  auto g = build_graph({{"a", "b"}, {{"e", "a", "b", 4.0}}});
  PotentialField V(g, {potential::Quadratic{4.0 + 9.0 * 4.0, -9.0 * 4.0, 9.0}});  // 4 + 9 (s-2)^2
  auto piece = make_piece(V, interval_piece(g, 0, 1.0, 3.0, 2.0));
  auto L = assemble_landscape(g, V, {piece});
  EXPECT_TRUE(L.verified);
  EXPECT_EQ(L.c0, 0.0);
  EXPECT_EQ(L.boundary.size(), 2u);
  for (double s : {1.0, 1.7, 2.0, 2.9}) EXPECT_DOUBLE_EQ(L(0, s), piece.base(s - 2.0));
  EXPECT_GE(L.min_slack, -1e-8);
}

TEST(Assemble, MathieuTwoGaussians) {
  auto cs = mathieu_circle(10.0);
  auto L = mathieu_landscape(cs);
  ASSERT_TRUE(L.verified);
  EXPECT_TRUE(L.boundary.empty());
  for (const auto& p : L.pieces) {
    EXPECT_TRUE(p.gaussian);
    EXPECT_NEAR(p.minorant.b * p.minorant.b, 16.0 * 10.0 / (pi * pi), 1e-5);
    EXPECT_NEAR(p.minorant.V1, 0.0, 1e-9);
  }
  // C^1 across both junctions
  const auto& a = L.pieces[0];
  const auto& b = L.pieces[1];
  auto ra = a.eval(0, pi), rb = b.eval(0, pi);
  EXPECT_NEAR(ra[0] + a.c, rb[0] + b.c, 1e-12);
  EXPECT_NEAR(ra[1], 0.0, 1e-12);
  EXPECT_NEAR(rb[1], 0.0, 1e-12);
  EXPECT_NEAR(L.vertex_flux(0), 0.0, 1e-12);
  // independent check of H Upsilon >= 1 by finite differences at random points
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> sd(0.0, 2 * pi);
  const double h = 1e-4;
  for (int i = 0; i < 4000; ++i) {
    double s = std::clamp(sd(rng), 2 * h, 2 * pi - 2 * h);
    auto br = landscape_breaks(L, 0);
    bool near_break = std::any_of(br.begin(), br.end(), [&](double x) { return std::abs(x - s) < 2 * h; });
    if (near_break) continue;
    double d2 = (L(0, s + h) - 2 * L(0, s) + L(0, s - h)) / (h * h);
    EXPECT_GE(-d2 + cs.potential(0, s) * L(0, s), 1.0 - 1e-5) << s;
  }
}

TEST(Assemble, StarSuperKirchhoff) {
  auto g = three_star();
  PotentialField V(g, {potential::Quadratic{0, 0, 9}, potential::Quadratic{0, 0, 9}, potential::Quadratic{0, 0, 9}});
  auto sym = assemble_landscape(g, V, {make_piece(V, star_piece(g, 0, 1.0))});
  ASSERT_TRUE(sym.verified);
  EXPECT_TRUE(sym.boundary.empty());
  EXPECT_NEAR(sym.vertex_flux(0), 0.0, 1e-12);

  // privileged center at distance t along e0
  const double t = 0.2;
  PotentialField W(g, {potential::Quadratic{9 * t * t, -18 * t, 9}, potential::Quadratic{9 * t * t, 18 * t, 9},
                       potential::Quadratic{9 * t * t, 18 * t, 9}});
  auto piece = make_piece(W, privileged_star_piece(g, 0, 1.0, 0, t));
  auto L = assemble_landscape(g, W, {piece});
  ASSERT_TRUE(L.verified);
  const double A = L.pieces[0].A, b = L.pieces[0].minorant.b;
  const double expect = -A * b * t * std::exp(-0.5 * b * t * t);  // (2 - degree) A b t e^{-b t^2 / 2}
  EXPECT_NEAR(L.vertex_flux(0), expect, 1e-12);
  EXPECT_LT(L.vertex_flux(0), 0.0);
  // numerical outgoing derivatives agree
  const double h = 1e-6;
  double num = 0.0;
  for (std::size_t e = 0; e < 3; ++e) num += (L(e, h) - L(e, 0.0)) / h;
  EXPECT_NEAR(num, expect, 1e-4);
  // leaves get ramps that zero the derivative
  for (std::size_t e = 0; e < 3; ++e) EXPECT_NEAR(L.eval(e, 1.0)[1], 0.0, 1e-12);
}

TEST(Assemble, Failures) {
  auto cs = mathieu_circle(10.0);
  auto g = cs.graph;
  // asymmetric centers cannot be glued consistently around the loop
  std::vector<TorsionPiece> bad{make_piece(interval_piece(g, 0, 0.0, pi, 1.2), {0.0, 1.0}),
                                make_piece(interval_piece(g, 0, pi, 2 * pi, 1.5 * pi), {0.0, 1.0})};
  expect_error(ErrorKind::AssemblyInfeasible, [&] { assemble_landscape(g, cs.potential, bad); });
  // false minorant on a flat zero potential
  auto g2 = build_graph({{"a", "b"}, {{"e", "a", "b", 2.0}}});
  auto V0 = PotentialField::zero(g2);
  expect_error(ErrorKind::SupersolutionFailure,
               [&] { assemble_landscape(g2, V0, {make_piece(interval_piece(g2, 0, 0.2, 1.8, 1.0), {0.0, 2.0})}); });
  // overlapping pieces
  expect_error(ErrorKind::InvalidArgument, [&] {
    assemble_landscape(g, cs.potential,
                       {make_piece(cs.potential, interval_piece(g, 0, 0.0, 2.0, 1.0)),
                        make_piece(cs.potential, interval_piece(g, 0, 1.5, 3.0, 2.0))});
  });
}

TEST(Assemble, BoggioFormOnCircleAndStar) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto cs = mathieu_circle(10.0);
  auto L = mathieu_landscape(cs);
  auto br = landscape_breaks(L, 0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(7), b(7);
    for (int k = 0; k < 7; ++k) {
      a[k] = nd(rng) / (1 + k);
      b[k] = nd(rng) / (1 + k);
    }
    auto f = [&](double s) {
      double v = 0.0;
      for (int k = 0; k < 7; ++k) v += a[k] * std::cos(k * s) + b[k] * std::sin(k * s);
      return v;
    };
    auto fp = [&](double s) {
      double v = 0.0;
      for (int k = 0; k < 7; ++k) v += k * (-a[k] * std::sin(k * s) + b[k] * std::cos(k * s));
      return v;
    };
    double lhs = integrate_pieces(br, [&](double s) { return fp(s) * fp(s); });
    double rhs = integrate_pieces(br, [&](double s) { return f(s) * f(s) * neg_log_curv(L, 0, s); });
    double scale = std::max(1.0, std::abs(lhs));
    EXPECT_GE(lhs - rhs, -1e-6 * scale) << trial;
  }

  auto g = three_star();
  const double t = 0.2;
  PotentialField W(g, {potential::Quadratic{9 * t * t, -18 * t, 9}, potential::Quadratic{9 * t * t, 18 * t, 9},
                       potential::Quadratic{9 * t * t, 18 * t, 9}});
  auto S = assemble_landscape(g, W, {make_piece(W, privileged_star_piece(g, 0, 1.0, 0, t))});
  for (int trial = 0; trial < 20; ++trial) {
    const double f0 = nd(rng);
    std::vector<std::array<double, 4>> c(3);
    for (auto& ce : c)
      for (auto& x : ce) x = nd(rng);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t e = 0; e < 3; ++e) {
      auto f = [&](double s) {
        double v = f0;
        for (int k = 0; k < 4; ++k) v += c[e][k] * std::sin((k + 1) * s);
        return v;
      };
      auto fp = [&](double s) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += c[e][k] * (k + 1) * std::cos((k + 1) * s);
        return v;
      };
      auto bre = landscape_breaks(S, e);
      lhs += integrate_pieces(bre, [&](double s) { return fp(s) * fp(s); });
      rhs += integrate_pieces(bre, [&](double s) { return f(s) * f(s) * neg_log_curv(S, e, s); });
    }
    EXPECT_GE(lhs - rhs, -1e-6 * std::max(1.0, std::abs(lhs))) << trial;
  }
}

TEST(MaxPrinciple, MathieuGroundState) {
  auto cs = mathieu_circle(10.0);
  auto L = mathieu_landscape(cs);
  auto psi = ground(cs, 2 * pi / 2048);
  auto env = max_principle_envelope(L, psi.E, psi);
  EXPECT_EQ(env.provenance.at("boundary_term"), 0.0);
  expect_dominates(env, psi);
}

TEST(MaxPrinciple, OddMathieuVanishingBoundary) {
  auto cs = mathieu_circle(10.0);
  auto pairs = solve_eigs(cs.graph, cs.potential, 2 * pi / 2048, 2);
  const auto& odd = std::abs(pairs[0](0, 0.0)) < std::abs(pairs[1](0, 0.0)) ? pairs[0] : pairs[1];
  ASSERT_LT(std::abs(odd(0, 0.0)), 1e-8);
  auto L = assemble_landscape(cs.graph, cs.potential,
                              {make_piece(cs.potential, interval_piece(cs.graph, 0, 0.0, pi, pi / 2))});
  EXPECT_EQ(L.boundary.size(), 2u);
  auto env = max_principle_envelope(L, odd.E, odd);
  EXPECT_NEAR(env.provenance.at("boundary_term"), 0.0, 1e-8);
  expect_dominates(env, odd);
}

TEST(MaxPrinciple, ZeroEnergyIsBoundaryMax) {
  auto g = build_graph({{"a", "b"}, {{"e", "a", "b", 2.0}}});
  PotentialField V(g, {potential::Constant{3.0}});
  auto L = assemble_landscape(g, V, {make_piece(V, interval_piece(g, 0, 0.5, 1.5, 1.0))});
  auto env = max_principle_envelope(L, 0.0, 1.0, {{{0, 0.5}, 0.3}, {{0, 1.5}, 0.7}});
  for (double s : {0.5, 1.0, 1.5}) EXPECT_DOUBLE_EQ(*env.at({0, s}), 0.7);
  expect_error(ErrorKind::InvalidArgument, [&] { max_principle_envelope(L, 0.0, 1.0, {{{0, 0.5}, 0.3}}); });
  LandscapeFunction raw = L;
  raw.verified = false;
  expect_error(ErrorKind::UnverifiedSupersolution, [&] { max_principle_envelope(raw, 1.0, 1.0, {}); });
}

TEST(MaxPrinciple, SquareWellClosedForm) {
  auto cs = square_well_star(1, 25.0);
  const auto& g = cs.graph;
  auto psi = ground(cs, 1.0 / 256);
  const double E = psi.E, sigma = E, b = std::sqrt(E);
  auto Vs = cs.potential.shifted(g, sigma);
  const std::size_t w = g.find_edge("w0").value();
  auto L = assemble_landscape(g, Vs, {make_piece(interval_piece(g, w, 0.0, 2.0, 1.0), {0.0, b})});
  ASSERT_TRUE(L.verified);
  EXPECT_EQ(L.c0, 0.0);
  const double sup = psi.sup_norm(w, 0.0, 2.0);
  const double edge_val = std::max(std::abs(psi(w, 0.0)), std::abs(psi(w, 2.0)));
  auto env = max_principle_envelope(L, E + sigma, sup, {{{w, 0.0}, std::abs(psi(w, 0.0))}, {{w, 2.0}, std::abs(psi(w, 2.0))}});
  for (int i = 0; i <= 40; ++i) {
    const double s = 2.0 * i / 40, x = s - 1.0;
    const double first = edge_val + 2 * b * (std::exp(-b * x * x / 2) - std::exp(-b / 2)) * sup;
    const double second = b * (1 + 2 * std::exp(-b * x * x / 2)) * sup;
    EXPECT_NEAR(*env.at({w, s}), std::max(first, second), 1e-12 * second);
    EXPECT_GE(*env.at({w, s}), std::abs(psi(w, s)));
  }
  // maximum principle: |psi| - E' psi_sup Upsilon peaks on the boundary
  double inner = -1e300, edge = -1e300;
  for (int i = 0; i <= 2000; ++i) {
    double s = 2.0 * i / 2000;
    double v = std::abs(psi(w, s)) - (E + sigma) * sup * L(w, s);
    inner = std::max(inner, v);
    if (i == 0 || i == 2000) edge = std::max(edge, v);
  }
  EXPECT_LE(inner, edge + 1e-8);
}

TEST(TorsionAgmon, ConstantLandscapeRate) {
  const double E = 1.0, delta = 0.25, r = 1.3, c = E + delta + r * r;
  auto g = build_graph({{"a", "b"}, {{"e", "a", "b", 6.0}}});
  PotentialField V(g, {potential::Constant{c}});
  auto L = assemble_landscape(g, V, {make_piece(interval_piece(g, 0, 0.0, 6.0, 3.0), {c, 0.0})});
  ASSERT_TRUE(L.verified);
  EXPECT_NEAR(L(0, 2.0), 1.0 / c, 1e-15);
  DeltaCut cuts[1] = {{0, 1.0, 0.0}};
  auto env = torsion_agmon_extension(L, E, delta, cuts, {0, 3.0});
  const double theta = 0.5, amp = std::sqrt(1.0 / std::sqrt(theta * delta));
  for (double d : {0.0, 1.0, 4.5}) EXPECT_NEAR(*env.at({0, 1.0 + d}), amp * std::exp(-r * d), 1e-10);
  EXPECT_FALSE(env.covers({0, 0.5}));
  expect_error(ErrorKind::EmptyRegion, [&] { torsion_agmon_extension(L, c, delta, cuts, {0, 3.0}); });
}

TEST(TorsionAgmon, SquareWellSmallEnergy) {
  auto cs = square_well_star(1, 0.02);
  const auto& g = cs.graph;
  auto psi = ground(cs, 1.0 / 128);
  const double E = psi.E, sigma = E, b = std::sqrt(E);
  ASSERT_LT(E, 0.02);
  auto Vs = cs.potential.shifted(g, sigma);
  const std::size_t w = g.find_edge("w0").value();
  auto L = assemble_landscape(g, Vs, {make_piece(interval_piece(g, w, 0.0, 2.0, 1.0), {0.0, b})});
  const double delta = 0.1 * E;
  DeltaCut cuts[2] = {{w, 0.3, 0.0}, {w, 1.7, 2.0}};
  auto env = torsion_agmon_extension(L, E + sigma, delta, cuts, {w, 1.0}, &psi);
  for (int i = 0; i <= 20; ++i) {
    double s = 0.3 + 1.4 * i / 20;
    auto v = env.at({w, s});
    ASSERT_TRUE(v.has_value());
    EXPECT_TRUE(std::isfinite(*v));
    EXPECT_GE(*v, std::abs(psi(w, s)));
  }
}
