#include <qgland/case_studies.hpp>
#include <qgland/spectral.hpp>

#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"

using namespace qgland;
constexpr double pi = std::numbers::pi;

TEST(Assemble, SymmetricAndKirchhoffConsistent) {
  auto cs = tetrahedron(10.0, 72.0);
  auto g = cs.graph;
  auto Hd = assemble(g, PotentialField::zero(g), 2 * pi / 64);
  Eigen::SparseMatrix<double> K = Hd.stiffness();
  Eigen::SparseMatrix<double> Kt = K.transpose();
  EXPECT_LT((K - Kt).norm(), 1e-12);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(Hd.size()));
  EXPECT_LT((K * ones).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(Hd.mass().sum(), g.total_length(), 1e-10);
}

TEST(Assemble, StepTooCoarse) {
  auto g = build_graph({{"a", "b"}, {{"e", "a", "b", 1.0}}});
  try {
    assemble(g, PotentialField::zero(g), 0.5);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::StepTooCoarse);
  }
  EXPECT_NO_THROW(assemble(g, PotentialField::zero(g), 0.25));
}

TEST(SolveEigs, CircleConstantGroundState) {
  auto cs = circle_free();
  auto pairs = solve_eigs(cs.graph, cs.potential, 2 * pi / 256, 1);
  EXPECT_NEAR(pairs[0].E, 0.0, 1e-10);
  for (double v : pairs[0].edges[0].psi) EXPECT_NEAR(v, 1.0 / std::sqrt(2 * pi), 1e-10);
  auto pv = evaluate(pairs[0], {0, 1.234});
  EXPECT_NEAR(pv.value, 1.0 / std::sqrt(2 * pi), 1e-10);
  EXPECT_NEAR(pv.derivative, 0.0, 1e-9);
}

TEST(SolveEigs, CircleFourierModes) {
  auto cs = circle_free();
  auto spec = solve_extrapolated(cs.graph, cs.potential, 2 * pi / 128, 5, 2);
  const double expect[5] = {0, 1, 1, 4, 4};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(spec.values[i], expect[i], 1e-9) << i;
}

TEST(SolveEigs, OrthonormalWithResidualCertificates) {
  auto cs = mathieu_circle(10.0);
  auto Hd = assemble(cs.graph, cs.potential, 2 * pi / 512);
  auto pairs = solve_eigs(Hd, 6);
  const auto& M = Hd.mass();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_NEAR(pairs[i].norm, 1.0, 1e-10);
    EXPECT_LT(relative_residual(Hd, pairs[i], pairs[i].E), 1e-10);
    if (i > 0) EXPECT_LE(pairs[i - 1].E, pairs[i].E);
    for (std::size_t j = 0; j < i; ++j) {
      double ip = 0.0;
      for (std::size_t n = 0; n + 1 < pairs[i].edges[0].psi.size(); ++n)
        ip += M[static_cast<Eigen::Index>(Hd.node(0, n))] * pairs[i].edges[0].psi[n] * pairs[j].edges[0].psi[n];
      EXPECT_LT(std::abs(ip), 1e-8);
    }
  }
}

TEST(SolveEigs, IntervalDoubledToCircle) {
  auto g = build_graph({{"a", "b"}, {{"e", "a", "b", 1.0}}});
  auto d = double_leaves(g);
  auto V = PotentialField::zero(g);
  auto Vd = double_leaves(V, d);
  auto iv = solve_extrapolated(g, V, 1.0 / 128, 4, 2);
  auto cv = solve_extrapolated(d, Vd, 1.0 / 128, 7, 2);
  // Neumann eigenvalues (n pi)^2 of the interval appear in the circle of
  // length 2 (simple for n = 0, double otherwise).
  for (int n = 0; n < 4; ++n) EXPECT_NEAR(iv.values[n], (n * pi) * (n * pi), 1e-7);
  EXPECT_NEAR(cv.values[0], 0.0, 1e-9);
  for (int n = 1; n <= 3; ++n) {
    EXPECT_NEAR(cv.values[2 * n - 1], (n * pi) * (n * pi), 1e-7);
    EXPECT_NEAR(cv.values[2 * n], (n * pi) * (n * pi), 1e-7);
  }
}

TEST(SolveEigs, MathieuNearDegeneratePair) {
  auto cs = mathieu_circle(10.0);
  auto spec = solve_extrapolated(cs.graph, cs.potential, 2 * pi / 512, 4, 1);
  auto ref = oracle::hill_eigenvalues(20.0, 20.0);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(spec.values[i], ref[i], 1e-6) << i;
  EXPECT_NEAR(spec.values[0], 6.0630, 2e-3);
  EXPECT_NEAR(spec.values[1], 6.0634, 2e-3);
  EXPECT_GT(spec.values[1] - spec.values[0], 3e-4);
}

TEST(SolveEigs, RichardsonOrderIsTwo) {
  auto cs = mathieu_circle(10.0);
  auto spec = solve_extrapolated(cs.graph, cs.potential, 2 * pi / 128, 1, 2);
  double d1 = spec.raw[0][0] - spec.raw[1][0];
  double d2 = spec.raw[1][0] - spec.raw[2][0];
  EXPECT_NEAR(d1 / d2, 4.0, 0.05);
}

TEST(SolveEigs, SquareWellSecularEquation) {
  for (int n : {1, 3}) {
    for (double M : {10.0, 25.0, 100.0}) {
      auto cs = square_well_star(n, M);
      auto spec = solve_extrapolated(cs.graph, cs.potential, 1.0 / 128, 1, 2);
      double ref = oracle::square_well_root(n, M);
      EXPECT_NEAR(spec.values[0], ref, 1e-8 * ref) << "n=" << n << " M=" << M;
      EXPECT_GT(ref, 0.0);
      EXPECT_LT(ref, pi * pi / 4);
      EXPECT_NEAR(cs.reference_energies[0], ref, 1e-12 * ref);
    }
  }
}

TEST(SolveEigs, LanczosMatchesDense) {
  auto cs = mathieu_circle(10.0);
  auto Hd = assemble(cs.graph, cs.potential, 2 * pi / 600);
  auto dense = solve_eigs(Hd, 6);
  SpectralConfig cfg;
  cfg.dense_threshold = 10;
  auto sparse = solve_eigs(Hd, 6, cfg);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(dense[i].E, sparse[i].E, 1e-9 * std::max(1.0, dense[i].E)) << i;
  // degenerate pairs of the free circle are both found
  auto fc = circle_free();
  auto Hf = assemble(fc.graph, fc.potential, 2 * pi / 700);
  auto fs = solve_eigs(Hf, 5, cfg);
  const double expect[5] = {0, 1, 1, 4, 4};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(fs[i].E, expect[i], 1e-3) << i;
}

TEST(Evaluate, SineModeNode) {
  auto cs = circle_free();
  auto pairs = solve_eigs(cs.graph, cs.potential, 2 * pi / 512, 3);
  // pairs 1 and 2 span {cos, sin}; a combination vanishing at s=0 has nodes at 0 and pi
  auto& a = pairs[1];
  auto& b = pairs[2];
  double ca = b(0, 0.0), cb = -a(0, 0.0);
  double nrm = std::hypot(ca, cb);
  auto f = [&](double s) { return (ca * a(0, s) + cb * b(0, s)) / nrm; };
  EXPECT_NEAR(f(0.0), 0.0, 1e-12);
  EXPECT_NEAR(f(pi), 0.0, 1e-4);
  EXPECT_NEAR(std::abs(f(pi / 2)), 1.0 / std::sqrt(pi), 1e-4);
}

TEST(Evaluate, KirchhoffOnTetrahedron) {
  auto cs = tetrahedron(10.0, 72.0);
  auto Hd = assemble(cs.graph, cs.potential, 2 * pi / 512);
  auto pairs = solve_eigs(Hd, 4);
  const double h = Hd.max_step();
  for (const auto& p : pairs) {
    for (std::size_t v = 0; v < cs.graph.num_vertices(); ++v) {
      auto d = outgoing_derivatives(cs.graph, p, v);
      double sum = 0.0, scale = 0.0;
      for (double x : d) {
        sum += x;
        scale = std::max(scale, std::abs(x));
      }
      EXPECT_LT(std::abs(sum), 10.0 * h * std::max(1.0, scale)) << "vertex " << v;
      // continuity: values agree across incident ends
      std::vector<double> vals;
      for (const auto& end : cs.graph.incident(v))
        vals.push_back(end.at_start ? p.edges[end.edge].psi.front() : p.edges[end.edge].psi.back());
      for (double x : vals) EXPECT_DOUBLE_EQ(x, vals.front());
    }
  }
}

TEST(Classify, FreeCircleAllAllowed) {
  auto cs = circle_free();
  auto part = classify_regions(cs.graph, cs.potential, 3.0);
  EXPECT_TRUE(part.tunneling.empty());
  ASSERT_EQ(part.allowed.size(), 1u);
  EXPECT_NEAR(part.allowed[0].length(), 2 * pi, 1e-14);
}

TEST(Classify, MathieuTurningPoints) {
  auto cs = mathieu_circle(10.0);
  const double E = 6.063;
  auto part = classify_regions(cs.graph, cs.potential, E);
  ASSERT_EQ(part.boundary.size(), 4u);
  // the arc around s = 0 wraps through the vertex and is listed as two pieces
  ASSERT_EQ(part.tunneling.size(), 3u);
  const double r = 0.5 * std::acos(E / 20.0 - 1.0);
  std::vector<double> expect = {r, pi - r, pi + r, 2 * pi - r};
  std::vector<double> got;
  for (const auto& b : part.boundary) got.push_back(b.point.s);
  std::sort(got.begin(), got.end());
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(got[i], expect[i], 1e-9);
  for (const auto& b : part.boundary) EXPECT_LE(std::abs(cs.potential(b.point) - E), 1e-10 * E);
  double covered = 0.0;
  for (const auto& iv : part.tunneling) covered += iv.length();
  for (const auto& iv : part.allowed) covered += iv.length();
  EXPECT_NEAR(covered, 2 * pi, 1e-12);
  EXPECT_TRUE(part.in_tunneling({0, 0.0}));
}

TEST(Classify, SquareWellBoundaryAtJunctions) {
  auto cs = square_well_star(3, 25.0);
  auto part = classify_regions(cs.graph, cs.potential, 2.0);
  ASSERT_EQ(part.tunneling.size(), 2u);
  EXPECT_EQ(part.tunneling[0].edge, 0u);
  EXPECT_EQ(part.tunneling[1].edge, cs.graph.num_edges() - 1);
  ASSERT_EQ(part.boundary.size(), 2u);
  for (const auto& b : part.boundary) {
    ASSERT_TRUE(b.vertex.has_value());
    auto name = cs.graph.vertex_name(*b.vertex);
    EXPECT_TRUE(name == "A" || name == "B");
  }
}

TEST(Classify, EnergyBelowMinimumIsAllTunneling) {
  auto cs = mathieu_circle(10.0);
  auto part = classify_regions(cs.graph, PotentialField(cs.graph, {potential::Cosine{25, 20, 2, 0}}), 1.0);
  EXPECT_TRUE(part.allowed.empty());
  EXPECT_TRUE(part.boundary.empty());
}

TEST(CaseStudies, FlowerArbitraryAmplitudes) {
  auto cs = flower(2, 3, 1.0);
  const std::size_t cells = 512;
  auto ep = flower_eigenfunction(cs, {1.0, 1000.0, 1.0}, cells);
  DiscretizedHamiltonian Hd(cs.graph, cs.potential, std::vector<std::size_t>(cs.graph.num_edges(), cells));
  EXPECT_LT(relative_residual(Hd, ep, 4.0), 1e-4);
  // Kirchhoff holds exactly for the analytic derivatives
  for (std::size_t v = 0; v < cs.graph.num_vertices(); ++v) {
    double sum = 0.0;
    for (double d : outgoing_derivatives(cs.graph, ep, v)) sum += d;
    EXPECT_NEAR(sum, 0.0, 1e-9);
  }
  EXPECT_GT(ep.sup_norm(cs.graph.find_edge("a1").value()), 500.0 * ep.sup_norm(cs.graph.find_edge("a0").value()));
}

TEST(CaseStudies, TetrahedronSymmetricEigenfunctions) {
  for (auto [q, E] : {std::pair{10.0, 72.0}, std::pair{5.0, 300.0}}) {
    auto cs = tetrahedron(q, E);
    const std::size_t cells = 4096;
    auto ep = tetrahedron_eigenfunction(cs, cells);
    DiscretizedHamiltonian Hd(cs.graph, cs.potential, std::vector<std::size_t>(6, cells));
    EXPECT_LT(relative_residual(Hd, ep, E), 1e-4) << "E=" << E;
    for (std::size_t v = 0; v < 4; ++v) {
      double sum = 0.0, scale = 0.0;
      for (double d : outgoing_derivatives(cs.graph, ep, v)) {
        sum += d;
        scale = std::max(scale, std::abs(d));
      }
      EXPECT_LT(std::abs(sum), 1e-8 * std::max(1.0, scale));
      std::vector<double> vals;
      for (const auto& end : cs.graph.incident(v))
        vals.push_back(end.at_start ? ep.edges[end.edge].psi.front() : ep.edges[end.edge].psi.back());
      for (double x : vals) EXPECT_NEAR(x, vals.front(), 1e-9);
    }
  }
}

TEST(CaseStudies, LassoGroundStateConcentratesInBarrier) {
  auto cs = lasso_truncated(1.0, 0.5, 0.5, 24.0);
  auto spec = solve_extrapolated(cs.graph, cs.potential, 1.0 / 64, 1, 1);
  EXPECT_NEAR(spec.values[0], 1.0, 1e-6);
  const auto& p = spec.finest[0];
  double barrier = p.l2_squared(2, 0.0, cs.graph.length(2));
  EXPECT_GT(barrier, 0.3);
  // the eigenfunction is constant on the circle
  const auto& circ = p.edges[0].psi;
  auto [lo, hi] = std::minmax_element(circ.begin(), circ.end());
  EXPECT_LT(*hi - *lo, 1e-4 * *hi);
}

TEST(CaseStudies, BadParameters) {
  try {
    build_case_study("nope");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::BadParameters);
  }
  try {
    square_well_star(0, 25.0);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::BadParameters);
  }
}

TEST(CaseStudies, SquareWellLargeMApproachesPiSquaredOverFour) {
  double prev = 0.0;
  for (double M : {10.0, 100.0, 1e4, 1e6}) {
    double E = square_well_star(1, M).reference_energies[0];
    EXPECT_LT(E, pi * pi / 4);
    EXPECT_GT(E, prev);
    prev = E;
  }
  EXPECT_NEAR(prev, pi * pi / 4, 1e-2);
}
