// Shared assertions for envelope tests.
#ifndef QGLAND_TESTS_HELPERS_HPP
#define QGLAND_TESTS_HELPERS_HPP

#include <qgland/case_studies.hpp>
#include <qgland/envelope.hpp>
#include <qgland/error.hpp>
#include <qgland/spectral.hpp>

#include <gtest/gtest.h>

namespace {

using namespace qgland;

[[maybe_unused]] Eigenpair ground(const CaseStudy& cs, double h) { return solve_eigs(cs.graph, cs.potential, h, 1)[0]; }

template <class F>
void expect_error(ErrorKind kind, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(kind);
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), kind) << err.what();
  }
}

[[maybe_unused]] void expect_dominates(const Envelope& env, const Eigenpair& psi, int per_edge = 512, double slack = 1e-6) {
  ASSERT_FALSE(env.pieces.empty());
  double worst = 1e300;
  for (const auto& p : env.pieces) {
    for (int i = 0; i <= per_edge; ++i) {
      double s = p.s0 + (p.s1 - p.s0) * i / per_edge;
      double margin = p.value(s) - std::abs(psi(p.edge, s));
      worst = std::min(worst, margin);
    }
  }
  EXPECT_GE(worst, -slack * psi.sup_norm()) << env.method;
}

}  // namespace

#endif  // QGLAND_TESTS_HELPERS_HPP
