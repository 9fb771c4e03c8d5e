#ifndef QGLAND_SPECTRAL_HPP
#define QGLAND_SPECTRAL_HPP

#include <qgland/error.hpp>
#include <qgland/graph.hpp>
#include <qgland/lanczos.hpp>
#include <qgland/potential.hpp>
#include <qgland/quadrature.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <lapacke.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace qgland {

struct SpectralConfig {
  std::size_t dense_threshold = 4000;
  /// Residual tolerance relative to max(1, spectral radius bound).
  double residual_rel_tol = 1e-9;
};

/// Lumped-mass linear elements on a uniform grid per edge: vertex unknowns
/// shared by incident edges, K symmetric, M diagonal (trapezoid weights).
/// Eigenproblem K psi = E M psi.
class DiscretizedHamiltonian {
 public:
  DiscretizedHamiltonian(const MetricGraph& g, const PotentialField& V, std::vector<std::size_t> cells)
      : g_(g), V_(V), cells_(std::move(cells)) {
    const auto m = g.num_edges();
    if (cells_.size() != m) fail(ErrorKind::InvalidArgument, "need one cell count per edge");
    offset_.resize(m);
    std::size_t n = g.num_vertices();
    for (std::size_t e = 0; e < m; ++e) {
      if (cells_[e] < 4)
        fail(ErrorKind::StepTooCoarse, "edge '" + g.edge(e).name + "' needs at least 4 cells");
      offset_[e] = n;
      n += cells_[e] - 1;
    }
    n_ = n;
    mass_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(4 * n + 8 * m);
    double rho = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      const double h = step(e);
      rho = std::max(rho, 4.0 / (h * h));
      for (std::size_t j = 0; j < cells_[e]; ++j) {
        auto a = static_cast<int>(node(e, j)), b = static_cast<int>(node(e, j + 1));
        double va = V(e, h * j), vb = V(e, h * (j + 1));
        trip.emplace_back(a, a, 1.0 / h + 0.5 * h * va);
        trip.emplace_back(b, b, 1.0 / h + 0.5 * h * vb);
        trip.emplace_back(a, b, -1.0 / h);
        trip.emplace_back(b, a, -1.0 / h);
        mass_[a] += 0.5 * h;
        mass_[b] += 0.5 * h;
      }
    }
    K_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();
    spectral_radius_ = rho + V.max_value();
  }

  const MetricGraph& graph() const { return g_; }
  const PotentialField& potential() const { return V_; }
  std::size_t size() const { return n_; }
  std::size_t cells(std::size_t e) const { return cells_.at(e); }
  const std::vector<std::size_t>& cell_counts() const { return cells_; }
  double step(std::size_t e) const { return g_.length(e) / static_cast<double>(cells_.at(e)); }
  double max_step() const {
    double h = 0.0;
    for (std::size_t e = 0; e < cells_.size(); ++e) h = std::max(h, step(e));
    return h;
  }
  /// Crude upper bound on the largest eigenvalue (Gershgorin on M^{-1}K).
  double spectral_radius_bound() const { return spectral_radius_; }

  /// Global unknown index of grid node j (0..cells) on edge e.
  std::size_t node(std::size_t e, std::size_t j) const {
    const auto& ed = g_.edge(e);
    if (j == 0) return ed.from;
    if (j == cells_[e]) return ed.to;
    return offset_[e] + j - 1;
  }

  const Eigen::SparseMatrix<double>& stiffness() const { return K_; }
  const Eigen::VectorXd& mass() const { return mass_; }

  /// M^{-1/2} K M^{-1/2}.
  Eigen::SparseMatrix<double> symmetric_operator() const {
    Eigen::VectorXd d = mass_.cwiseSqrt().cwiseInverse();
    return d.asDiagonal() * K_ * d.asDiagonal();
  }

 private:
  MetricGraph g_;
  PotentialField V_;
  std::vector<std::size_t> cells_;
  std::vector<std::size_t> offset_;
  std::size_t n_ = 0;
  Eigen::SparseMatrix<double> K_;
  Eigen::VectorXd mass_;
  double spectral_radius_ = 0.0;
};

/// Cell counts for a target step h: ceil(l_e / h) per edge.
inline std::vector<std::size_t> cells_for_step(const MetricGraph& g, double h) {
  if (!(h > 0.0)) fail(ErrorKind::InvalidArgument, "step must be positive");
  std::vector<std::size_t> cells(g.num_edges());
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const double l = g.length(e);
    if (h > l / 4.0 * (1.0 + 1e-12))
      fail(ErrorKind::StepTooCoarse, "step " + std::to_string(h) + " exceeds l/4 on edge '" + g.edge(e).name + "'");
    cells[e] = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(l / h - 1e-9)));
  }
  return cells;
}

inline DiscretizedHamiltonian assemble(const MetricGraph& g, const PotentialField& V, double h) {
  return DiscretizedHamiltonian(g, V, cells_for_step(g, h));
}

/// Samples of an eigenfunction on one edge, at s_j = j h, j = 0..cells.
struct EdgeSamples {
  double h = 0.0;
  std::vector<double> psi;
  std::vector<double> dpsi;

  std::size_t cells() const { return psi.size() - 1; }
  double length() const { return h * static_cast<double>(cells()); }
  double s(std::size_t j) const { return h * static_cast<double>(j); }
};

struct PointValue {
  double value = 0.0;
  double derivative = 0.0;
};

struct Eigenpair {
  double E = 0.0;
  std::vector<EdgeSamples> edges;
  double residual = 0.0;  // ||M^{-1}K psi - E psi||_M for ||psi||_M = 1
  double norm = 1.0;      // trapezoid L2 norm
  std::string quadrature = "trapezoid";

  /// Cubic Hermite value and derivative on edge e at arclength s.
  PointValue at(std::size_t e, double s) const {
    const auto& es = edges.at(e);
    const auto n = es.cells();
    double t = std::clamp(s / es.h, 0.0, static_cast<double>(n));
    auto j = std::min(static_cast<std::size_t>(t), n - 1);
    double u = t - static_cast<double>(j);
    double p0 = es.psi[j], p1 = es.psi[j + 1];
    double m0 = es.dpsi[j] * es.h, m1 = es.dpsi[j + 1] * es.h;
    double u2 = u * u, u3 = u2 * u;
    double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    double d00 = 6 * u2 - 6 * u, d10 = 3 * u2 - 4 * u + 1, d01 = -6 * u2 + 6 * u, d11 = 3 * u2 - 2 * u;
    return {h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1, (d00 * p0 + d10 * m0 + d01 * p1 + d11 * m1) / es.h};
  }
  double operator()(std::size_t e, double s) const { return at(e, s).value; }
  double operator()(const GraphPoint& x) const { return at(x.edge, x.s).value; }

  /// max |psi| over [a, b] inside cell j, using the critical points of the cubic
  double cell_max_abs(std::size_t e, std::size_t j, double a, double b) const {
    const auto& es = edges.at(e);
    double m = std::max(std::abs((*this)(e, a)), std::abs((*this)(e, b)));
    // derivative in u is the quadratic A u^2 + B u + C
    const double p0 = es.psi[j], p1 = es.psi[j + 1], m0 = es.dpsi[j] * es.h, m1 = es.dpsi[j + 1] * es.h;
    const double A = 6 * p0 + 3 * m0 - 6 * p1 + 3 * m1, B = -6 * p0 - 4 * m0 + 6 * p1 - 2 * m1, C = m0;
    std::vector<double> us;
    if (std::abs(A) < 1e-300) {
      if (std::abs(B) > 0.0) us.push_back(-C / B);
    } else {
      const double disc = B * B - 4 * A * C;
      if (disc >= 0.0) {
        const double r = std::sqrt(disc);
        us.push_back((-B + r) / (2 * A));
        us.push_back((-B - r) / (2 * A));
      }
    }
    for (double u : us) {
      const double s = es.s(j) + u * es.h;
      if (s > a && s < b) m = std::max(m, std::abs((*this)(e, s)));
    }
    return m;
  }

  double sup_norm(std::size_t e) const { return sup_norm(e, 0.0, edges.at(e).s(edges.at(e).cells())); }
  double sup_norm() const {
    double m = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) m = std::max(m, sup_norm(e));
    return m;
  }
  /// max |psi| over [s0, s1] on edge e, exact for the Hermite interpolant.
  double sup_norm(std::size_t e, double s0, double s1) const {
    if (s1 < s0) std::swap(s0, s1);
    const auto& es = edges.at(e);
    double m = 0.0;
    for (std::size_t j = 0; j < es.cells(); ++j) {
      double a = std::max(s0, es.s(j)), b = std::min(s1, es.s(j + 1));
      if (b < a) continue;
      m = std::max(m, cell_max_abs(e, j, a, b));
    }
    return m;
  }

  /// int_{s0}^{s1} psi^2 on edge e, Gauss quadrature of the Hermite interpolant.
  double l2_squared(std::size_t e, double s0, double s1) const {
    if (s1 < s0) std::swap(s0, s1);
    const auto& es = edges.at(e);
    double total = 0.0;
    auto j0 = static_cast<std::size_t>(std::max(0.0, std::floor(s0 / es.h)));
    for (std::size_t j = j0; j < es.cells(); ++j) {
      double a = std::max(s0, es.s(j)), b = std::min(s1, es.s(j + 1));
      if (b <= a) {
        if (es.s(j) >= s1) break;
        continue;
      }
      total += quad::gauss(
          [&](double s) {
            double v = (*this)(e, s);
            return v * v;
          },
          a, b);
    }
    return total;
  }
};

/// Value and derivative at a graph point; at a vertex the derivative is the
/// outgoing derivative along the given edge.
inline PointValue evaluate(const Eigenpair& psi, const GraphPoint& x) { return psi.at(x.edge, x.s); }

/// Outgoing derivatives at vertex v, one per incident edge end.
inline std::vector<double> outgoing_derivatives(const MetricGraph& g, const Eigenpair& psi, std::size_t v) {
  std::vector<double> out;
  for (const auto& end : g.incident(v)) {
    const auto& es = psi.edges.at(end.edge);
    out.push_back(end.at_start ? es.dpsi.front() : -es.dpsi.back());
  }
  return out;
}

namespace detail {

/// Fourth-order finite-difference derivative of grid samples.
inline std::vector<double> fd_derivative(const std::vector<double>& f, double h) {
  const auto n = f.size() - 1;
  std::vector<double> d(n + 1);
  const double c = 1.0 / (12.0 * h);
  for (std::size_t j = 2; j + 2 <= n; ++j) d[j] = (-f[j + 2] + 8 * f[j + 1] - 8 * f[j - 1] + f[j - 2]) * c;
  d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) * c;
  d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) * c;
  d[n] = (25 * f[n] - 48 * f[n - 1] + 36 * f[n - 2] - 16 * f[n - 3] + 3 * f[n - 4]) * c;
  d[n - 1] = (3 * f[n] + 10 * f[n - 1] - 18 * f[n - 2] + 6 * f[n - 3] - f[n - 4]) * c;
  return d;
}

inline linalg::SymEig dense_lowest(const Eigen::SparseMatrix<double>& A, int k) {
  const auto n = static_cast<lapack_int>(A.rows());
  Eigen::MatrixXd D = Eigen::MatrixXd(A);
  Eigen::VectorXd w(n);
  Eigen::MatrixXd Z(n, k);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(k));
  lapack_int found = 0;
  lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, D.data(), n, 0.0, 0.0, 1, k, 0.0, &found,
                                   w.data(), Z.data(), n, isuppz.data());
  if (info != 0 || found != k)
    fail(ErrorKind::ConvergenceFailure, "dense symmetric eigensolver failed (info " + std::to_string(info) + ")");
  linalg::SymEig out;
  out.values = w.head(k);
  out.vectors = Z;
  return out;
}

}  // namespace detail

/// Lowest k eigenpairs, ascending, normalized in the trapezoid L2 norm.
inline std::vector<Eigenpair> solve_eigs(const DiscretizedHamiltonian& Hd, std::size_t k, SpectralConfig cfg = {}) {
  if (k < 1 || k > Hd.size()) fail(ErrorKind::InvalidArgument, "eigenpair count out of range");
  const auto A = Hd.symmetric_operator();
  const double scale = std::max(1.0, Hd.spectral_radius_bound());
  const double tol = cfg.residual_rel_tol * scale;
  linalg::SymEig eig = Hd.size() <= cfg.dense_threshold
                           ? detail::dense_lowest(A, static_cast<int>(k))
                           : linalg::lowest_eigs_shift_invert(A, static_cast<int>(k), -1.0, 1e-13 * scale);
  const Eigen::VectorXd minv_sqrt = Hd.mass().cwiseSqrt().cwiseInverse();
  const auto& g = Hd.graph();
  std::vector<Eigenpair> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    Eigen::VectorXd y = eig.vectors.col(static_cast<Eigen::Index>(i));
    y.normalize();
    double lambda = y.dot(A * y);
    double r = (A * y - lambda * y).norm();
    if (r > tol)
      fail(ErrorKind::ConvergenceFailure, "eigenpair " + std::to_string(i) + " residual " + std::to_string(r) +
                                              " exceeds tolerance " + std::to_string(tol));
    Eigen::VectorXd psi = minv_sqrt.cwiseProduct(y);
    Eigen::Index imax = 0;
    psi.cwiseAbs().maxCoeff(&imax);
    if (psi[imax] < 0.0) psi = -psi;
    Eigenpair ep;
    ep.E = lambda;
    ep.residual = r;
    ep.norm = std::sqrt(psi.dot(Hd.mass().cwiseProduct(psi)));
    ep.edges.resize(g.num_edges());
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      auto& es = ep.edges[e];
      es.h = Hd.step(e);
      es.psi.resize(Hd.cells(e) + 1);
      for (std::size_t j = 0; j <= Hd.cells(e); ++j) es.psi[j] = psi[static_cast<Eigen::Index>(Hd.node(e, j))];
      es.dpsi = detail::fd_derivative(es.psi, es.h);
    }
    out.push_back(std::move(ep));
  }
  return out;
}

inline std::vector<Eigenpair> solve_eigs(const MetricGraph& g, const PotentialField& V, double h, std::size_t k,
                                         SpectralConfig cfg = {}) {
  return solve_eigs(assemble(g, V, h), k, cfg);
}

/// Eigenvalues at steps h, h/2, ..., h/2^levels combined by Romberg
/// extrapolation in h^2.
struct ExtrapolatedSpectrum {
  std::vector<double> values;
  std::vector<double> error_estimate;
  std::vector<std::vector<double>> raw;  // raw[level][i]
  std::vector<Eigenpair> finest;
};

inline ExtrapolatedSpectrum solve_extrapolated(const MetricGraph& g, const PotentialField& V, double h,
                                               std::size_t k, int levels = 1, SpectralConfig cfg = {}) {
  auto cells = cells_for_step(g, h);
  ExtrapolatedSpectrum out;
  for (int l = 0; l <= levels; ++l) {
    auto pairs = solve_eigs(DiscretizedHamiltonian(g, V, cells), k, cfg);
    std::vector<double> ev;
    for (const auto& p : pairs) ev.push_back(p.E);
    out.raw.push_back(std::move(ev));
    if (l == levels) out.finest = std::move(pairs);
    for (auto& c : cells) c *= 2;
  }
  out.values.resize(k);
  out.error_estimate.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> col;
    for (const auto& r : out.raw) col.push_back(r[i]);
    double before_last = col[levels];
    double factor = 4.0;
    for (int m = 1; m <= levels; ++m) {
      if (m == levels) before_last = col[levels];
      for (int l = levels; l >= m; --l) col[l] = col[l] + (col[l] - col[l - 1]) / (factor - 1.0);
      factor *= 4.0;
    }
    out.values[i] = col[levels];
    out.error_estimate[i] = levels > 0 ? std::abs(col[levels] - before_last) : 0.0;
  }
  return out;
}

/// Discrete residual of sampled data against K psi = E M psi, relative to
/// max(1, |E|) ||psi||_M. Vertex values come from the first incident edge.
inline double relative_residual(const DiscretizedHamiltonian& Hd, const Eigenpair& psi, double E) {
  const auto& g = Hd.graph();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(Hd.size()));
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const auto& es = psi.edges.at(e);
    if (es.cells() != Hd.cells(e)) fail(ErrorKind::GridMismatch, "sample grid does not match the discretization");
    for (std::size_t j = 1; j < Hd.cells(e); ++j) x[static_cast<Eigen::Index>(Hd.node(e, j))] = es.psi[j];
  }
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const auto& end = g.incident(v).front();
    const auto& es = psi.edges.at(end.edge);
    x[static_cast<Eigen::Index>(v)] = end.at_start ? es.psi.front() : es.psi.back();
  }
  const auto& M = Hd.mass();
  Eigen::VectorXd r = Hd.stiffness() * x - E * M.cwiseProduct(x);
  double rn = std::sqrt(r.cwiseProduct(M.cwiseInverse()).dot(r));
  double xn = std::sqrt(x.dot(M.cwiseProduct(x)));
  return rn / (std::max(1.0, std::abs(E)) * xn);
}

/// Eigenpair-shaped samples of an analytic function f(e, s) -> (psi, psi').
template <class F>
Eigenpair sample_function(const MetricGraph& g, double E, const std::vector<std::size_t>& cells, F&& f) {
  Eigenpair ep;
  ep.E = E;
  ep.quadrature = "analytic";
  ep.edges.resize(g.num_edges());
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    auto& es = ep.edges[e];
    es.h = g.length(e) / static_cast<double>(cells.at(e));
    es.psi.resize(cells[e] + 1);
    es.dpsi.resize(cells[e] + 1);
    for (std::size_t j = 0; j <= cells[e]; ++j) {
      auto [v, d] = f(e, es.s(j));
      es.psi[j] = v;
      es.dpsi[j] = d;
    }
  }
  double n2 = 0.0;
  for (std::size_t e = 0; e < g.num_edges(); ++e) n2 += ep.l2_squared(e, 0.0, g.length(e));
  ep.norm = std::sqrt(n2);
  return ep;
}

/// Scales samples so the L2 norm is one.
inline void normalize(Eigenpair& ep) {
  if (!(ep.norm > 0.0)) fail(ErrorKind::InvalidArgument, "cannot normalize a zero function");
  for (auto& es : ep.edges) {
    for (auto& v : es.psi) v /= ep.norm;
    for (auto& v : es.dpsi) v /= ep.norm;
  }
  ep.norm = 1.0;
}

struct EdgeInterval {
  std::size_t edge = 0;
  double s0 = 0.0;
  double s1 = 0.0;

  double length() const { return s1 - s0; }
  bool contains(double s, double tol = 0.0) const { return s >= s0 - tol && s <= s1 + tol; }
};

struct BoundaryPoint {
  GraphPoint point;
  std::optional<std::size_t> vertex;
};

struct RegionPartition {
  double E = 0.0;
  std::vector<EdgeInterval> tunneling;
  std::vector<EdgeInterval> allowed;
  std::vector<BoundaryPoint> boundary;

  bool in_tunneling(const GraphPoint& x, double tol = 0.0) const {
    for (const auto& iv : tunneling)
      if (iv.edge == x.edge && iv.contains(x.s, tol)) return true;
    return false;
  }
  std::vector<EdgeInterval> tunneling_on(std::size_t e) const {
    std::vector<EdgeInterval> out;
    for (const auto& iv : tunneling)
      if (iv.edge == e) out.push_back(iv);
    return out;
  }
};

/// Roots of V - E on edge e (sign changes), to |V - E| <= tol.
inline std::vector<double> turning_points(const PotentialField& V, std::size_t e, double length, double E,
                                          double tol, int n_scan = 2048) {
  return quad::crossings([&](double s) { return V(e, s) - E; }, 0.0, length, n_scan, tol);
}

/// Split into T_E = {V > E} and C_E = {V <= E}.
inline RegionPartition classify_regions(const MetricGraph& g, const PotentialField& V, double E,
                                        double tol = -1.0) {
  if (E < 0.0) fail(ErrorKind::InvalidArgument, "energy must be nonnegative");
  if (tol <= 0.0) tol = 1e-10 * std::max(1.0, E);
  RegionPartition part;
  part.E = E;
  // class of the piece touching each edge end: [e][0] at s=0, [e][1] at s=l
  std::vector<std::array<bool, 2>> end_tunnel(g.num_edges());
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const double l = g.length(e);
    auto roots = turning_points(V, e, l, E, tol);
    std::vector<double> cuts{0.0};
    for (double r : roots)
      if (r - cuts.back() > 1e-12) cuts.push_back(r);
    if (l - cuts.back() <= 1e-12) cuts.back() = l;
    else cuts.push_back(l);
    std::vector<std::pair<EdgeInterval, bool>> pieces;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      double a = cuts[i], b = cuts[i + 1];
      bool t = V(e, 0.5 * (a + b)) - E > 0.0;
      if (!pieces.empty() && pieces.back().second == t)
        pieces.back().first.s1 = b;
      else
        pieces.push_back({{e, a, b}, t});
    }
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      (pieces[i].second ? part.tunneling : part.allowed).push_back(pieces[i].first);
      if (i > 0) part.boundary.push_back({{e, pieces[i].first.s0}, std::nullopt});
    }
    end_tunnel[e] = {pieces.front().second, pieces.back().second};
  }
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    bool any_t = false, any_c = false;
    for (const auto& end : g.incident(v)) {
      bool t = end_tunnel[end.edge][end.at_start ? 0 : 1];
      (t ? any_t : any_c) = true;
    }
    if (any_t && any_c) part.boundary.push_back({g.vertex_point(v), v});
  }
  return part;
}

}  // namespace qgland

#endif  // QGLAND_SPECTRAL_HPP
