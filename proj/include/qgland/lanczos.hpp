#ifndef QGLAND_LANCZOS_HPP
#define QGLAND_LANCZOS_HPP

#include <qgland/error.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <random>
#include <vector>

namespace qgland::linalg {

struct SymEig {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns
  double worst_residual = 0.0;
};

/// Lowest `k` eigenpairs of a symmetric sparse matrix by shift-invert Lanczos
/// with full reorthogonalization and locking. `sigma` must lie below the
/// spectrum; `tol` is an absolute residual tolerance. Repeated runs in the
/// complement of the locked vectors pick up further copies of
/// (near-)degenerate eigenvalues.
inline SymEig lowest_eigs_shift_invert(const Eigen::SparseMatrix<double>& A, int k, double sigma, double tol,
                                       int max_runs = 64, int max_subspace = 800) {
  const Eigen::Index n = A.rows();
  if (k < 1 || k > n) fail(ErrorKind::InvalidArgument, "requested eigenpair count out of range");
  Eigen::SparseMatrix<double> shifted = A;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) fail(ErrorKind::ConvergenceFailure, "shift-invert factorization failed");

  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  std::vector<double> locked_vals;
  std::vector<Eigen::VectorXd> locked_vecs;
  double worst = 0.0;

  auto orth_against_locked = [&](Eigen::VectorXd& v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& y : locked_vecs) v -= y.dot(v) * y;
  };

  int m = static_cast<int>(std::min<Eigen::Index>(n, std::max(2 * k + 20, 48)));
  for (int run = 0; run < max_runs; ++run) {
    const int avail = static_cast<int>(n) - static_cast<int>(locked_vecs.size());
    if (avail <= 0) break;
    const int steps = std::min(m, avail);

    Eigen::MatrixXd Q(n, steps + 1);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(steps), beta = Eigen::VectorXd::Zero(steps);
    Eigen::VectorXd q(n);
    for (Eigen::Index i = 0; i < n; ++i) q[i] = unif(rng);
    orth_against_locked(q);
    q.normalize();
    Q.col(0) = q;
    int built = steps;
    for (int j = 0; j < steps; ++j) {
      Eigen::VectorXd w = ldlt.solve(Q.col(j));
      orth_against_locked(w);
      alpha[j] = Q.col(j).dot(w);
      for (int pass = 0; pass < 2; ++pass)
        w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
      orth_against_locked(w);
      double b = w.norm();
      beta[j] = b;
      if (b < 1e-14 || j + 1 == steps) {
        built = j + 1;
        break;
      }
      Q.col(j + 1) = w / b;
    }

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(built, built);
    for (int j = 0; j < built; ++j) {
      T(j, j) = alpha[j];
      if (j + 1 < built) T(j, j + 1) = T(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri(T);
    // largest theta <-> lowest lambda
    bool found_new = false;
    const double kth = locked_vals.size() >= static_cast<std::size_t>(k)
                           ? [&] {
                               auto tmp = locked_vals;
                               std::nth_element(tmp.begin(), tmp.begin() + (k - 1), tmp.end());
                               return tmp[k - 1];
                             }()
                           : std::numeric_limits<double>::infinity();
    for (int c = built - 1; c >= 0; --c) {
      double theta = tri.eigenvalues()[c];
      if (theta <= 0.0) break;
      double lambda = sigma + 1.0 / theta;
      Eigen::VectorXd y = Q.leftCols(built) * tri.eigenvectors().col(c);
      orth_against_locked(y);
      double ny = y.norm();
      if (ny < 0.5) break;
      y /= ny;
      lambda = y.dot(A * y);
      double res = (A * y - lambda * y).norm();
      if (res > tol) break;
      if (lambda > kth) break;
      locked_vals.push_back(lambda);
      locked_vecs.push_back(y);
      worst = std::max(worst, res);
      found_new = true;
    }
    if (!found_new) {
      if (locked_vals.size() >= static_cast<std::size_t>(k)) break;
      if (steps == avail || m >= max_subspace)
        fail(ErrorKind::ConvergenceFailure, "Lanczos did not converge with subspace size " + std::to_string(steps));
      m = std::min({2 * m, static_cast<int>(n), max_subspace});
    }
  }
  if (locked_vals.size() < static_cast<std::size_t>(k))
    fail(ErrorKind::ConvergenceFailure, "Lanczos converged only " + std::to_string(locked_vals.size()) +
                                            " eigenpairs; worst residual " + std::to_string(worst));

  std::vector<std::size_t> order(locked_vals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return locked_vals[a] < locked_vals[b]; });
  SymEig out;
  out.values.resize(k);
  out.vectors.resize(n, k);
  for (int i = 0; i < k; ++i) {
    out.values[i] = locked_vals[order[i]];
    out.vectors.col(i) = locked_vecs[order[i]];
  }
  out.worst_residual = worst;
  return out;
}

}  // namespace qgland::linalg

#endif  // QGLAND_LANCZOS_HPP
