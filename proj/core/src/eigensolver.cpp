#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "metricprop/parallel.hpp"
#include "metricprop/rng.hpp"
#include "metricprop/spectral.hpp"

namespace mprop {

namespace {

// All linear algebra here uses fixed accumulation orders (column dots are
// sequential, row updates sweep columns in index order), so results are
// bitwise identical regardless of the worker-thread count.

// y = V(:, 0..cols)^T w, one sequential dot per column, columns in parallel.
void basis_dots(const Eigen::MatrixXd& V, Index cols, const Eigen::VectorXd& w,
                Eigen::VectorXd& y) {
  y.resize(cols);
  parallel_for(cols, [&](Index begin, Index end) {
    for (Index j = begin; j < end; ++j) y[j] = V.col(j).dot(w);
  });
}

// w -= V(:, 0..cols) y, rows in parallel, columns swept in index order.
void subtract_combination(const Eigen::MatrixXd& V, Index cols, const Eigen::VectorXd& y,
                          Eigen::VectorXd& w) {
  const Index n = w.size();
  parallel_for(n, [&](Index begin, Index end) {
    const Index len = end - begin;
    for (Index j = 0; j < cols; ++j)
      w.segment(begin, len) -= y[j] * V.col(j).segment(begin, len);
  });
}

// Classical Gram-Schmidt against the leading basis columns; a second pass
// only when the first one removed most of the vector (DGKS criterion).
void full_reorthogonalize(const Eigen::MatrixXd& V, Index cols, Eigen::VectorXd& w) {
  const double before = w.norm();
  Eigen::VectorXd y;
  basis_dots(V, cols, w, y);
  subtract_combination(V, cols, y, w);
  if (w.norm() < 0.5 * before) {
    basis_dots(V, cols, w, y);
    subtract_combination(V, cols, y, w);
  }
}

// y = (2I - L) x
void apply_shifted(const CsrMatrix& L, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  y.resize(L.n);
  parallel_for(L.n, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      double s = 0.0;
      for (Index p = L.row_ptr[i]; p < L.row_ptr[i + 1]; ++p) s += L.val[p] * x[L.col[p]];
      y[i] = 2.0 * x[i] - s;
    }
  });
}

std::string format_residual(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", r);
  return buf;
}

// Random unit vector orthogonal to the current basis.
Eigen::VectorXd fresh_direction(Rng& rng, const Eigen::MatrixXd& V, Index cols, Index n) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::VectorXd w(n);
    for (Index i = 0; i < n; ++i) w[i] = rng.normal();
    full_reorthogonalize(V, cols, w);
    const double norm = w.norm();
    if (norm > 1e-6 * std::sqrt(static_cast<double>(n))) return w / norm;
  }
  throw NumericError("eigendecompose could not generate a direction outside the Krylov basis");
}

// Y = V(:, 0..m) * Q(:, sel), GEMM over a fixed grid of row blocks so the
// result does not depend on how workers pick blocks up.
Eigen::MatrixXd ritz_combination(const Eigen::MatrixXd& V, Index m, const Eigen::MatrixXd& Q,
                                 const std::vector<int>& sel) {
  const Index n = V.rows();
  const Index out = static_cast<Index>(sel.size());
  Eigen::MatrixXd Qsel(m, out);
  for (Index c = 0; c < out; ++c) Qsel.col(c) = Q.col(sel[static_cast<std::size_t>(c)]).head(m);
  Eigen::MatrixXd Y(n, out);
  const Index block = 4096;
  const Index num_blocks = (n + block - 1) / block;
  parallel_for(num_blocks, [&](Index bbegin, Index bend) {
    for (Index b = bbegin; b < bend; ++b) {
      const Index r0 = b * block;
      const Index len = std::min(block, n - r0);
      Y.middleRows(r0, len).noalias() = V.middleRows(r0, len).leftCols(m) * Qsel;
    }
  });
  return Y;
}

struct RitzCandidate {
  Eigen::VectorXd values;   // ascending eigenvalues of L
  Eigen::MatrixXd vectors;  // matching columns
};

double max_residual(const CsrMatrix& L, const RitzCandidate& c) {
  double worst = 0.0;
  Eigen::VectorXd Le;
  for (Index j = 0; j < c.values.size(); ++j) {
    L.multiply(c.vectors.col(j), Le);
    worst = std::max(worst, (Le - c.values[j] * c.vectors.col(j)).norm());
  }
  return worst;
}

// connected components of the sparsity pattern, by union-find
Index count_components(const CsrMatrix& L) {
  std::vector<Index> parent(static_cast<std::size_t>(L.n));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (Index i = 0; i < L.n; ++i) {
    for (Index p = L.row_ptr[i]; p < L.row_ptr[i + 1]; ++p) {
      const Index j = L.col[p];
      if (j == i) continue;
      const Index a = find(i), b = find(j);
      if (a != b) parent[static_cast<std::size_t>(a)] = b;
    }
  }
  Index c = 0;
  for (Index i = 0; i < L.n; ++i)
    if (find(i) == i) ++c;
  return c;
}

RitzCandidate dense_eigendecompose(const CsrMatrix& L, int eta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.to_dense());
  if (es.info() != Eigen::Success)
    throw NumericError("dense eigendecomposition failed to converge");
  RitzCandidate c;
  c.values = es.eigenvalues().head(eta);
  c.vectors = es.eigenvectors().leftCols(eta);
  return c;
}

// Thick-restart Lanczos for the eta largest eigenpairs of 2I - L, i.e. the
// eta smallest of L. Full reorthogonalization; degenerate eigenvalues are
// recovered through breakdown restarts with random directions, and a
// component count over the sparsity pattern guards the one degeneracy we can
// know about structurally: a converged set that is missing copies of the
// zero eigenvalue is rejected and the chain reseeded.
RitzCandidate lanczos_eigendecompose(const CsrMatrix& L, int eta, const EigsOptions& opts,
                                     Index m) {
  const Index n = L.n;
  const Index expected_zeros = std::min<Index>(count_components(L), eta);
  Rng rng(opts.seed);
  Eigen::MatrixXd V(n, m + 1);
  std::vector<double> alpha(static_cast<std::size_t>(m), 0.0);
  std::vector<double> beta(static_cast<std::size_t>(m) + 1, 0.0);  // beta[j] couples j-1, j

  Index ell = 0;  // kept Ritz pairs at the front of the basis
  Eigen::VectorXd theta_kept, s_kept;

  {
    Eigen::VectorXd v0(n);
    for (Index i = 0; i < n; ++i) v0[i] = rng.normal();
    v0.normalize();
    V.col(0) = v0;
  }

  const double breakdown_tol = 1e-12;
  double inner_tol = opts.tol * 0.1;
  double achieved = std::numeric_limits<double>::infinity();

  Eigen::VectorXd w, y;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    // extend the Lanczos chain from column ell to m
    for (Index j = ell; j < m; ++j) {
      apply_shifted(L, V.col(j), w);
      if (j == ell && ell > 0) {
        subtract_combination(V, ell, s_kept, w);
      } else if (j > ell) {
        w -= beta[static_cast<std::size_t>(j)] * V.col(j - 1);
      }
      alpha[static_cast<std::size_t>(j)] = V.col(j).dot(w);
      w -= alpha[static_cast<std::size_t>(j)] * V.col(j);
      full_reorthogonalize(V, j + 1, w);
      const double b = w.norm();
      if (b > breakdown_tol) {
        beta[static_cast<std::size_t>(j) + 1] = b;
        V.col(j + 1) = w / b;
      } else {
        // invariant subspace found: record the structural zero and continue
        // in a fresh random direction (this is what resolves eigenvalue
        // multiplicities across connected components)
        beta[static_cast<std::size_t>(j) + 1] = 0.0;
        V.col(j + 1) = fresh_direction(rng, V, j + 1, n);
      }
    }

    // projected matrix: arrowhead over kept pairs + tridiagonal tail
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (Index i = 0; i < ell; ++i) {
      T(i, i) = theta_kept[i];
      T(i, ell) = T(ell, i) = s_kept[i];
    }
    for (Index j = ell; j < m; ++j) {
      T(j, j) = alpha[static_cast<std::size_t>(j)];
      if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = beta[static_cast<std::size_t>(j) + 1];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    if (es.info() != Eigen::Success)
      throw NumericError("projected eigendecomposition failed during Lanczos sweep " +
                         std::to_string(sweep));
    const Eigen::VectorXd& theta = es.eigenvalues();  // ascending
    const Eigen::MatrixXd& Q = es.eigenvectors();
    const double beta_res = beta[static_cast<std::size_t>(m)];

    // residual estimates |beta_m * last row of Q| for the top eta pairs
    Index unconverged = 0;
    double worst_est = 0.0;
    for (Index t = 0; t < eta; ++t) {
      const Index idx = m - 1 - t;
      const double est = std::abs(beta_res * Q(m - 1, idx));
      worst_est = std::max(worst_est, est);
      if (est > inner_tol) ++unconverged;
    }
    if (std::getenv("MPROP_EIG_TRACE"))
      std::fprintf(stderr, "sweep=%d ell=%td unconverged=%td worst_est=%.3e beta_res=%.3e\n",
                   sweep, ell, unconverged, worst_est, beta_res);

    bool reseed = false;
    if (unconverged == 0) {
      Index zeros = 0;
      for (Index t = 0; t < eta; ++t)
        if (2.0 - theta[m - 1 - t] < 1e-10) ++zeros;
      if (zeros < expected_zeros) {
        // a kernel copy from a disconnected component is outside this Krylov
        // space; random reseeding reaches it (whp) and it converges at the
        // top of the shifted spectrum
        reseed = true;
      } else {
        // candidate convergence: form Ritz vectors and verify true residuals
        std::vector<int> sel(static_cast<std::size_t>(eta));
        for (Index t = 0; t < eta; ++t)
          sel[static_cast<std::size_t>(t)] = static_cast<int>(m - 1 - t);  // theta desc = lambda asc
        RitzCandidate cand;
        cand.vectors = ritz_combination(V, m, Q, sel);
        cand.values.resize(eta);
        for (Index t = 0; t < eta; ++t) cand.values[t] = 2.0 - theta[m - 1 - t];
        achieved = max_residual(L, cand);
        if (achieved <= opts.tol) return cand;
        inner_tol *= 0.3;  // estimates were optimistic; keep sweeping
      }
    }

    // thick restart: keep the top block of Ritz pairs plus the residual
    // chain; on a reseed keep only pairs whose couplings are below tolerance
    // (zeroing them is then benign) so the chain can start from a fresh
    // random direction
    const Index keep = std::min<Index>(eta + (m - eta) / 2, m - 2);
    std::vector<int> keep_idx;
    keep_idx.reserve(static_cast<std::size_t>(keep));
    for (Index t = 0; t < keep; ++t) {
      const Index idx = m - 1 - t;
      if (reseed && std::abs(beta_res * Q(m - 1, idx)) > inner_tol) continue;
      keep_idx.push_back(static_cast<int>(idx));
    }
    // ascending theta order keeps the bookkeeping tidy
    std::reverse(keep_idx.begin(), keep_idx.end());

    Eigen::MatrixXd Y = ritz_combination(V, m, Q, keep_idx);
    const Index ell_new = static_cast<Index>(keep_idx.size());
    Eigen::VectorXd theta_new(ell_new), s_new(ell_new);
    for (Index i = 0; i < ell_new; ++i) {
      theta_new[i] = theta[keep_idx[static_cast<std::size_t>(i)]];
      s_new[i] = beta_res * Q(m - 1, keep_idx[static_cast<std::size_t>(i)]);
    }
    V.leftCols(ell_new) = Y;
    if (reseed) {
      s_new.setZero();
      V.col(ell_new) = fresh_direction(rng, V, ell_new, n);
    } else {
      V.col(ell_new) = V.col(m);
    }
    theta_kept = std::move(theta_new);
    s_kept = std::move(s_new);
    ell = ell_new;
  }

  throw NumericError("eigendecompose did not converge within " +
                     std::to_string(opts.max_sweeps) + " restarts; achieved residual " +
                     format_residual(achieved) + " vs required " + format_residual(opts.tol));
}

}  // namespace

SpectralModel eigendecompose(const CsrMatrix& laplacian, int eta, const EigsOptions& opts) {
  const Index n = laplacian.n;
  if (eta < 2 || eta > n)
    throw ArgumentError("eta must satisfy 2 <= eta <= n, got eta=" + std::to_string(eta) +
                        " n=" + std::to_string(n));

  if (opts.subspace > 0 && opts.subspace < eta + 2)
    throw ArgumentError("subspace must be at least eta + 2, got subspace=" +
                        std::to_string(opts.subspace) + " eta=" + std::to_string(eta));
  Index m = opts.subspace > 0 ? opts.subspace
                              : std::max<Index>(2 * static_cast<Index>(eta), eta + 40);
  if (m > n) m = n;

  const bool dense = n <= opts.dense_threshold || m >= n || eta >= n - 1;
  RitzCandidate cand = dense ? dense_eigendecompose(laplacian, eta)
                             : lanczos_eigendecompose(laplacian, eta, opts, m);

  // clamp roundoff excursions outside the normalized-Laplacian spectrum [0,2]
  for (Index j = 0; j < eta; ++j) {
    double& v = cand.values[j];
    if (v < -1e-8 || v > 2.0 + 1e-8)
      throw NumericError("computed eigenvalue " + std::to_string(v) +
                         " falls outside [0,2]; input is not a normalized Laplacian");
    v = std::min(std::max(v, 0.0), 2.0);
  }

  const double worst = max_residual(laplacian, cand);
  if (worst > opts.tol)
    throw NumericError("eigendecompose residual " + format_residual(worst) +
                       " exceeds tolerance " + format_residual(opts.tol));

  SpectralModel model;
  model.eta = eta;
  model.eigenvalues = std::move(cand.values);
  model.eigenvectors = std::move(cand.vectors);
  model.zero_tolerance = 1e-8 * model.eigenvalues[eta - 1];
  for (int j = 0; j < eta; ++j) {
    if (model.eigenvalues[j] <= model.zero_tolerance)
      model.dropped.push_back(j);
    if (j >= 1 && model.eigenvalues[j] > model.zero_tolerance)
      model.kept.push_back(j);
  }
  return model;
}

}  // namespace mprop
