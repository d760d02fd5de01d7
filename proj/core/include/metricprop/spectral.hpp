#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "metricprop/knn_graph.hpp"
#include "metricprop/laplacian.hpp"
#include "metricprop/sparse.hpp"

namespace mprop {

struct EigsOptions {
  // n at or below this uses a dense symmetric eigensolver; above it, thick
  // restart Lanczos on the shifted operator 2I - L (largest-eigenvalue form).
  // Tests force the iterative path by setting 0.
  Index dense_threshold = 512;
  double tol = 1e-8;        // required per-pair residual ||L e - lambda e||
  int max_sweeps = 500;     // restart budget for the iterative path
  std::uint64_t seed = 0x6d70726f70ULL;  // fixed start-vector seed, not user-facing
  int subspace = 0;         // Lanczos basis size; 0 = max(2*eta, eta + 40)
};

// The eta algebraically smallest eigenpairs of the normalized Laplacian,
// ascending, with the near-zero components identified.
struct SpectralModel {
  int eta = 0;
  Eigen::VectorXd eigenvalues;   // size eta, ascending, within [0, 2]
  Eigen::MatrixXd eigenvectors;  // n x eta, unit-norm columns
  std::vector<int> dropped;      // 0-based component indices with lambda <= zero_tolerance
  std::vector<int> kept;         // summation components: index >= 1 and lambda > zero_tolerance
  double zero_tolerance = 0.0;   // 1e-8 relative to the largest computed eigenvalue

  Index n() const { return eigenvectors.rows(); }
};

// Partial eigendecomposition of a sparse symmetric PSD matrix with spectrum
// in [0, 2]. Postconditions: residual <= opts.tol per pair, orthonormal
// vectors; throws NumericError carrying the achieved residual on
// non-convergence.
SpectralModel eigendecompose(const CsrMatrix& laplacian, int eta, const EigsOptions& opts = {});

// Convenience: normalized Laplacian + eigendecomposition of a graph.
SpectralModel build_spectral_model(const SimilarityGraph& g, int eta,
                                   const EigsOptions& opts = {});

// Dense embedded similarity: sum over kept components of (1/lambda_j) e_j e_j^T.
// Materialization is capped at n <= 20000; larger models must use the
// factored form. Throws NumericError when every component was dropped.
Eigen::MatrixXd spectral_embedding(const SpectralModel& m);

// Factored form U with columns e_j / sqrt(lambda_j) over kept components;
// the dense embedding equals U U^T.
Eigen::MatrixXd factored_embedding(const SpectralModel& m);

}  // namespace mprop
