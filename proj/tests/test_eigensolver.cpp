#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <vector>

#include "metricprop/knn_graph.hpp"
#include "metricprop/laplacian.hpp"
#include "metricprop/parallel.hpp"
#include "metricprop/rng.hpp"
#include "metricprop/spectral.hpp"

using mprop::CsrMatrix;
using mprop::EigsOptions;
using mprop::EmbeddingMatrix;
using mprop::GraphEdge;
using mprop::Index;
using mprop::SimilarityGraph;
using mprop::SpectralModel;

namespace {

EmbeddingMatrix random_points(Index n, Index d, std::uint64_t seed) {
  EmbeddingMatrix e(n, d);
  mprop::Rng rng = mprop::Rng::for_stage(seed, "eig-test-points");
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) e.at(i, j) = static_cast<float>(rng.normal());
  return e;
}

void append_ring(std::vector<GraphEdge>& edges, Index offset, Index len, double w) {
  for (Index i = 0; i < len; ++i) edges.push_back({offset + i, offset + (i + 1) % len, w});
}

void append_path(std::vector<GraphEdge>& edges, Index offset, Index len, double w) {
  for (Index i = 0; i + 1 < len; ++i) edges.push_back({offset + i, offset + i + 1, w});
}

Eigen::VectorXd dense_reference(const CsrMatrix& L, int eta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.to_dense());
  REQUIRE(es.info() == Eigen::Success);
  return es.eigenvalues().head(eta);
}

double pair_residual(const CsrMatrix& L, const SpectralModel& m, int j) {
  return (L.multiply(Eigen::VectorXd(m.eigenvectors.col(j))) -
          m.eigenvalues[j] * m.eigenvectors.col(j))
      .norm();
}

void check_model_contract(const CsrMatrix& L, const SpectralModel& m, double tol) {
  const int eta = m.eta;
  REQUIRE(m.eigenvalues.size() == eta);
  REQUIRE(m.eigenvectors.cols() == eta);
  REQUIRE(m.eigenvectors.rows() == L.n);
  for (int j = 1; j < eta; ++j) CHECK(m.eigenvalues[j] >= m.eigenvalues[j - 1]);
  CHECK(m.eigenvalues.minCoeff() >= 0.0);
  CHECK(m.eigenvalues.maxCoeff() <= 2.0);
  for (int j = 0; j < eta; ++j) CHECK(pair_residual(L, m, j) <= tol);
  const Eigen::MatrixXd gram = m.eigenvectors.transpose() * m.eigenvectors;
  CHECK((gram - Eigen::MatrixXd::Identity(eta, eta)).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(m.zero_tolerance == 1e-8 * m.eigenvalues[eta - 1]);
  // dropped and kept partition indices 0..eta-1
  std::vector<bool> seen(static_cast<std::size_t>(eta), false);
  for (const int j : m.dropped) {
    CHECK(m.eigenvalues[j] <= m.zero_tolerance);
    seen[static_cast<std::size_t>(j)] = true;
  }
  for (const int j : m.kept) {
    CHECK(j >= 1);
    CHECK(m.eigenvalues[j] > m.zero_tolerance);
    CHECK(!seen[static_cast<std::size_t>(j)]);
    seen[static_cast<std::size_t>(j)] = true;
  }
  for (int j = 1; j < eta; ++j) CHECK(seen[static_cast<std::size_t>(j)]);
}

}  // namespace

TEST_CASE("iterative solver matches a dense solve on knn graphs") {
  EigsOptions opts;
  opts.dense_threshold = 0;  // force the Lanczos path
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Index n = 130 + static_cast<Index>(seed) * 20;
    const SimilarityGraph g = mprop::build_knn_graph(random_points(n, 6, seed), 5, {});
    const CsrMatrix L = mprop::normalized_laplacian(g);
    const int eta = 12;
    const SpectralModel m = mprop::eigendecompose(L, eta, opts);
    check_model_contract(L, m, opts.tol);
    const Eigen::VectorXd ref = dense_reference(L, eta);
    for (int j = 0; j < eta; ++j) CHECK(std::abs(m.eigenvalues[j] - ref[j]) <= 1e-8);
  }
}

TEST_CASE("dense path satisfies the same contract") {
  const SimilarityGraph g = mprop::build_knn_graph(random_points(80, 5, 9), 4, {});
  const CsrMatrix L = mprop::normalized_laplacian(g);
  const SpectralModel m = mprop::eigendecompose(L, 10, {});  // n=80 <= dense threshold
  check_model_contract(L, m, 1e-8);
  const Eigen::VectorXd ref = dense_reference(L, 10);
  for (int j = 0; j < 10; ++j) CHECK(std::abs(m.eigenvalues[j] - ref[j]) <= 1e-10);
}

TEST_CASE("dense and iterative paths agree on the same graph") {
  const SimilarityGraph g = mprop::build_knn_graph(random_points(150, 5, 4), 5, {});
  const CsrMatrix L = mprop::normalized_laplacian(g);
  EigsOptions force_iterative;
  force_iterative.dense_threshold = 0;
  const SpectralModel a = mprop::eigendecompose(L, 9, {});
  const SpectralModel b = mprop::eigendecompose(L, 9, force_iterative);
  for (int j = 0; j < 9; ++j) CHECK(std::abs(a.eigenvalues[j] - b.eigenvalues[j]) <= 1e-8);
  CHECK(a.dropped == b.dropped);
  CHECK(a.kept == b.kept);
}

TEST_CASE("zero multiplicity equals the component count") {
  // three structurally different components: ring + ring + path
  std::vector<GraphEdge> edges;
  append_ring(edges, 0, 60, 1.0);
  append_ring(edges, 60, 45, 0.8);
  append_path(edges, 105, 40, 1.3);
  const SimilarityGraph g = SimilarityGraph::from_edges(145, 2, std::move(edges));
  const CsrMatrix L = mprop::normalized_laplacian(g);
  EigsOptions opts;
  opts.dense_threshold = 0;
  const int eta = 8;
  const SpectralModel m = mprop::eigendecompose(L, eta, opts);
  check_model_contract(L, m, opts.tol);
  CHECK(static_cast<Index>(m.dropped.size()) == 3);
  const Eigen::VectorXd ref = dense_reference(L, eta);
  for (int j = 0; j < eta; ++j) CHECK(std::abs(m.eigenvalues[j] - ref[j]) <= 1e-8);
}

TEST_CASE("identical twin components still count their kernel copies") {
  // Two isomorphic rings: every eigenvalue is (at least) doubly degenerate.
  // The solver guarantees the full set of zero copies and true eigenpairs;
  // nonzero degeneracies may resolve as any valid members of the spectrum.
  std::vector<GraphEdge> edges;
  append_ring(edges, 0, 30, 1.0);
  append_ring(edges, 30, 30, 1.0);
  const SimilarityGraph g = SimilarityGraph::from_edges(60, 2, std::move(edges));
  const CsrMatrix L = mprop::normalized_laplacian(g);
  EigsOptions opts;
  opts.dense_threshold = 0;
  const SpectralModel m = mprop::eigendecompose(L, 6, opts);
  check_model_contract(L, m, opts.tol);
  CHECK(static_cast<Index>(m.dropped.size()) == 2);
  // every computed value sits on the true spectrum
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.to_dense());
  for (int j = 0; j < 6; ++j) {
    double best = 2.0;
    for (Index t = 0; t < es.eigenvalues().size(); ++t)
      best = std::min(best, std::abs(m.eigenvalues[j] - es.eigenvalues()[t]));
    CHECK(best <= 1e-8);
  }
}

TEST_CASE("worker count does not change the result") {
  const SimilarityGraph g = mprop::build_knn_graph(random_points(150, 6, 12), 5, {});
  const CsrMatrix L = mprop::normalized_laplacian(g);
  EigsOptions opts;
  opts.dense_threshold = 0;
  mprop::set_max_threads(1);
  const SpectralModel a = mprop::eigendecompose(L, 10, opts);
  mprop::set_max_threads(5);
  const SpectralModel b = mprop::eigendecompose(L, 10, opts);
  mprop::set_max_threads(0);
  REQUIRE(a.eigenvalues.size() == b.eigenvalues.size());
  for (int j = 0; j < 10; ++j) {
    CHECK(a.eigenvalues[j] == b.eigenvalues[j]);
    CHECK((a.eigenvectors.col(j) - b.eigenvectors.col(j)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("repeated runs are bitwise identical") {
  const SimilarityGraph g = mprop::build_knn_graph(random_points(140, 5, 21), 5, {});
  const CsrMatrix L = mprop::normalized_laplacian(g);
  EigsOptions opts;
  opts.dense_threshold = 0;
  const SpectralModel a = mprop::eigendecompose(L, 8, opts);
  const SpectralModel b = mprop::eigendecompose(L, 8, opts);
  for (int j = 0; j < 8; ++j) {
    CHECK(a.eigenvalues[j] == b.eigenvalues[j]);
    CHECK((a.eigenvectors.col(j) - b.eigenvectors.col(j)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("small subspace still converges") {
  const SimilarityGraph g = mprop::build_knn_graph(random_points(90, 5, 33), 4, {});
  const CsrMatrix L = mprop::normalized_laplacian(g);
  EigsOptions opts;
  opts.dense_threshold = 0;
  opts.subspace = 16;  // well under the default floor of eta + 40
  const SpectralModel m = mprop::eigendecompose(L, 4, opts);
  check_model_contract(L, m, opts.tol);
  const Eigen::VectorXd ref = dense_reference(L, 4);
  for (int j = 0; j < 4; ++j) CHECK(std::abs(m.eigenvalues[j] - ref[j]) <= 1e-8);
}

TEST_CASE("convenience builder equals the two explicit stages") {
  const SimilarityGraph g = mprop::build_knn_graph(random_points(70, 4, 5), 4, {});
  const SpectralModel a = mprop::build_spectral_model(g, 6, {});
  const SpectralModel b = mprop::eigendecompose(mprop::normalized_laplacian(g), 6, {});
  for (int j = 0; j < 6; ++j) {
    CHECK(a.eigenvalues[j] == b.eigenvalues[j]);
    CHECK((a.eigenvectors.col(j) - b.eigenvectors.col(j)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("argument validation") {
  const SimilarityGraph g = mprop::build_knn_graph(random_points(40, 4, 2), 3, {});
  const CsrMatrix L = mprop::normalized_laplacian(g);

  SUBCASE("eta below two") {
    CHECK_THROWS_AS(mprop::eigendecompose(L, 1, {}), mprop::ArgumentError);
  }
  SUBCASE("eta above n") {
    CHECK_THROWS_AS(mprop::eigendecompose(L, 41, {}), mprop::ArgumentError);
  }
  SUBCASE("subspace too small for eta") {
    EigsOptions opts;
    opts.subspace = 5;
    CHECK_THROWS_AS(mprop::eigendecompose(L, 4, opts), mprop::ArgumentError);
  }
}

TEST_CASE("restart budget exhaustion reports the achieved residual") {
  std::vector<GraphEdge> edges;
  append_ring(edges, 0, 100, 1.0);
  const SimilarityGraph g = SimilarityGraph::from_edges(100, 2, std::move(edges));
  const CsrMatrix L = mprop::normalized_laplacian(g);
  EigsOptions opts;
  opts.dense_threshold = 0;
  opts.max_sweeps = 0;
  try {
    mprop::eigendecompose(L, 5, opts);
    FAIL("expected NumericError when no sweeps are allowed");
  } catch (const mprop::NumericError& err) {
    CHECK(std::string(err.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("spectrum outside [0,2] is rejected") {
  // 3I is symmetric PSD but no normalized Laplacian
  CsrMatrix A;
  A.n = 5;
  A.row_ptr = {0, 1, 2, 3, 4, 5};
  A.col = {0, 1, 2, 3, 4};
  A.val.assign(5, 3.0);
  CHECK_THROWS_AS(mprop::eigendecompose(A, 2, {}), mprop::NumericError);
}
