#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "metricprop/sparse.hpp"
#include "metricprop/types.hpp"

namespace mprop {

struct GraphEdge {
  Index i;
  Index j;
  double w;
};

// Sparse symmetric nonnegative weight matrix over n points, stored CSR.
// Invariants: W_ij = W_ji, zero diagonal, every stored weight > 0; when built
// from a k-NN scan each row holds between 1 and 2k entries.
class SimilarityGraph {
 public:
  SimilarityGraph() = default;

  // Builds from undirected edges (each pair listed once, either orientation).
  // Validates positivity and no self-loops; throws FormatError on violation.
  static SimilarityGraph from_edges(Index n, int k, std::vector<GraphEdge> edges);

  Index n() const { return adj_.n; }
  int k() const { return k_; }
  const CsrMatrix& adjacency() const { return adj_; }

  double weight(Index i, Index j) const { return adj_.at(i, j); }
  Index degree_count(Index i) const { return adj_.row_ptr[i + 1] - adj_.row_ptr[i]; }

  // Weighted degree d_i = sum_j W_ij.
  Eigen::VectorXd weighted_degrees() const;

  // Undirected edge list, i < j, sorted by (i, j).
  std::vector<GraphEdge> edges() const;

 private:
  CsrMatrix adj_;
  int k_ = 0;
};

// Exact k-nearest-neighbor graph: for each point, edges to its k most
// similar other points (ties broken toward the lower index), weighted by
// edge_weight(similarity), symmetrized by union with max-weight merge.
// Exhaustive blocked scan — no approximation.
SimilarityGraph build_knn_graph(const EmbeddingMatrix& e, int k, const KernelSpec& spec);

// Dense n_u x n_t block of vote weights between unlabeled rows and labeled
// target rows: entry (u, t) = edge_weight(similarity(x_target[t], x_unl[u])).
Eigen::MatrixXd similarity_to_targets(const EmbeddingMatrix& e,
                                      const std::vector<Index>& unlabeled,
                                      const std::vector<Index>& targets,
                                      const KernelSpec& spec);

// Text dump: lines `i j w`, one per undirected edge with i < j, sorted.
void write_graph_dump(const SimilarityGraph& g, const std::string& path);

}  // namespace mprop
