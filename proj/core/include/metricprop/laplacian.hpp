#pragma once

#include "metricprop/knn_graph.hpp"
#include "metricprop/sparse.hpp"

namespace mprop {

// Symmetric normalized Laplacian L = I - D^{-1/2} W D^{-1/2} with
// D = diag(row sums of W). Diagonal entries are exactly 1. Throws
// NumericError naming the vertex if any node has zero degree.
CsrMatrix normalized_laplacian(const SimilarityGraph& g);

}  // namespace mprop
