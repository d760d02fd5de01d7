#include "metricprop/laplacian.hpp"

#include <cmath>

namespace mprop {

CsrMatrix normalized_laplacian(const SimilarityGraph& g) {
  const Index n = g.n();
  const Eigen::VectorXd d = g.weighted_degrees();
  for (Index i = 0; i < n; ++i)
    if (!(d[i] > 0.0))
      throw NumericError("vertex " + std::to_string(i) +
                         " is isolated (zero degree); the normalized Laplacian is undefined");
  Eigen::VectorXd inv_sqrt = d.cwiseSqrt().cwiseInverse();

  const CsrMatrix& w = g.adjacency();
  CsrMatrix L;
  L.n = n;
  L.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  L.col.reserve(static_cast<std::size_t>(w.nnz() + n));
  L.val.reserve(static_cast<std::size_t>(w.nnz() + n));
  for (Index i = 0; i < n; ++i) {
    Index p = w.row_ptr[i];
    const Index p_end = w.row_ptr[i + 1];
    // merge the unit diagonal into the sorted off-diagonal row
    bool diag_done = false;
    for (; p < p_end; ++p) {
      const Index j = w.col[p];
      if (!diag_done && j > i) {
        L.col.push_back(i);
        L.val.push_back(1.0);
        diag_done = true;
      }
      L.col.push_back(j);
      L.val.push_back(-w.val[p] * inv_sqrt[i] * inv_sqrt[j]);
    }
    if (!diag_done) {
      L.col.push_back(i);
      L.val.push_back(1.0);
    }
    L.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<Index>(L.col.size());
  }
  return L;
}

}  // namespace mprop
