#pragma once

#include <vector>

#include <Eigen/Core>

#include "metricprop/types.hpp"

namespace mprop {

// Minimal CSR matrix with deterministic row-parallel products: each output
// element is reduced sequentially in stored column order, so results do not
// depend on the worker-thread count.
struct CsrMatrix {
  Index n = 0;  // square
  std::vector<Index> row_ptr;   // size n+1
  std::vector<Index> col;       // size nnz, ascending within each row
  std::vector<double> val;      // size nnz

  Index nnz() const { return static_cast<Index>(col.size()); }

  // y = A x
  void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;

  // Y = A X (column-wise)
  Eigen::MatrixXd multiply(const Eigen::MatrixXd& X) const;

  // Entry lookup by binary search; 0.0 when absent.
  double at(Index i, Index j) const;

  Eigen::MatrixXd to_dense() const;
};

}  // namespace mprop
