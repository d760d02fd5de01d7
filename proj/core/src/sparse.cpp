#include "metricprop/sparse.hpp"

#include <algorithm>

#include "metricprop/parallel.hpp"

namespace mprop {

void CsrMatrix::multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  y.resize(n);
  parallel_for(n, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      double s = 0.0;
      for (Index p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += val[p] * x[col[p]];
      y[i] = s;
    }
  });
}

Eigen::VectorXd CsrMatrix::multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y;
  multiply(x, y);
  return y;
}

Eigen::MatrixXd CsrMatrix::multiply(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd Y(n, X.cols());
  parallel_for(n, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i)
      for (Index c = 0; c < X.cols(); ++c) {
        double s = 0.0;
        for (Index p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += val[p] * X(col[p], c);
        Y(i, c) = s;
      }
  });
  return Y;
}

double CsrMatrix::at(Index i, Index j) const {
  const auto begin = col.begin() + row_ptr[i];
  const auto end = col.begin() + row_ptr[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return val[static_cast<std::size_t>(it - col.begin())];
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index p = row_ptr[i]; p < row_ptr[i + 1]; ++p) D(i, col[p]) = val[p];
  return D;
}

}  // namespace mprop
