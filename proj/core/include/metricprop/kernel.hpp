#pragma once

#include <Eigen/Core>

#include "metricprop/types.hpp"

namespace mprop {

// Scalar similarity f(a, b): cosine in [-1, 1] or negative euclidean
// distance in (-inf, 0]. The scalar forms below are the reference
// implementations; the blocked graph builder selects neighbors with GEMM but
// re-evaluates final weights through these, so stored weights are identical
// to a naive scan.
double similarity(const float* a, const float* b, Index d, const KernelSpec& spec);
double similarity(const EmbeddingMatrix& e, Index i, Index j, const KernelSpec& spec);
double similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelSpec& spec);

// Similarity -> stored weight: exp(f) when spec.exponentiate, else f + 1
// (cosine only; negative euclidean without exponentiation is rejected by
// KernelSpec::validate).
double edge_weight(double sim, const KernelSpec& spec);

double dot(const float* a, const float* b, Index d);
double squared_norm(const float* a, Index d);

}  // namespace mprop
