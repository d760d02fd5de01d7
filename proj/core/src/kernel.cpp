#include "metricprop/kernel.hpp"

#include <cmath>

namespace mprop {

double dot(const float* a, const float* b, Index d) {
  double s = 0.0;
  for (Index j = 0; j < d; ++j) s += static_cast<double>(a[j]) * static_cast<double>(b[j]);
  return s;
}

double squared_norm(const float* a, Index d) { return dot(a, a, d); }

double similarity(const float* a, const float* b, Index d, const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::kCosine: {
      const double na = std::sqrt(squared_norm(a, d));
      const double nb = std::sqrt(squared_norm(b, d));
      if (na == 0.0 || nb == 0.0)
        throw ArgumentError("cosine similarity undefined for a zero vector");
      double c = dot(a, b, d) / (na * nb);
      if (c > 1.0) c = 1.0;
      if (c < -1.0) c = -1.0;
      return c;
    }
    case KernelKind::kNegativeEuclidean: {
      double s = 0.0;
      for (Index j = 0; j < d; ++j) {
        const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
        s += diff * diff;
      }
      return -std::sqrt(s);
    }
  }
  throw ArgumentError("unknown kernel kind");
}

double similarity(const EmbeddingMatrix& e, Index i, Index j, const KernelSpec& spec) {
  if (i < 0 || i >= e.n() || j < 0 || j >= e.n())
    throw ArgumentError("similarity index out of range");
  const float* base = e.data();
  return similarity(base + static_cast<std::size_t>(i) * e.d(),
                    base + static_cast<std::size_t>(j) * e.d(), e.d(), spec);
}

double similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelSpec& spec) {
  if (a.size() != b.size())
    throw ArgumentError("similarity dimension mismatch: " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
  switch (spec.kind) {
    case KernelKind::kCosine: {
      const double na = a.norm();
      const double nb = b.norm();
      if (na == 0.0 || nb == 0.0)
        throw ArgumentError("cosine similarity undefined for a zero vector");
      double c = a.dot(b) / (na * nb);
      if (c > 1.0) c = 1.0;
      if (c < -1.0) c = -1.0;
      return c;
    }
    case KernelKind::kNegativeEuclidean:
      return -(a - b).norm();
  }
  throw ArgumentError("unknown kernel kind");
}

double edge_weight(double sim, const KernelSpec& spec) {
  if (spec.exponentiate) return std::exp(sim);
  // validated: only cosine reaches here; shift maps [-1,1] onto [0,2]
  return sim + 1.0;
}

}  // namespace mprop
