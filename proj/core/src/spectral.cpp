#include <cmath>
#include <string>

#include "metricprop/parallel.hpp"
#include "metricprop/spectral.hpp"

namespace mprop {

SpectralModel build_spectral_model(const SimilarityGraph& g, int eta, const EigsOptions& opts) {
  return eigendecompose(normalized_laplacian(g), eta, opts);
}

Eigen::MatrixXd factored_embedding(const SpectralModel& m) {
  if (m.kept.empty())
    throw NumericError(
        "every spectral component was dropped (all eigenvalues at or below the zero "
        "tolerance); the embedded similarity is identically zero");
  const Index n = m.n();
  const Index cols = static_cast<Index>(m.kept.size());
  Eigen::MatrixXd U(n, cols);
  for (Index t = 0; t < cols; ++t) {
    const int j = m.kept[static_cast<std::size_t>(t)];
    U.col(t) = m.eigenvectors.col(j) / std::sqrt(m.eigenvalues[j]);
  }
  return U;
}

Eigen::MatrixXd spectral_embedding(const SpectralModel& m) {
  const Index n = m.n();
  if (n > 20000)
    throw ArgumentError("dense embedded similarity is capped at 20000 points, got " +
                        std::to_string(n) + "; use the factored form");
  const Eigen::MatrixXd Ut = factored_embedding(m).transpose();  // contiguous per-point columns
  const Index cols = Ut.rows();
  Eigen::MatrixXd W(n, n);
  parallel_for(n, [&](Index begin, Index end) {
    for (Index r = begin; r < end; ++r) {
      const double* ur = Ut.col(r).data();
      for (Index c = 0; c < n; ++c) {
        const double* uc = Ut.col(c).data();
        double s = 0.0;
        for (Index t = 0; t < cols; ++t) s += ur[t] * uc[t];
        W(r, c) = s;
      }
    }
  });
  return W;
}

}  // namespace mprop
