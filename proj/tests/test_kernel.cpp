#include <doctest.h>

#include <cmath>

#include <metricprop/kernel.hpp>
#include <metricprop/rng.hpp>

using namespace mprop;

namespace {

EmbeddingMatrix random_points(Index n, Index d, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingMatrix e(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) e.at(i, j) = static_cast<float>(rng.normal());
  return e;
}

}  // namespace

TEST_CASE("cosine similarity basics") {
  EmbeddingMatrix e(4, 2);
  e.at(0, 0) = 1.0f;
  e.at(0, 1) = 0.0f;
  e.at(1, 0) = 0.0f;
  e.at(1, 1) = 2.0f;  // orthogonal to row 0
  e.at(2, 0) = -3.0f;
  e.at(2, 1) = 0.0f;  // antipodal to row 0
  e.at(3, 0) = 5.0f;
  e.at(3, 1) = 0.0f;  // parallel to row 0
  KernelSpec spec{KernelKind::kCosine, false};
  CHECK(similarity(e, 0, 1, spec) == doctest::Approx(0.0));
  CHECK(similarity(e, 0, 2, spec) == doctest::Approx(-1.0));
  CHECK(similarity(e, 0, 3, spec) == doctest::Approx(1.0));
  // scale invariance: row 3 is a scaled row 0
  CHECK(similarity(e, 1, 0, spec) == similarity(e, 1, 3, spec));
}

TEST_CASE("cosine stays clamped to [-1,1] for near-parallel float rows") {
  EmbeddingMatrix e = random_points(30, 7, 5);
  // duplicate row 0 so the pair is exactly parallel after float storage
  for (Index j = 0; j < 7; ++j) e.at(1, j) = e.at(0, j);
  KernelSpec spec{KernelKind::kCosine, false};
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 30; ++j) {
      if (i == j) continue;
      const double s = similarity(e, i, j, spec);
      CHECK(s <= 1.0);
      CHECK(s >= -1.0);
    }
  CHECK(similarity(e, 0, 1, spec) == 1.0);
}

TEST_CASE("cosine rejects the zero row") {
  EmbeddingMatrix e(2, 3);
  e.at(0, 0) = 1.0f;
  KernelSpec spec{KernelKind::kCosine, false};
  CHECK_THROWS_AS(similarity(e, 0, 1, spec), NumericError);
}

TEST_CASE("negative euclidean matches the naive distance") {
  EmbeddingMatrix e = random_points(10, 4, 9);
  KernelSpec spec{KernelKind::kNegativeEuclidean, true};
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 10; ++j) {
      double sq = 0.0;
      for (Index t = 0; t < 4; ++t) {
        const double diff = static_cast<double>(e.at(i, t)) - static_cast<double>(e.at(j, t));
        sq += diff * diff;
      }
      CHECK(similarity(e, i, j, spec) == doctest::Approx(-std::sqrt(sq)).epsilon(1e-12));
    }
}

TEST_CASE("edge weights are positive for every legal configuration") {
  KernelSpec cos_exp{KernelKind::kCosine, true};
  KernelSpec cos_shift{KernelKind::kCosine, false};
  KernelSpec euc_exp{KernelKind::kNegativeEuclidean, true};
  CHECK(edge_weight(1.0, cos_exp) == doctest::Approx(std::exp(1.0)));
  CHECK(edge_weight(-1.0, cos_exp) == doctest::Approx(std::exp(-1.0)));
  CHECK(edge_weight(0.25, cos_shift) == doctest::Approx(1.25));
  CHECK(edge_weight(-7.0, euc_exp) == doctest::Approx(std::exp(-7.0)));
  // shifted cosine hits zero exactly at the antipodal pair
  CHECK(edge_weight(-1.0, cos_shift) == 0.0);
}

TEST_CASE("kernel spec validation") {
  KernelSpec bad{KernelKind::kNegativeEuclidean, false};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  KernelSpec fine{KernelKind::kNegativeEuclidean, true};
  CHECK_NOTHROW(fine.validate());
}

TEST_CASE("kernel kind names round-trip") {
  CHECK(parse_kernel_kind(kernel_kind_name(KernelKind::kCosine)) == KernelKind::kCosine);
  CHECK(parse_kernel_kind(kernel_kind_name(KernelKind::kNegativeEuclidean)) ==
        KernelKind::kNegativeEuclidean);
  CHECK_THROWS_AS(parse_kernel_kind("chebyshev"), ConfigError);
}
