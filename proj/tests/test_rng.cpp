#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include <metricprop/rng.hpp>

using namespace mprop;

TEST_CASE("same seed and stage reproduce the stream bit for bit") {
  Rng a = Rng::for_stage(42, "metric-train");
  Rng b = Rng::for_stage(42, "metric-train");
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
  }
}

TEST_CASE("different stages decorrelate even under the same seed") {
  Rng a = Rng::for_stage(42, "metric-train");
  Rng b = Rng::for_stage(42, "classifier-train");
  int agree = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++agree;
  CHECK(agree == 0);
}

TEST_CASE("different seeds decorrelate within a stage") {
  Rng a = Rng::for_stage(1, "gen-synthetic");
  Rng b = Rng::for_stage(2, "gen-synthetic");
  int agree = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++agree;
  CHECK(agree == 0);
}

TEST_CASE("uniform stays in [0,1) and fills the range") {
  Rng rng(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("uniform_int is bounded and hits every residue") {
  Rng rng(7);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t v = rng.uniform_int(10);
    REQUIRE(v < 10);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) CHECK(c > 800);  // crude uniformity
}

TEST_CASE("normal has roughly standard moments") {
  Rng rng(123);
  const int n = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation and deterministic") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  Rng a(9), b(9);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(50);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sorted == expect);
  // and it actually moved something
  bool moved = false;
  for (int i = 0; i < 50; ++i) moved |= v[static_cast<std::size_t>(i)] != i;
  CHECK(moved);
}
