#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "metricprop/evaluation.hpp"
#include "metricprop/kernel.hpp"
#include "metricprop/knn_graph.hpp"
#include "metricprop/rng.hpp"

using mprop::EmbeddingMatrix;
using mprop::Index;
using mprop::LabeledSet;
using mprop::MapResult;
using mprop::PseudoLabelRecord;
using mprop::PseudoLabelSet;
using mprop::RankedCorrectness;
using mprop::SyntheticData;
using mprop::SyntheticKind;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "metricprop-test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// pseudo-labels over points 0..n-1 with random confidences and ~60% hits
PseudoLabelSet random_pseudo(Index n, int C, std::vector<int>& truth, std::uint64_t seed) {
  mprop::Rng rng = mprop::Rng::for_stage(seed, "eval-test-pseudo");
  truth.resize(static_cast<std::size_t>(n));
  std::vector<PseudoLabelRecord> recs;
  recs.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    truth[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(C));
    const bool hit = rng.uniform() < 0.6;
    const int guess = hit ? truth[static_cast<std::size_t>(i)]
                          : static_cast<int>(rng.uniform_int(C));
    recs.push_back({i, guess, rng.uniform()});
  }
  return PseudoLabelSet(std::move(recs));
}

}  // namespace

TEST_CASE("accumulated accuracy counts prefixes of the ranking") {
  SUBCASE("three-item hand example") {
    RankedCorrectness r;
    r.items = {{0.9, true, 0}, {0.8, true, 1}, {0.7, false, 2}};
    const auto curve = mprop::accumulated_accuracy(r);
    REQUIRE(curve.size() == 3);
    CHECK(curve[0] == std::pair{1.0 / 3.0, 1.0});
    CHECK(curve[1] == std::pair{2.0 / 3.0, 1.0});
    CHECK(curve[2] == std::pair{1.0, 2.0 / 3.0});
  }
  SUBCASE("all correct gives a constant curve") {
    RankedCorrectness r;
    for (Index i = 0; i < 25; ++i) r.items.push_back({1.0 - 0.01 * i, true, i});
    for (const auto& [coverage, accuracy] : mprop::accumulated_accuracy(r))
      CHECK(accuracy == 1.0);
  }
  SUBCASE("random instance equals a prefix-sum recount") {
    std::vector<int> truth;
    const PseudoLabelSet set = random_pseudo(1000, 4, truth, 11);
    const RankedCorrectness r = RankedCorrectness::from_pseudo_labels(set, truth);
    const auto curve = mprop::accumulated_accuracy(r);
    REQUIRE(curve.size() == 1000);
    Index correct = 0;
    for (std::size_t t = 0; t < r.items.size(); ++t) {
      if (r.items[t].correct) ++correct;
      CHECK(curve[t].first == static_cast<double>(t + 1) / 1000.0);
      CHECK(curve[t].second == static_cast<double>(correct) / static_cast<double>(t + 1));
    }
  }
  SUBCASE("final point is the overall accuracy exactly") {
    std::vector<int> truth;
    const PseudoLabelSet set = random_pseudo(350, 3, truth, 12);
    Index hits = 0;
    for (const auto& rec : set.records())
      if (truth[static_cast<std::size_t>(rec.index)] == rec.pseudo_label) ++hits;
    const auto curve =
        mprop::accumulated_accuracy(RankedCorrectness::from_pseudo_labels(set, truth));
    CHECK(curve.back().first == 1.0);
    CHECK(curve.back().second == static_cast<double>(hits) / 350.0);
  }
  SUBCASE("empty ranking is rejected") {
    CHECK_THROWS_AS(mprop::accumulated_accuracy(RankedCorrectness{}), mprop::ArgumentError);
  }
}

TEST_CASE("ranking sorts by confidence descending with index tiebreaks") {
  std::vector<PseudoLabelRecord> recs{
      {4, 0, 0.5}, {1, 0, 0.9}, {3, 0, 0.5}, {0, 0, 0.1}, {2, 0, 0.5}};
  std::vector<int> truth{0, 1, 0, 1, 0};
  const RankedCorrectness r =
      RankedCorrectness::from_pseudo_labels(PseudoLabelSet(std::move(recs)), truth);
  REQUIRE(r.items.size() == 5);
  std::vector<Index> order;
  for (const auto& item : r.items) order.push_back(item.index);
  CHECK(order == std::vector<Index>{1, 2, 3, 4, 0});  // 0.9, then the 0.5 tie by index, then 0.1
  CHECK(r.items[0].correct == false);  // truth[1] = 1, guessed 0
  CHECK(r.items[1].correct == true);
  CHECK_THROWS_AS(
      RankedCorrectness::from_pseudo_labels(PseudoLabelSet({{9, 0, 0.5}}), truth),
      mprop::ArgumentError);
}

TEST_CASE("mean average precision follows the per-class ranked definition") {
  SUBCASE("single class with ranked correctness 1,0,1") {
    // ranks: hit at 1 (precision 1/1) and 3 (precision 2/3) -> AP = 5/6
    PseudoLabelSet set({{0, 0, 0.9}, {1, 0, 0.8}, {2, 0, 0.7}});
    std::vector<int> truth{0, 1, 0};
    const MapResult res = mprop::pseudo_label_map(set, truth, 1);
    CHECK(res.map == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    REQUIRE(res.per_class_ap.size() == 1);
    CHECK(res.per_class_ap[0] == res.map);
    CHECK(res.skipped.empty());
  }
  SUBCASE("perfect labeling scores 1 regardless of confidences") {
    std::vector<int> truth;
    mprop::Rng rng = mprop::Rng::for_stage(21, "eval-test-perfect");
    std::vector<PseudoLabelRecord> recs;
    truth.resize(200);
    for (Index i = 0; i < 200; ++i) {
      truth[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(3));
      recs.push_back({i, truth[static_cast<std::size_t>(i)], rng.uniform()});
    }
    const MapResult res = mprop::pseudo_label_map(PseudoLabelSet(std::move(recs)), truth, 3);
    CHECK(res.map == 1.0);
    for (const double ap : res.per_class_ap) CHECK(ap == 1.0);
  }
  SUBCASE("a class with no correct points is skipped and reported") {
    // class 1's only candidates are wrong; class 0 is clean
    PseudoLabelSet set({{0, 0, 0.9}, {1, 0, 0.8}, {2, 1, 0.7}, {3, 1, 0.6}});
    std::vector<int> truth{0, 0, 0, 0};
    const MapResult res = mprop::pseudo_label_map(set, truth, 2);
    CHECK(res.skipped == std::vector<int>{1});
    REQUIRE(res.per_class_ap.size() == 2);
    CHECK(res.per_class_ap[0] == 1.0);
    CHECK(std::isnan(res.per_class_ap[1]));
    CHECK(res.map == 1.0);  // mean over scored classes only
  }
  SUBCASE("invariant under strictly monotone confidence maps") {
    std::vector<int> truth;
    const PseudoLabelSet set = random_pseudo(300, 3, truth, 31);
    const MapResult base = mprop::pseudo_label_map(set, truth, 3);
    // strictly increasing bijections of [0,1] onto itself
    const auto monotone = [](int which, double x) {
      switch (which) {
        case 0: return x * x;
        case 1: return std::sqrt(x);
        default: return std::tanh(3.0 * x) / std::tanh(3.0);
      }
    };
    for (int which = 0; which < 3; ++which) {
      std::vector<PseudoLabelRecord> mapped;
      for (const auto& rec : set.records())
        mapped.push_back({rec.index, rec.pseudo_label, monotone(which, rec.confidence)});
      const MapResult res = mprop::pseudo_label_map(PseudoLabelSet(std::move(mapped)), truth, 3);
      CHECK(res.map == base.map);  // rank-based: identical arithmetic, bitwise equal
      CHECK(res.skipped == base.skipped);
    }
  }
  SUBCASE("validation") {
    std::vector<int> truth{0, 1};
    CHECK_THROWS_AS(mprop::pseudo_label_map(PseudoLabelSet({{5, 0, 0.5}}), truth, 2),
                    mprop::ArgumentError);
    CHECK_THROWS_AS(mprop::pseudo_label_map(PseudoLabelSet({{0, 0, 0.5}}), truth, 0),
                    mprop::ArgumentError);
  }
}

TEST_CASE("synthetic datasets are deterministic under the seed") {
  SUBCASE("two moons") {
    const SyntheticData a = mprop::gen_synthetic(SyntheticKind::kTwoMoons, 301, 0.08, 2, 5, 2);
    const SyntheticData b = mprop::gen_synthetic(SyntheticKind::kTwoMoons, 301, 0.08, 2, 5, 2);
    const SyntheticData c = mprop::gen_synthetic(SyntheticKind::kTwoMoons, 301, 0.08, 2, 6, 2);
    CHECK(a.points.map() == b.points.map());
    CHECK(a.truth == b.truth);
    CHECK(a.points.map() != c.points.map());
    // class counts balanced within one: 151 in the first crescent, 150 in the second
    CHECK(std::count(a.truth.begin(), a.truth.end(), 0) == 151);
    CHECK(std::count(a.truth.begin(), a.truth.end(), 1) == 150);
  }
  SUBCASE("gaussian blobs") {
    const SyntheticData a = mprop::gen_synthetic(SyntheticKind::kGaussianBlobs, 100, 0.3, 3, 7, 5);
    const SyntheticData b = mprop::gen_synthetic(SyntheticKind::kGaussianBlobs, 100, 0.3, 3, 7, 5);
    CHECK(a.points.map() == b.points.map());
    CHECK(a.truth == b.truth);
    for (int c = 0; c < 3; ++c) {
      const auto count = std::count(a.truth.begin(), a.truth.end(), c);
      CHECK(count >= 33);
      CHECK(count <= 34);
    }
  }
}

TEST_CASE("zero-noise blobs sit on their centers and neighbor within class") {
  const Index n = 30;
  const int C = 3;
  const SyntheticData data =
      mprop::gen_synthetic(SyntheticKind::kGaussianBlobs, n, 0.0, C, 13, 4);
  // all points of a class coincide, so any k below the per-class count (10)
  // finds only same-class neighbors
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (data.truth[static_cast<std::size_t>(i)] == data.truth[static_cast<std::size_t>(j)])
        for (Index col = 0; col < 4; ++col) CHECK(data.points.at(i, col) == data.points.at(j, col));
  mprop::KernelSpec kern;
  kern.kind = mprop::KernelKind::kNegativeEuclidean;
  const mprop::SimilarityGraph g = mprop::build_knn_graph(data.points, 9, kern);
  for (const auto& edge : g.edges())
    CHECK(data.truth[static_cast<std::size_t>(edge.i)] ==
          data.truth[static_cast<std::size_t>(edge.j)]);
}

TEST_CASE("moons at low noise support accurate nearest-neighbor classification") {
  // frozen threshold: 1-NN from 50 labels per class on n=1000, noise=0.05
  const SyntheticData data = mprop::gen_synthetic(SyntheticKind::kTwoMoons, 1000, 0.05, 2, 38, 2);
  const LabeledSet labels = mprop::split_labeled(data.truth, 50, 38);
  Index hits = 0, total = 0;
  for (Index i = 0; i < data.points.n(); ++i) {
    if (labels.contains(i)) continue;
    double best = std::numeric_limits<double>::infinity();
    int vote = -1;
    for (const auto& entry : labels.entries()) {
      double dist = 0.0;
      for (Index j = 0; j < 2; ++j) {
        const double diff = static_cast<double>(data.points.at(i, j)) -
                            static_cast<double>(data.points.at(entry.index, j));
        dist += diff * diff;
      }
      if (dist < best) {
        best = dist;
        vote = entry.class_id;
      }
    }
    if (vote == data.truth[static_cast<std::size_t>(i)]) ++hits;
    ++total;
  }
  CHECK(total == 900);
  CHECK(static_cast<double>(hits) / static_cast<double>(total) >= 0.95);
}

TEST_CASE("synthetic generation rejects invalid parameters") {
  using mprop::gen_synthetic;
  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::kGaussianBlobs, 5, 0.1, 3, 1, 2),
                  mprop::ArgumentError);  // n < 2C
  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::kTwoMoons, 50, -0.1, 2, 1, 2),
                  mprop::ArgumentError);
  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::kTwoMoons, 50, 0.1, 3, 1, 2),
                  mprop::ArgumentError);  // moons are two-class
  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::kTwoMoons, 50, 0.1, 2, 1, 3),
                  mprop::ArgumentError);  // moons are planar
  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::kGaussianBlobs, 50, 0.1, 2, 1, 0),
                  mprop::ArgumentError);
  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::kGaussianBlobs, 50, 0.1, 0, 1, 2),
                  mprop::ArgumentError);
}

TEST_CASE("stratified splits are deterministic class-subsets") {
  const SyntheticData data =
      mprop::gen_synthetic(SyntheticKind::kGaussianBlobs, 90, 0.4, 3, 17, 3);
  SUBCASE("counts, membership, and determinism") {
    const LabeledSet a = mprop::split_labeled(data.truth, 7, 17);
    const LabeledSet b = mprop::split_labeled(data.truth, 7, 17);
    REQUIRE(a.size() == 21);
    CHECK(a.class_counts() == std::vector<Index>{7, 7, 7});
    for (const auto& entry : a.entries())
      CHECK(entry.class_id == data.truth[static_cast<std::size_t>(entry.index)]);
    REQUIRE(b.size() == a.size());
    for (std::size_t t = 0; t < a.entries().size(); ++t) {
      CHECK(a.entries()[t].index == b.entries()[t].index);
      CHECK(a.entries()[t].class_id == b.entries()[t].class_id);
    }
  }
  SUBCASE("labeled and unlabeled sets partition the points") {
    const LabeledSet labels = mprop::split_labeled(data.truth, 5, 23);
    const std::vector<Index> rest = labels.complement(90);
    CHECK(rest.size() == 90 - 15);
    for (const Index i : rest) CHECK(!labels.contains(i));
  }
  SUBCASE("taking every point labels everything") {
    std::vector<int> truth{0, 1, 0, 1, 0, 1};
    const LabeledSet all = mprop::split_labeled(truth, 3, 3);
    CHECK(all.size() == 6);
    CHECK(all.complement(6).empty());
  }
  SUBCASE("one per class on two classes gives two labels") {
    std::vector<int> truth{0, 1, 0, 1};
    CHECK(mprop::split_labeled(truth, 1, 9).size() == 2);
  }
  SUBCASE("validation") {
    std::vector<int> truth{0, 0, 1};
    CHECK_THROWS_AS(mprop::split_labeled(truth, 2, 1), mprop::ArgumentError);  // class 1 too small
    CHECK_THROWS_AS(mprop::split_labeled({}, 1, 1), mprop::ArgumentError);
    CHECK_THROWS_AS(mprop::split_labeled({0, -1}, 1, 1), mprop::ArgumentError);
    CHECK_THROWS_AS(mprop::split_labeled(truth, 0, 1), mprop::ArgumentError);
  }
}

TEST_CASE("dataset kind names round-trip") {
  CHECK(mprop::parse_synthetic_kind("two-moons") == SyntheticKind::kTwoMoons);
  CHECK(mprop::parse_synthetic_kind("gaussian-blobs") == SyntheticKind::kGaussianBlobs);
  CHECK(mprop::synthetic_kind_name(SyntheticKind::kTwoMoons) == "two-moons");
  CHECK(mprop::synthetic_kind_name(SyntheticKind::kGaussianBlobs) == "gaussian-blobs");
  CHECK_THROWS_AS(mprop::parse_synthetic_kind("spirals"), mprop::ConfigError);
}

TEST_CASE("metric CSV dumps use the documented layouts") {
  SUBCASE("accuracy curve") {
    const std::string path = temp_path("curve.csv");
    mprop::write_accuracy_curve_csv({{0.5, 1.0}, {1.0, 0.75}}, path);
    CHECK(slurp(path) == "0.5,1\n1,0.75\n");
  }
  SUBCASE("per-class AP with a skipped class") {
    MapResult res;
    res.map = 0.25;
    res.per_class_ap = {0.25, std::numeric_limits<double>::quiet_NaN()};
    res.skipped = {1};
    const std::string path = temp_path("map.csv");
    mprop::write_map_csv(res, path);
    CHECK(slurp(path) == "0,0.25\n1,skipped\nmap,0.25\n");
  }
}
