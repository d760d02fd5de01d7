#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "metricprop/types.hpp"

namespace mprop {

struct RankedItem {
  double confidence;
  bool correct;
  Index index;  // tiebreaker for equal confidences
};

// Pseudo-labels ordered by confidence descending (ties by point index
// ascending), each marked correct against the ground truth.
struct RankedCorrectness {
  std::vector<RankedItem> items;

  static RankedCorrectness from_pseudo_labels(const PseudoLabelSet& set,
                                              const std::vector<int>& truth);
};

// Curve point t (1-based) = (t/n, fraction correct among the t most
// confident). The final point is the overall accuracy. Throws on empty input.
std::vector<std::pair<double, double>> accumulated_accuracy(const RankedCorrectness& r);

struct MapResult {
  double map = 0.0;                  // mean AP over scored classes
  std::vector<double> per_class_ap;  // one entry per class; NaN where skipped
  std::vector<int> skipped;          // classes with no correctly labeled point
};

// Per class: rank the points pseudo-labeled as that class by confidence
// descending and average the precision at each correctly-labeled rank.
// Classes with zero correctly-labeled points are skipped and reported.
MapResult pseudo_label_map(const PseudoLabelSet& set, const std::vector<int>& truth,
                           int num_classes);

enum class SyntheticKind { kTwoMoons, kGaussianBlobs };

SyntheticKind parse_synthetic_kind(const std::string& name);  // throws ConfigError
std::string synthetic_kind_name(SyntheticKind kind);

struct SyntheticData {
  EmbeddingMatrix points;
  std::vector<int> truth;  // class per row
};

// Deterministic synthetic datasets with class counts balanced within one.
// Two interleaved crescents (d must be 2, C must be 2) or isotropic Gaussian
// blobs around separated centers in d dimensions.
SyntheticData gen_synthetic(SyntheticKind kind, Index n, double noise, int num_classes,
                            std::uint64_t seed, Index d = 2);

// Stratified sample: per_class points from every class, deterministic under
// the seed.
LabeledSet split_labeled(const std::vector<int>& truth, Index per_class, std::uint64_t seed);

// Plot-ready CSV dumps: `coverage,accuracy` per line; per-class AP lines
// `class,ap` (skipped classes print `class,skipped`) then a final `map,<v>`.
void write_accuracy_curve_csv(const std::vector<std::pair<double, double>>& curve,
                              const std::string& path);
void write_map_csv(const MapResult& result, const std::string& path);

}  // namespace mprop
