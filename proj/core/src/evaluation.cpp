#include "metricprop/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "metricprop/io.hpp"
#include "metricprop/rng.hpp"

namespace mprop {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

RankedCorrectness RankedCorrectness::from_pseudo_labels(const PseudoLabelSet& set,
                                                        const std::vector<int>& truth) {
  RankedCorrectness r;
  r.items.reserve(static_cast<std::size_t>(set.size()));
  for (const auto& rec : set.records()) {
    if (rec.index >= static_cast<Index>(truth.size()))
      throw ArgumentError("pseudo-labeled index " + std::to_string(rec.index) +
                          " has no ground-truth label");
    r.items.push_back({rec.confidence,
                       truth[static_cast<std::size_t>(rec.index)] == rec.pseudo_label, rec.index});
  }
  std::sort(r.items.begin(), r.items.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.index < b.index;
  });
  return r;
}

std::vector<std::pair<double, double>> accumulated_accuracy(const RankedCorrectness& r) {
  if (r.items.empty()) throw ArgumentError("accumulated accuracy of an empty ranking is undefined");
  const std::size_t n = r.items.size();
  std::vector<std::pair<double, double>> curve;
  curve.reserve(n);
  Index correct = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (r.items[t].correct) ++correct;
    curve.emplace_back(static_cast<double>(t + 1) / static_cast<double>(n),
                       static_cast<double>(correct) / static_cast<double>(t + 1));
  }
  return curve;
}

MapResult pseudo_label_map(const PseudoLabelSet& set, const std::vector<int>& truth,
                           int num_classes) {
  if (num_classes < 1) throw ArgumentError("need at least one class");
  for (const auto& rec : set.records())
    if (rec.index >= static_cast<Index>(truth.size()))
      throw ArgumentError("pseudo-labeled index " + std::to_string(rec.index) +
                          " has no ground-truth label");

  MapResult out;
  out.per_class_ap.assign(static_cast<std::size_t>(num_classes),
                          std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  int scored = 0;
  std::vector<RankedItem> ranked;
  for (int c = 0; c < num_classes; ++c) {
    ranked.clear();
    for (const auto& rec : set.records())
      if (rec.pseudo_label == c)
        ranked.push_back({rec.confidence, truth[static_cast<std::size_t>(rec.index)] == c,
                          rec.index});
    std::sort(ranked.begin(), ranked.end(), [](const RankedItem& a, const RankedItem& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      return a.index < b.index;
    });
    Index relevant = 0;
    double precision_sum = 0.0;
    for (std::size_t t = 0; t < ranked.size(); ++t) {
      if (!ranked[t].correct) continue;
      ++relevant;
      precision_sum += static_cast<double>(relevant) / static_cast<double>(t + 1);
    }
    if (relevant == 0) {
      out.skipped.push_back(c);
      continue;
    }
    const double ap = precision_sum / static_cast<double>(relevant);
    out.per_class_ap[static_cast<std::size_t>(c)] = ap;
    sum += ap;
    ++scored;
  }
  out.map = scored > 0 ? sum / scored : 0.0;
  return out;
}

SyntheticKind parse_synthetic_kind(const std::string& name) {
  if (name == "two-moons") return SyntheticKind::kTwoMoons;
  if (name == "gaussian-blobs") return SyntheticKind::kGaussianBlobs;
  throw ConfigError("unknown dataset kind '" + name + "' (two-moons, gaussian-blobs)");
}

std::string synthetic_kind_name(SyntheticKind kind) {
  return kind == SyntheticKind::kTwoMoons ? "two-moons" : "gaussian-blobs";
}

SyntheticData gen_synthetic(SyntheticKind kind, Index n, double noise, int num_classes,
                            std::uint64_t seed, Index d) {
  if (num_classes < 1) throw ArgumentError("need at least one class");
  if (n < 2 * num_classes)
    throw ArgumentError("need n >= 2C, got n=" + std::to_string(n) + " C=" +
                        std::to_string(num_classes));
  if (!(noise >= 0.0) || !std::isfinite(noise))
    throw ArgumentError("noise must be >= 0, got " + std::to_string(noise));
  Rng rng = Rng::for_stage(seed, "gen-synthetic");
  SyntheticData out;

  if (kind == SyntheticKind::kTwoMoons) {
    if (num_classes != 2) throw ArgumentError("two-moons is a two-class dataset");
    if (d != 2) throw ArgumentError("two-moons lives in two dimensions");
    out.points = EmbeddingMatrix(n, 2);
    out.truth.resize(static_cast<std::size_t>(n));
    const Index n0 = (n + 1) / 2;  // first crescent gets the odd point
    for (Index i = 0; i < n; ++i) {
      const bool lower = i < n0;
      const Index within = lower ? i : i - n0;
      const Index count = lower ? n0 : n - n0;
      const double t = count > 1 ? kPi * static_cast<double>(within) / (count - 1) : 0.0;
      // two interleaved crescents with an ideal gap of 0.3: wide enough for a
      // clean spectral split at small noise, close enough that the boundary
      // stays contested rather than falling into separate components
      double x = lower ? std::cos(t) : 1.0 - std::cos(t);
      double y = lower ? std::sin(t) : 0.7 - std::sin(t);
      x += noise * rng.normal();
      y += noise * rng.normal();
      out.points.at(i, 0) = static_cast<float>(x);
      out.points.at(i, 1) = static_cast<float>(y);
      out.truth[static_cast<std::size_t>(i)] = lower ? 0 : 1;
    }
    return out;
  }

  if (d < 1) throw ArgumentError("need d >= 1, got " + std::to_string(d));
  out.points = EmbeddingMatrix(n, d);
  out.truth.resize(static_cast<std::size_t>(n));
  // class centers: unit circle when planar, otherwise scaled axis vectors
  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(num_classes, d);
  for (int c = 0; c < num_classes; ++c) {
    if (d == 2) {
      const double angle = 2.0 * kPi * c / num_classes;
      centers(c, 0) = std::cos(angle);
      centers(c, 1) = std::sin(angle);
    } else {
      centers(c, c % d) = 1.0 + static_cast<double>(c / d);
    }
  }
  for (Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % num_classes);
    for (Index j = 0; j < d; ++j)
      out.points.at(i, j) = static_cast<float>(centers(c, j) + noise * rng.normal());
    out.truth[static_cast<std::size_t>(i)] = c;
  }
  return out;
}

LabeledSet split_labeled(const std::vector<int>& truth, Index per_class, std::uint64_t seed) {
  if (truth.empty()) throw ArgumentError("cannot split an empty label vector");
  if (per_class < 1) throw ArgumentError("per-class count must be >= 1");
  int num_classes = 0;
  for (const int c : truth) {
    if (c < 0) throw ArgumentError("negative class id in ground truth");
    num_classes = std::max(num_classes, c + 1);
  }
  Rng rng = Rng::for_stage(seed, "split-labeled");
  std::vector<LabeledEntry> entries;
  entries.reserve(static_cast<std::size_t>(per_class) * static_cast<std::size_t>(num_classes));
  std::vector<Index> members;
  for (int c = 0; c < num_classes; ++c) {
    members.clear();
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (truth[i] == c) members.push_back(static_cast<Index>(i));
    if (static_cast<Index>(members.size()) < per_class)
      throw ArgumentError("class " + std::to_string(c) + " has " +
                          std::to_string(members.size()) + " points, fewer than per-class " +
                          std::to_string(per_class));
    rng.shuffle(members);
    for (Index t = 0; t < per_class; ++t)
      entries.push_back({members[static_cast<std::size_t>(t)], c});
  }
  return LabeledSet(std::move(entries), num_classes);
}

void write_accuracy_curve_csv(const std::vector<std::pair<double, double>>& curve,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& [coverage, accuracy] : curve)
    out << format_double(coverage) << ',' << format_double(accuracy) << '\n';
  if (!out) throw IoError("short write to " + path);
}

void write_map_csv(const MapResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (std::size_t c = 0; c < result.per_class_ap.size(); ++c) {
    if (std::isnan(result.per_class_ap[c]))
      out << c << ",skipped\n";
    else
      out << c << ',' << format_double(result.per_class_ap[c]) << '\n';
  }
  out << "map," << format_double(result.map) << '\n';
  if (!out) throw IoError("short write to " + path);
}

}  // namespace mprop
