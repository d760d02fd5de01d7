#include "metricprop/types.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace mprop {

EmbeddingMatrix::EmbeddingMatrix(Index n, Index d) : n_(n), d_(d) {
  if (n < 1 || d < 1)
    throw ArgumentError("embedding matrix needs n >= 1 and d >= 1, got n=" +
                        std::to_string(n) + " d=" + std::to_string(d));
  data_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(d), 0.0f);
}

EmbeddingMatrix EmbeddingMatrix::from_data(Index n, Index d, std::vector<float> data) {
  EmbeddingMatrix m(n, d);
  if (data.size() != m.data_.size())
    throw ArgumentError("embedding payload size " + std::to_string(data.size()) +
                        " does not match n*d = " + std::to_string(m.data_.size()));
  m.data_ = std::move(data);
  m.check_finite();
  return m;
}

Eigen::VectorXd EmbeddingMatrix::row(Index i) const {
  Eigen::VectorXd r(d_);
  const float* p = data_.data() + static_cast<std::size_t>(i) * d_;
  for (Index j = 0; j < d_; ++j) r[j] = static_cast<double>(p[j]);
  return r;
}

Eigen::MatrixXd EmbeddingMatrix::as_double() const {
  return map().cast<double>();
}

Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
EmbeddingMatrix::map() const {
  return {data_.data(), n_, d_};
}

void EmbeddingMatrix::check_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      const Index r = static_cast<Index>(i) / d_;
      const Index c = static_cast<Index>(i) % d_;
      throw FormatError("non-finite embedding entry at row " + std::to_string(r) +
                        " col " + std::to_string(c));
    }
  }
}

LabeledSet::LabeledSet(std::vector<LabeledEntry> entries, int num_classes)
    : entries_(std::move(entries)), num_classes_(num_classes) {
  if (num_classes_ < 1)
    throw ArgumentError("labeled set needs at least one class");
  class_counts_.assign(static_cast<std::size_t>(num_classes_), 0);
  std::unordered_set<Index> seen;
  seen.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (e.index < 0)
      throw FormatError("negative labeled index " + std::to_string(e.index));
    if (e.class_id < 0 || e.class_id >= num_classes_)
      throw FormatError("class id " + std::to_string(e.class_id) + " out of range [0," +
                        std::to_string(num_classes_) + ") at index " +
                        std::to_string(e.index));
    if (!seen.insert(e.index).second)
      throw FormatError("duplicate labeled index " + std::to_string(e.index));
    ++class_counts_[static_cast<std::size_t>(e.class_id)];
  }
}

std::vector<double> LabeledSet::dense_label_row(Index e) const {
  if (e < 0 || e >= size()) throw ArgumentError("labeled entry out of range");
  std::vector<double> row(static_cast<std::size_t>(num_classes_), -1.0);
  row[static_cast<std::size_t>(entries_[static_cast<std::size_t>(e)].class_id)] = 1.0;
  return row;
}

bool LabeledSet::contains(Index point_index) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const LabeledEntry& e) { return e.index == point_index; });
}

std::vector<Index> LabeledSet::sorted_indices() const {
  std::vector<Index> idx;
  idx.reserve(entries_.size());
  for (const auto& e : entries_) idx.push_back(e.index);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<Index> LabeledSet::complement(Index n) const {
  std::vector<bool> labeled(static_cast<std::size_t>(n), false);
  for (const auto& e : entries_) {
    if (e.index >= n)
      throw ArgumentError("labeled index " + std::to_string(e.index) +
                          " outside point range [0," + std::to_string(n) + ")");
    labeled[static_cast<std::size_t>(e.index)] = true;
  }
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(n) - entries_.size());
  for (Index i = 0; i < n; ++i)
    if (!labeled[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

PseudoLabelSet::PseudoLabelSet(std::vector<PseudoLabelRecord> records)
    : records_(std::move(records)) {
  std::unordered_set<Index> seen;
  seen.reserve(records_.size());
  for (const auto& r : records_) {
    if (r.index < 0)
      throw FormatError("negative pseudo-label index " + std::to_string(r.index));
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
      throw FormatError("confidence " + std::to_string(r.confidence) +
                        " outside [0,1] at index " + std::to_string(r.index));
    if (!seen.insert(r.index).second)
      throw FormatError("duplicate pseudo-label index " + std::to_string(r.index));
  }
}

void PseudoLabelSet::check_disjoint(const LabeledSet& labeled) const {
  std::unordered_set<Index> lab;
  lab.reserve(labeled.entries().size());
  for (const auto& e : labeled.entries()) lab.insert(e.index);
  for (const auto& r : records_)
    if (lab.count(r.index))
      throw FormatError("pseudo-label index " + std::to_string(r.index) +
                        " collides with the labeled set");
}

void KernelSpec::validate() const {
  if (kind == KernelKind::kNegativeEuclidean && !exponentiate)
    throw ConfigError(
        "negative-euclidean weights must be exponentiated: raw values are <= 0 "
        "and cannot form a nonnegative graph");
}

std::string kernel_kind_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::kCosine: return "cosine";
    case KernelKind::kNegativeEuclidean: return "negative-euclidean";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "cosine") return KernelKind::kCosine;
  if (name == "negative-euclidean") return KernelKind::kNegativeEuclidean;
  throw ConfigError("unknown kernel kind '" + name +
                    "' (expected cosine or negative-euclidean)");
}

}  // namespace mprop
