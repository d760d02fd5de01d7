#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "metricprop/errors.hpp"

namespace mprop {

using Index = std::int64_t;

// Dense n x d feature matrix. Storage is float32 row-major so that binary
// serialization round-trips bitwise; all numerics upcast to double on use.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(Index n, Index d);

  // Validates shape and finiteness; throws FormatError on violation.
  static EmbeddingMatrix from_data(Index n, Index d, std::vector<float> data);

  Index n() const { return n_; }
  Index d() const { return d_; }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  float& at(Index i, Index j) { return data_[static_cast<std::size_t>(i) * d_ + j]; }
  float at(Index i, Index j) const { return data_[static_cast<std::size_t>(i) * d_ + j]; }

  // Row i as a double-precision vector.
  Eigen::VectorXd row(Index i) const;

  // Whole matrix as double precision (n x d).
  Eigen::MatrixXd as_double() const;

  // Map over the raw float storage.
  Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  map() const;

  void check_finite() const;  // throws FormatError naming the first bad entry

 private:
  Index n_ = 0;
  Index d_ = 0;
  std::vector<float> data_;
};

struct LabeledEntry {
  Index index;
  int class_id;
};

// Indices into an EmbeddingMatrix with class assignments in 0..C-1.
class LabeledSet {
 public:
  LabeledSet() = default;
  // Validates uniqueness and class range; throws FormatError on violation.
  LabeledSet(std::vector<LabeledEntry> entries, int num_classes);

  const std::vector<LabeledEntry>& entries() const { return entries_; }
  int num_classes() const { return num_classes_; }
  Index size() const { return static_cast<Index>(entries_.size()); }

  // Count of labeled examples per class (n_{t,c}); one entry per class id.
  const std::vector<Index>& class_counts() const { return class_counts_; }

  // Dense +1/-1 label row for entry e: ground-truth element +1, others -1.
  std::vector<double> dense_label_row(Index e) const;

  bool contains(Index point_index) const;

  // Sorted labeled indices.
  std::vector<Index> sorted_indices() const;

  // All indices in [0, n) not present in this set, ascending.
  std::vector<Index> complement(Index n) const;

 private:
  std::vector<LabeledEntry> entries_;
  int num_classes_ = 0;
  std::vector<Index> class_counts_;
};

struct PseudoLabelRecord {
  Index index;
  int pseudo_label;
  double confidence;  // in [0,1]
};

// Pseudo-labels with margin confidences for (a subset of) unlabeled points.
class PseudoLabelSet {
 public:
  PseudoLabelSet() = default;
  explicit PseudoLabelSet(std::vector<PseudoLabelRecord> records);

  const std::vector<PseudoLabelRecord>& records() const { return records_; }
  Index size() const { return static_cast<Index>(records_.size()); }

  // Throws FormatError if any record's index collides with the labeled set.
  void check_disjoint(const LabeledSet& labeled) const;

 private:
  std::vector<PseudoLabelRecord> records_;
};

enum class KernelKind { kCosine, kNegativeEuclidean };

struct KernelSpec {
  KernelKind kind = KernelKind::kCosine;
  bool exponentiate = true;  // edge/vote weights are exp(f) when set

  // Throws ConfigError for kernel/weight combinations that cannot produce a
  // valid nonnegative graph (negative-euclidean without exponentiation).
  void validate() const;
};

std::string kernel_kind_name(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& name);  // throws ConfigError

}  // namespace mprop
