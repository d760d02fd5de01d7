#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "metricprop/propagate.hpp"
#include "metricprop/types.hpp"

namespace mprop {

struct ConfidenceParams {
  double temperature = 40.0;     // softmax sharpness
  double alpha_threshold = 0.01;  // discard cutoff on the margin

  // temperature > 0, threshold in [0, 1); throws ConfigError.
  void validate() const;
};

// Temperature softmax with max subtraction: exp((z - max z) / t), normalized.
// Entries are positive and sum to 1 within 1e-12.
Eigen::VectorXd normalize_logits(const Eigen::VectorXd& z, double temperature);

// Margin confidence: largest probability minus second largest. Requires at
// least two classes.
double margin_confidence(const Eigen::VectorXd& probabilities);

// Pseudo-labels with the low-confidence records filtered out. `all` holds the
// unfiltered records; `kept` is the subset with confidence >= threshold.
struct PseudoLabelOutcome {
  PseudoLabelSet kept;
  std::vector<PseudoLabelRecord> all;
  Index discarded = 0;
};

// Per row: label = argmax of the logits (ties to the lower class id),
// confidence = margin of the temperature softmax. Rows with confidence below
// params.alpha_threshold are excluded from `kept` and counted.
PseudoLabelOutcome pseudo_label(const PropagationResult& p, const ConfidenceParams& params);

// Two-line CSV: kept/discarded counts plus a 10-bin histogram of all
// confidences over [0,1].
std::string confidence_summary_csv(const PseudoLabelOutcome& o);

}  // namespace mprop
