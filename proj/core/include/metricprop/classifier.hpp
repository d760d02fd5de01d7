#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "metricprop/types.hpp"

namespace mprop {

// Multinomial logistic model: logits = weights * x + bias.
struct SoftmaxClassifier {
  Eigen::MatrixXd weights;  // C x d
  Eigen::VectorXd bias;     // C

  int num_classes() const { return static_cast<int>(weights.rows()); }
  Index d() const { return weights.cols(); }
};

struct ClassifierTrainConfig {
  double learning_rate = 1.0;
  int epochs = 3000;
  Index batch_size = 256;
  double l2 = 1e-4;  // decoupled weight decay; never applied to the bias
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

struct ClassifierLossGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad_weights;
  Eigen::VectorXd grad_bias;
};

// Confidence-weighted cross entropy: mean over the presented examples of
// -weight * log p(label). The mean divides by the presented count, including
// zero-weight examples, but a zero-weight example contributes exactly zero to
// both loss and gradient. Linear in the weights.
ClassifierLossGrad weighted_ce_loss_grad(const SoftmaxClassifier& clf, const EmbeddingMatrix& e,
                                         const std::vector<Index>& rows,
                                         const std::vector<int>& labels,
                                         const std::vector<double>& weights);

struct ClassifierTrainResult {
  SoftmaxClassifier model;
  std::vector<double> loss_curve;  // mean batch loss per epoch
};

// Minibatch gradient descent on true labels (weight 1) plus pseudo-labels
// (weight = confidence). The index sets must be disjoint. Examples whose
// weight is exactly zero are dropped before batching — they cannot influence
// the optimum, and removing them keeps runs with and without them identical
// under the same partitioning of the survivors.
ClassifierTrainResult train_classifier(const EmbeddingMatrix& e, const LabeledSet& labels,
                                       const PseudoLabelSet& pseudo,
                                       const ClassifierTrainConfig& cfg);

struct Predictions {
  std::vector<int> classes;         // argmax, ties to the lower class id
  Eigen::MatrixXd probabilities;    // n x C, rows sum to 1
};

Predictions predict(const SoftmaxClassifier& clf, const EmbeddingMatrix& e);

// Weight matrix as EMB1 (C rows of d), bias as one value per line.
void save_classifier(const SoftmaxClassifier& clf, const std::string& weights_path,
                     const std::string& bias_path);
SoftmaxClassifier load_classifier(const std::string& weights_path, const std::string& bias_path);

}  // namespace mprop
