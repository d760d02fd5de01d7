#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "metricprop/types.hpp"

namespace mprop {

// Linear metric model: features map through A, similarities are cosines of
// the mapped rows divided by the temperature.
struct LinearEmbedder {
  Eigen::MatrixXd A;          // d_out x d_in
  double temperature = 0.07;  // scale inside s_ij; external convention, not derived here
  bool normalize = true;      // embed() projects rows to the unit sphere

  Index d_in() const { return A.cols(); }
  Index d_out() const { return A.rows(); }
};

enum class MetricObjective { kInstance, kNca };

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 100;
  Index batch_size = 64;
  std::uint64_t seed = 0;
  MetricObjective objective = MetricObjective::kInstance;

  void validate() const;  // throws ConfigError
};

// Gaussian init scaled by 1/sqrt(d_in), from the "metric-init" RNG stage.
LinearEmbedder random_embedder(Index d_out, Index d_in, std::uint64_t seed,
                               double temperature = 0.07, bool normalize = true);

// Rows mapped through A (and unit-normalized when the embedder says so),
// rounded to the storage precision.
EmbeddingMatrix embed(const LinearEmbedder& m, const EmbeddingMatrix& e);

// Self-recognition objective over a batch: each example should be the nearest
// neighbor of itself under the learned similarity. Loss is the mean negative
// log probability of picking self among the batch; gradient is with respect
// to A.
std::pair<double, Eigen::MatrixXd> instance_loss_grad(const LinearEmbedder& m,
                                                      const EmbeddingMatrix& e,
                                                      const std::vector<Index>& batch);

// Neighborhood analysis objective: probability mass of same-class batch
// members (self excluded) over all other batch members. Every batch example
// needs at least one other member of its class.
std::pair<double, Eigen::MatrixXd> nca_loss_grad(const LinearEmbedder& m,
                                                 const EmbeddingMatrix& e, const LabeledSet& labels,
                                                 const std::vector<Index>& batch);

struct MetricTrainResult {
  LinearEmbedder embedder;
  std::vector<double> loss_curve;  // mean batch loss per epoch
};

// Minibatch gradient descent from the given starting point. The nca objective
// trains full-batch over the labeled set (desk-scale sets are too small to
// shard); instance uses shuffled minibatches of cfg.batch_size over all rows.
// Throws NumericError naming the epoch if the loss stops being finite.
MetricTrainResult train(const LinearEmbedder& init, const EmbeddingMatrix& e,
                        const LabeledSet* labels, const TrainConfig& cfg);

// Matrix as an EMB1 file (d_out rows of d_in) plus a one-line metadata CSV
// (d_in, d_out, normalize, temperature).
void save_embedder(const LinearEmbedder& m, const std::string& matrix_path,
                   const std::string& meta_path);
LinearEmbedder load_embedder(const std::string& matrix_path, const std::string& meta_path);

}  // namespace mprop
