#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "metricprop/spectral.hpp"
#include "metricprop/types.hpp"

namespace mprop {

// Class logits for a set of unlabeled points. Row r belongs to point
// unlabeled[r]; column c is the vote mass for class c.
struct PropagationResult {
  Eigen::MatrixXd logits;        // n_u x C
  std::vector<Index> unlabeled;  // global point index per row
  std::string method;            // "nn" or "spectral"
  std::string provenance;        // parameter summary for logs/dumps
};

// The voting rule shared by both propagation modes:
//   logits(u, c) = (1 / n_c) * sum over labeled examples t of class c of block(u, t)
// where block columns align with labels.entries() order. Throws ArgumentError
// when a class has no labeled example or the shapes disagree.
Eigen::MatrixXd vote_from_block(const Eigen::MatrixXd& block, const LabeledSet& labels);

// One-step voting over a precomputed similarity block (columns in
// labels.entries() order).
PropagationResult nn_propagate(const Eigen::MatrixXd& similarity_block, const LabeledSet& labels,
                               std::vector<Index> unlabeled);

// One-step voting straight from features: the block holds the kernel weight
// between every unlabeled point and every labeled point.
PropagationResult nn_propagate(const EmbeddingMatrix& e, const LabeledSet& labels,
                               const KernelSpec& spec);

// Multi-step propagation through the embedded similarity of a spectral model
// covering all n points. Uses the dense embedded matrix when n <= 20000 and
// the factored form above that; the two agree within 1e-8.
PropagationResult spectral_propagate(const SpectralModel& model, const LabeledSet& labels);

// Voting over an explicitly materialized embedded similarity (also the
// injection point for testing the shared voting path with raw kernel weights).
PropagationResult spectral_propagate_dense(const Eigen::MatrixXd& embedded,
                                           const LabeledSet& labels);

// Voting through the factored form U (embedded similarity U U^T) without
// materializing it.
PropagationResult spectral_propagate_factored(const Eigen::MatrixXd& factored,
                                              const LabeledSet& labels);

struct ChunkedParams {
  int k = 10;
  KernelSpec kernel;
  int eta = 200;
  EigsOptions eigs;
  int chunks = 1;
  std::uint64_t seed = 0;  // shuffle seed for the chunk partition
};

// Splits `unlabeled` into `chunks` contiguous shards of a seeded shuffle.
std::vector<std::vector<Index>> chunk_partition(const std::vector<Index>& unlabeled, int chunks,
                                                std::uint64_t seed);

// Spectral propagation sharded for scale: every chunk gets its own k-NN graph
// over (all labeled points + that shard of unlabeled points) and its own
// spectral model; results merge by point index. chunks=1 runs the ordinary
// whole-set pipeline and is bitwise identical to it.
PropagationResult chunked_propagate(const EmbeddingMatrix& e, const LabeledSet& labels,
                                    const ChunkedParams& params);

// Same, with the shards supplied by the caller (each shard a set of unlabeled
// point indices; together they must cover the unlabeled set exactly once).
PropagationResult chunked_propagate_with_partition(const EmbeddingMatrix& e,
                                                   const LabeledSet& labels,
                                                   const std::vector<std::vector<Index>>& shards,
                                                   const ChunkedParams& params);

}  // namespace mprop
