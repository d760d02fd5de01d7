#include "metricprop/propagate.hpp"

#include <algorithm>
#include <cmath>

#include "metricprop/kernel.hpp"
#include "metricprop/knn_graph.hpp"
#include "metricprop/parallel.hpp"
#include "metricprop/rng.hpp"

namespace mprop {

namespace {

void check_classes_populated(const LabeledSet& labels) {
  const auto& counts = labels.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] < 1)
      throw ArgumentError("class " + std::to_string(c) + " has no labeled examples");
}

std::string kernel_provenance(const KernelSpec& spec) {
  std::string s = "kernel=" + kernel_kind_name(spec.kind);
  if (!spec.exponentiate) s += " weights=shifted";
  return s;
}

}  // namespace

Eigen::MatrixXd vote_from_block(const Eigen::MatrixXd& block, const LabeledSet& labels) {
  check_classes_populated(labels);
  const auto& entries = labels.entries();
  if (block.cols() != static_cast<Index>(entries.size()))
    throw ArgumentError("similarity block has " + std::to_string(block.cols()) +
                        " columns but the labeled set has " + std::to_string(entries.size()) +
                        " examples");
  const int C = labels.num_classes();
  const auto& counts = labels.class_counts();
  const Index nu = block.rows();
  Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(nu, C);
  parallel_for(nu, [&](Index begin, Index end) {
    for (Index u = begin; u < end; ++u) {
      for (Index t = 0; t < static_cast<Index>(entries.size()); ++t)
        logits(u, entries[static_cast<std::size_t>(t)].class_id) += block(u, t);
      for (int c = 0; c < C; ++c) logits(u, c) /= static_cast<double>(counts[c]);
    }
  });
  return logits;
}

PropagationResult nn_propagate(const Eigen::MatrixXd& similarity_block, const LabeledSet& labels,
                               std::vector<Index> unlabeled) {
  if (similarity_block.rows() != static_cast<Index>(unlabeled.size()))
    throw ArgumentError("similarity block has " + std::to_string(similarity_block.rows()) +
                        " rows but " + std::to_string(unlabeled.size()) +
                        " unlabeled indices were given");
  PropagationResult r;
  r.logits = vote_from_block(similarity_block, labels);
  r.unlabeled = std::move(unlabeled);
  r.method = "nn";
  r.provenance = "direct similarity block";
  return r;
}

PropagationResult nn_propagate(const EmbeddingMatrix& e, const LabeledSet& labels,
                               const KernelSpec& spec) {
  std::vector<Index> targets;
  targets.reserve(static_cast<std::size_t>(labels.size()));
  for (const auto& entry : labels.entries()) {
    if (entry.index >= e.n())
      throw ArgumentError("labeled index " + std::to_string(entry.index) +
                          " outside embedding with " + std::to_string(e.n()) + " points");
    targets.push_back(entry.index);
  }
  std::vector<Index> unlabeled = labels.complement(e.n());
  Eigen::MatrixXd block = similarity_to_targets(e, unlabeled, targets, spec);
  PropagationResult r = nn_propagate(block, labels, std::move(unlabeled));
  r.provenance = kernel_provenance(spec);
  return r;
}

PropagationResult spectral_propagate_dense(const Eigen::MatrixXd& embedded,
                                           const LabeledSet& labels) {
  const Index n = embedded.rows();
  if (embedded.cols() != n) throw ArgumentError("embedded similarity must be square");
  const auto& entries = labels.entries();
  for (const auto& entry : entries)
    if (entry.index >= n)
      throw ArgumentError("labeled index " + std::to_string(entry.index) +
                          " outside model with " + std::to_string(n) + " points");
  std::vector<Index> unlabeled = labels.complement(n);
  const Index nu = static_cast<Index>(unlabeled.size());
  Eigen::MatrixXd block(nu, static_cast<Index>(entries.size()));
  parallel_for(nu, [&](Index begin, Index end) {
    for (Index u = begin; u < end; ++u)
      for (Index t = 0; t < static_cast<Index>(entries.size()); ++t)
        block(u, t) = embedded(entries[static_cast<std::size_t>(t)].index,
                               unlabeled[static_cast<std::size_t>(u)]);
  });
  PropagationResult r;
  r.logits = vote_from_block(block, labels);
  r.unlabeled = std::move(unlabeled);
  r.method = "spectral";
  r.provenance = "dense embedded similarity";
  return r;
}

PropagationResult spectral_propagate_factored(const Eigen::MatrixXd& factored,
                                              const LabeledSet& labels) {
  check_classes_populated(labels);
  const Index n = factored.rows();
  const Index cols = factored.cols();
  const auto& entries = labels.entries();
  for (const auto& entry : entries)
    if (entry.index >= n)
      throw ArgumentError("labeled index " + std::to_string(entry.index) +
                          " outside model with " + std::to_string(n) + " points");
  const int C = labels.num_classes();
  const auto& counts = labels.class_counts();

  // class centroids in the factored space: voting is linear, so the mean over
  // a class commutes with the U U^T product
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(cols, C);
  for (const auto& entry : entries) centroids.col(entry.class_id) += factored.row(entry.index);
  for (int c = 0; c < C; ++c) centroids.col(c) /= static_cast<double>(counts[c]);

  std::vector<Index> unlabeled = labels.complement(n);
  const Index nu = static_cast<Index>(unlabeled.size());
  Eigen::MatrixXd logits(nu, C);
  parallel_for(nu, [&](Index begin, Index end) {
    for (Index u = begin; u < end; ++u) {
      const Index p = unlabeled[static_cast<std::size_t>(u)];
      for (int c = 0; c < C; ++c) {
        double s = 0.0;
        for (Index t = 0; t < cols; ++t) s += factored(p, t) * centroids(t, c);
        logits(u, c) = s;
      }
    }
  });
  PropagationResult r;
  r.logits = std::move(logits);
  r.unlabeled = std::move(unlabeled);
  r.method = "spectral";
  r.provenance = "factored embedded similarity";
  return r;
}

PropagationResult spectral_propagate(const SpectralModel& model, const LabeledSet& labels) {
  PropagationResult r = model.n() <= 20000
                            ? spectral_propagate_dense(spectral_embedding(model), labels)
                            : spectral_propagate_factored(factored_embedding(model), labels);
  r.provenance = "eta=" + std::to_string(model.eta) + " kept=" + std::to_string(model.kept.size()) +
                 " dropped=" + std::to_string(model.dropped.size());
  return r;
}

std::vector<std::vector<Index>> chunk_partition(const std::vector<Index>& unlabeled, int chunks,
                                                std::uint64_t seed) {
  if (chunks < 1) throw ArgumentError("chunks must be >= 1, got " + std::to_string(chunks));
  std::vector<Index> order = unlabeled;
  Rng rng = Rng::for_stage(seed, "chunk-partition");
  rng.shuffle(order);
  const Index nu = static_cast<Index>(order.size());
  const Index base = nu / chunks;
  const Index extra = nu % chunks;
  std::vector<std::vector<Index>> shards(static_cast<std::size_t>(chunks));
  Index pos = 0;
  for (int s = 0; s < chunks; ++s) {
    const Index len = base + (s < extra ? 1 : 0);
    shards[static_cast<std::size_t>(s)].assign(order.begin() + pos, order.begin() + pos + len);
    pos += len;
  }
  return shards;
}

PropagationResult chunked_propagate_with_partition(const EmbeddingMatrix& e,
                                                   const LabeledSet& labels,
                                                   const std::vector<std::vector<Index>>& shards,
                                                   const ChunkedParams& params) {
  check_classes_populated(labels);
  const Index n = e.n();
  const Index d = e.d();
  std::vector<Index> unlabeled = labels.complement(n);
  const Index nu = static_cast<Index>(unlabeled.size());

  // every unlabeled point must appear in exactly one shard
  {
    std::vector<Index> covered;
    for (const auto& shard : shards) covered.insert(covered.end(), shard.begin(), shard.end());
    std::sort(covered.begin(), covered.end());
    if (covered != unlabeled)
      throw ArgumentError("chunk partition does not cover the unlabeled set exactly once");
  }

  // global unlabeled index -> output row
  std::vector<Index> row_of(static_cast<std::size_t>(n), -1);
  for (Index r = 0; r < nu; ++r) row_of[static_cast<std::size_t>(unlabeled[r])] = r;

  const int C = labels.num_classes();
  Eigen::MatrixXd logits(nu, C);
  const auto& entries = labels.entries();
  const Index nt = static_cast<Index>(entries.size());

  for (std::size_t s = 0; s < shards.size(); ++s) {
    const auto& shard = shards[s];
    if (shard.empty()) continue;
    const Index n_sub = nt + static_cast<Index>(shard.size());
    if (n_sub < static_cast<Index>(params.k) + 1)
      throw ArgumentError("chunk " + std::to_string(s) + " graph has only " +
                          std::to_string(n_sub) + " points (labeled + shard); need at least k+1 = " +
                          std::to_string(params.k + 1));

    // local layout: labeled points first (entries order), then the shard
    EmbeddingMatrix sub(n_sub, d);
    std::vector<LabeledEntry> local_entries;
    local_entries.reserve(static_cast<std::size_t>(nt));
    for (Index t = 0; t < nt; ++t) {
      const auto& entry = entries[static_cast<std::size_t>(t)];
      std::copy_n(e.data() + static_cast<std::size_t>(entry.index) * d, d,
                  sub.data() + static_cast<std::size_t>(t) * d);
      local_entries.push_back({t, entry.class_id});
    }
    for (std::size_t u = 0; u < shard.size(); ++u)
      std::copy_n(e.data() + static_cast<std::size_t>(shard[u]) * d, d,
                  sub.data() + (static_cast<std::size_t>(nt) + u) * d);
    LabeledSet local_labels(std::move(local_entries), C);

    SimilarityGraph g = build_knn_graph(sub, params.k, params.kernel);
    SpectralModel model = build_spectral_model(g, params.eta, params.eigs);
    PropagationResult part = spectral_propagate(model, local_labels);

    // local complement is exactly the shard block nt..n_sub-1 in order
    for (Index r = 0; r < static_cast<Index>(part.unlabeled.size()); ++r) {
      const Index global = shard[static_cast<std::size_t>(part.unlabeled[r] - nt)];
      logits.row(row_of[static_cast<std::size_t>(global)]) = part.logits.row(r);
    }
  }

  PropagationResult r;
  r.logits = std::move(logits);
  r.unlabeled = std::move(unlabeled);
  r.method = "spectral";
  r.provenance = kernel_provenance(params.kernel) + " k=" + std::to_string(params.k) +
                 " eta=" + std::to_string(params.eta) +
                 " chunks=" + std::to_string(shards.size());
  return r;
}

PropagationResult chunked_propagate(const EmbeddingMatrix& e, const LabeledSet& labels,
                                    const ChunkedParams& params) {
  if (params.chunks == 1) {
    // whole-set pipeline, bit-identical to running the stages directly
    SimilarityGraph g = build_knn_graph(e, params.k, params.kernel);
    SpectralModel model = build_spectral_model(g, params.eta, params.eigs);
    PropagationResult r = spectral_propagate(model, labels);
    r.provenance = kernel_provenance(params.kernel) + " k=" + std::to_string(params.k) +
                   " eta=" + std::to_string(params.eta) + " chunks=1";
    return r;
  }
  const std::vector<std::vector<Index>> shards =
      chunk_partition(labels.complement(e.n()), params.chunks, params.seed);
  return chunked_propagate_with_partition(e, labels, shards, params);
}

}  // namespace mprop
