#include "metricprop/knn_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "metricprop/io.hpp"
#include "metricprop/kernel.hpp"
#include "metricprop/parallel.hpp"

namespace mprop {

SimilarityGraph SimilarityGraph::from_edges(Index n, int k, std::vector<GraphEdge> edges) {
  if (n < 1) throw ArgumentError("graph needs n >= 1");
  for (const auto& e : edges) {
    if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n)
      throw FormatError("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                        ") outside point range");
    if (e.i == e.j)
      throw FormatError("self-loop at node " + std::to_string(e.i));
    if (!(e.w > 0.0) || !std::isfinite(e.w))
      throw FormatError("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                        ") has non-positive weight " + std::to_string(e.w));
  }
  // scatter both orientations, then sort rows; duplicates collapse by max
  std::vector<GraphEdge> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& e : edges) {
    directed.push_back({e.i, e.j, e.w});
    directed.push_back({e.j, e.i, e.w});
  }
  std::sort(directed.begin(), directed.end(), [](const GraphEdge& a, const GraphEdge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  SimilarityGraph g;
  g.k_ = k;
  g.adj_.n = n;
  g.adj_.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  g.adj_.col.reserve(directed.size());
  g.adj_.val.reserve(directed.size());
  Index prev_i = -1, prev_j = -1;
  for (const auto& e : directed) {
    if (e.i == prev_i && e.j == prev_j) {
      // same (i,j) listed twice: keep the max weight
      if (e.w > g.adj_.val.back()) g.adj_.val.back() = e.w;
      continue;
    }
    g.adj_.col.push_back(e.j);
    g.adj_.val.push_back(e.w);
    ++g.adj_.row_ptr[static_cast<std::size_t>(e.i) + 1];
    prev_i = e.i;
    prev_j = e.j;
  }
  for (Index i = 0; i < n; ++i)
    g.adj_.row_ptr[static_cast<std::size_t>(i) + 1] += g.adj_.row_ptr[static_cast<std::size_t>(i)];
  return g;
}

Eigen::VectorXd SimilarityGraph::weighted_degrees() const {
  Eigen::VectorXd d(adj_.n);
  for (Index i = 0; i < adj_.n; ++i) {
    double s = 0.0;
    for (Index p = adj_.row_ptr[i]; p < adj_.row_ptr[i + 1]; ++p) s += adj_.val[p];
    d[i] = s;
  }
  return d;
}

std::vector<GraphEdge> SimilarityGraph::edges() const {
  std::vector<GraphEdge> out;
  out.reserve(static_cast<std::size_t>(adj_.nnz()) / 2);
  for (Index i = 0; i < adj_.n; ++i)
    for (Index p = adj_.row_ptr[i]; p < adj_.row_ptr[i + 1]; ++p)
      if (i < adj_.col[p]) out.push_back({i, adj_.col[p], adj_.val[p]});
  return out;
}

namespace {

// Per-query exact top-k by similarity, ties to the lower index.
void select_top_k(const Eigen::VectorXd& sims, Index self, int k,
                  std::vector<Index>& out) {
  const Index n = sims.size();
  std::vector<Index> cand;
  cand.reserve(static_cast<std::size_t>(n) - 1);
  for (Index j = 0; j < n; ++j)
    if (j != self) cand.push_back(j);
  const auto better = [&](Index a, Index b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return a < b;
  };
  std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end(), better);
  cand.resize(static_cast<std::size_t>(k));
  std::sort(cand.begin(), cand.end(), better);
  out = std::move(cand);
}

}  // namespace

SimilarityGraph build_knn_graph(const EmbeddingMatrix& e, int k, const KernelSpec& spec) {
  spec.validate();
  const Index n = e.n();
  const Index d = e.d();
  if (k < 1 || k >= n)
    throw ArgumentError("k must satisfy 1 <= k < n, got k=" + std::to_string(k) +
                        " n=" + std::to_string(n));

  // Precompute norms; cosine requires every row nonzero.
  Eigen::VectorXd sq_norms(n);
  for (Index i = 0; i < n; ++i) {
    sq_norms[i] = squared_norm(e.data() + static_cast<std::size_t>(i) * d, d);
    if (spec.kind == KernelKind::kCosine && sq_norms[i] == 0.0)
      throw ArgumentError("cosine kernel rejects zero row " + std::to_string(i));
  }
  Eigen::VectorXd norms = sq_norms.cwiseSqrt();

  const Eigen::MatrixXd X = e.as_double();  // n x d

  // Neighbor selection runs on GEMM row blocks. The block grid is fixed up
  // front and workers take whole blocks, so every dot product is computed on
  // an identical operand shape regardless of the thread count; final weights
  // are then re-derived from the scalar kernel so stored values match a naive
  // scan bit-for-bit.
  std::vector<std::vector<Index>> neighbors(static_cast<std::size_t>(n));
  Index block = static_cast<Index>(2.5e7 / static_cast<double>(std::max<Index>(n, 1)));
  block = std::max<Index>(16, std::min<Index>(block, 1024));
  const Index num_blocks = (n + block - 1) / block;

  parallel_for(num_blocks, [&](Index bbegin, Index bend) {
    Eigen::MatrixXd dots;
    Eigen::VectorXd sims(n);
    for (Index b = bbegin; b < bend; ++b) {
      const Index b0 = b * block;
      const Index b1 = std::min(b0 + block, n);
      dots.noalias() = X.middleRows(b0, b1 - b0) * X.transpose();
      for (Index i = b0; i < b1; ++i) {
        const auto row = dots.row(i - b0);
        if (spec.kind == KernelKind::kCosine) {
          for (Index j = 0; j < n; ++j) sims[j] = row[j] / (norms[i] * norms[j]);
        } else {
          for (Index j = 0; j < n; ++j) {
            const double sq = std::max(0.0, sq_norms[i] + sq_norms[j] - 2.0 * row[j]);
            sims[j] = -std::sqrt(sq);
          }
        }
        select_top_k(sims, i, k, neighbors[static_cast<std::size_t>(i)]);
      }
    }
  });

  // Union symmetrization with exact scalar weights.
  std::vector<GraphEdge> undirected;
  undirected.reserve(static_cast<std::size_t>(n) * k);
  for (Index i = 0; i < n; ++i)
    for (const Index j : neighbors[static_cast<std::size_t>(i)]) {
      const Index a = std::min(i, j), b = std::max(i, j);
      undirected.push_back({a, b, 0.0});
    }
  std::sort(undirected.begin(), undirected.end(), [](const GraphEdge& x, const GraphEdge& y) {
    return x.i != y.i ? x.i < y.i : x.j < y.j;
  });
  undirected.erase(std::unique(undirected.begin(), undirected.end(),
                               [](const GraphEdge& x, const GraphEdge& y) {
                                 return x.i == y.i && x.j == y.j;
                               }),
                   undirected.end());
  parallel_for(static_cast<Index>(undirected.size()), [&](Index begin, Index end) {
    for (Index t = begin; t < end; ++t) {
      auto& edge = undirected[static_cast<std::size_t>(t)];
      const double s = similarity(e, edge.i, edge.j, spec);
      edge.w = edge_weight(s, spec);
      if (!(edge.w > 0.0))
        throw NumericError("edge (" + std::to_string(edge.i) + "," + std::to_string(edge.j) +
                           ") weight " + std::to_string(edge.w) +
                           " is not positive (antipodal pair under shifted cosine)");
    }
  });

  return SimilarityGraph::from_edges(n, k, std::move(undirected));
}

Eigen::MatrixXd similarity_to_targets(const EmbeddingMatrix& e,
                                      const std::vector<Index>& unlabeled,
                                      const std::vector<Index>& targets,
                                      const KernelSpec& spec) {
  spec.validate();
  for (const Index u : unlabeled)
    for (const Index t : targets)
      if (u == t)
        throw ArgumentError("unlabeled and target index sets overlap at " + std::to_string(u));
  const Index nu = static_cast<Index>(unlabeled.size());
  const Index nt = static_cast<Index>(targets.size());
  Eigen::MatrixXd block(nu, nt);
  parallel_for(nu, [&](Index begin, Index end) {
    for (Index u = begin; u < end; ++u)
      for (Index t = 0; t < nt; ++t) {
        const double s = similarity(e, targets[static_cast<std::size_t>(t)],
                                    unlabeled[static_cast<std::size_t>(u)], spec);
        block(u, t) = edge_weight(s, spec);
      }
  });
  return block;
}

void write_graph_dump(const SimilarityGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& e : g.edges())
    out << e.i << ' ' << e.j << ' ' << format_double(e.w) << '\n';
  if (!out) throw IoError("short write to " + path);
}

}  // namespace mprop
