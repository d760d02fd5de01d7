#include "metricprop/metric_learn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "metricprop/io.hpp"
#include "metricprop/rng.hpp"

namespace mprop {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be positive, got " + std::to_string(learning_rate));
  if (epochs < 0) throw ConfigError("epochs must be >= 0, got " + std::to_string(epochs));
  if (batch_size < 1) throw ConfigError("batch size must be >= 1, got " + std::to_string(batch_size));
}

LinearEmbedder random_embedder(Index d_out, Index d_in, std::uint64_t seed, double temperature,
                               bool normalize) {
  if (d_out < 1 || d_in < 1)
    throw ArgumentError("embedder needs d_out >= 1 and d_in >= 1, got " + std::to_string(d_out) +
                        " x " + std::to_string(d_in));
  Rng rng = Rng::for_stage(seed, "metric-init");
  LinearEmbedder m;
  m.A.resize(d_out, d_in);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_in));
  for (Index i = 0; i < d_out; ++i)
    for (Index j = 0; j < d_in; ++j) m.A(i, j) = scale * rng.normal();
  m.temperature = temperature;
  m.normalize = normalize;
  return m;
}

EmbeddingMatrix embed(const LinearEmbedder& m, const EmbeddingMatrix& e) {
  if (m.d_in() != e.d())
    throw ArgumentError("embedder expects d_in=" + std::to_string(m.d_in()) +
                        " but features have d=" + std::to_string(e.d()));
  EmbeddingMatrix out(e.n(), m.d_out());
  Eigen::VectorXd f(m.d_out());
  for (Index i = 0; i < e.n(); ++i) {
    f.noalias() = m.A * e.row(i);
    if (m.normalize) {
      const double norm = f.norm();
      if (norm == 0.0)
        throw NumericError("embedded row " + std::to_string(i) +
                           " is zero; cannot project to the unit sphere");
      f /= norm;
    }
    for (Index j = 0; j < m.d_out(); ++j) out.at(i, j) = static_cast<float>(f[j]);
  }
  return out;
}

namespace {

struct BatchEmbedding {
  Eigen::MatrixXd X;      // B x d_in inputs
  Eigen::MatrixXd U;      // B x d_out unit-normalized mapped rows
  Eigen::VectorXd norms;  // pre-normalization magnitudes
};

BatchEmbedding embed_batch(const LinearEmbedder& m, const EmbeddingMatrix& e,
                           const std::vector<Index>& batch) {
  if (batch.empty()) throw ArgumentError("batch is empty");
  if (m.d_in() != e.d())
    throw ArgumentError("embedder expects d_in=" + std::to_string(m.d_in()) +
                        " but features have d=" + std::to_string(e.d()));
  const Index B = static_cast<Index>(batch.size());
  BatchEmbedding be;
  be.X.resize(B, e.d());
  for (Index b = 0; b < B; ++b) {
    const Index p = batch[static_cast<std::size_t>(b)];
    if (p < 0 || p >= e.n())
      throw ArgumentError("batch index " + std::to_string(p) + " outside embedding with " +
                          std::to_string(e.n()) + " points");
    be.X.row(b) = e.row(p);
  }
  Eigen::MatrixXd F = be.X * m.A.transpose();
  be.norms.resize(B);
  be.U.resize(B, m.d_out());
  for (Index b = 0; b < B; ++b) {
    be.norms[b] = F.row(b).norm();
    if (be.norms[b] == 0.0)
      throw NumericError("embedded row for point " +
                         std::to_string(batch[static_cast<std::size_t>(b)]) +
                         " is zero; cosine similarity undefined");
    be.U.row(b) = F.row(b) / be.norms[b];
  }
  return be;
}

// Pairwise s_ij = cosine / temperature over the batch.
Eigen::MatrixXd pair_similarities(const BatchEmbedding& be, double temperature) {
  return (be.U * be.U.transpose()) / temperature;
}

// Given dLoss/dS for the batch, chain back through the cosine normalization
// and the linear map to the gradient with respect to A.
Eigen::MatrixXd assemble_grad(const BatchEmbedding& be, const Eigen::MatrixXd& G,
                              double temperature) {
  const Index B = be.U.rows();
  const Index d_out = be.U.cols();
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(d_out, be.X.cols());
  Eigen::VectorXd g_u(d_out), g_f(d_out);
  for (Index i = 0; i < B; ++i) {
    g_u.setZero();
    for (Index j = 0; j < B; ++j) {
      const double c = G(i, j) + G(j, i);
      if (c != 0.0) g_u += c * be.U.row(j).transpose();
    }
    g_u /= temperature;
    const double radial = be.U.row(i).dot(g_u);
    g_f = (g_u - radial * be.U.row(i).transpose()) / be.norms[i];
    grad.noalias() += g_f * be.X.row(i);
  }
  return grad;
}

}  // namespace

std::pair<double, Eigen::MatrixXd> instance_loss_grad(const LinearEmbedder& m,
                                                      const EmbeddingMatrix& e,
                                                      const std::vector<Index>& batch) {
  const BatchEmbedding be = embed_batch(m, e, batch);
  const Eigen::MatrixXd S = pair_similarities(be, m.temperature);
  const Index B = S.rows();
  Eigen::MatrixXd G(B, B);
  double loss = 0.0;
  for (Index i = 0; i < B; ++i) {
    const double mx = S.row(i).maxCoeff();
    double sum = 0.0;
    for (Index j = 0; j < B; ++j) sum += std::exp(S(i, j) - mx);
    const double lse = mx + std::log(sum);
    loss += lse - S(i, i);
    for (Index j = 0; j < B; ++j)
      G(i, j) = (std::exp(S(i, j) - lse) - (i == j ? 1.0 : 0.0)) / static_cast<double>(B);
  }
  loss /= static_cast<double>(B);
  return {loss, assemble_grad(be, G, m.temperature)};
}

std::pair<double, Eigen::MatrixXd> nca_loss_grad(const LinearEmbedder& m, const EmbeddingMatrix& e,
                                                 const LabeledSet& labels,
                                                 const std::vector<Index>& batch) {
  std::unordered_map<Index, int> class_of;
  for (const auto& entry : labels.entries()) class_of.emplace(entry.index, entry.class_id);
  std::vector<int> cls(batch.size());
  std::unordered_map<int, Index> batch_count;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto it = class_of.find(batch[b]);
    if (it == class_of.end())
      throw ArgumentError("batch point " + std::to_string(batch[b]) + " is not labeled");
    cls[b] = it->second;
    ++batch_count[it->second];
  }
  for (std::size_t b = 0; b < batch.size(); ++b)
    if (batch_count[cls[b]] < 2)
      throw ArgumentError("class " + std::to_string(cls[b]) +
                          " has a single example in the batch; neighborhood loss undefined");

  const BatchEmbedding be = embed_batch(m, e, batch);
  const Eigen::MatrixXd S = pair_similarities(be, m.temperature);
  const Index B = S.rows();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(B, B);
  double loss = 0.0;
  for (Index i = 0; i < B; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < B; ++j)
      if (j != i) mx = std::max(mx, S(i, j));
    double den = 0.0, num = 0.0;
    for (Index j = 0; j < B; ++j) {
      if (j == i) continue;
      const double w = std::exp(S(i, j) - mx);
      den += w;
      if (cls[static_cast<std::size_t>(j)] == cls[static_cast<std::size_t>(i)]) num += w;
    }
    loss += std::log(den) - std::log(num);
    for (Index j = 0; j < B; ++j) {
      if (j == i) continue;
      const double w = std::exp(S(i, j) - mx);
      const bool same = cls[static_cast<std::size_t>(j)] == cls[static_cast<std::size_t>(i)];
      G(i, j) = (w / den - (same ? w / num : 0.0)) / static_cast<double>(B);
    }
  }
  loss /= static_cast<double>(B);
  return {loss, assemble_grad(be, G, m.temperature)};
}

MetricTrainResult train(const LinearEmbedder& init, const EmbeddingMatrix& e,
                        const LabeledSet* labels, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.objective == MetricObjective::kNca && labels == nullptr)
    throw ArgumentError("the neighborhood objective requires a labeled set");
  if (init.d_in() != e.d())
    throw ArgumentError("embedder expects d_in=" + std::to_string(init.d_in()) +
                        " but features have d=" + std::to_string(e.d()));

  MetricTrainResult res;
  res.embedder = init;
  if (cfg.epochs == 0) return res;

  std::vector<Index> pool;
  if (cfg.objective == MetricObjective::kNca) {
    pool.reserve(static_cast<std::size_t>(labels->size()));
    for (const auto& entry : labels->entries()) pool.push_back(entry.index);
  } else {
    pool.resize(static_cast<std::size_t>(e.n()));
    std::iota(pool.begin(), pool.end(), Index{0});
  }

  Rng rng = Rng::for_stage(cfg.seed, "metric-train");
  std::vector<Index> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(pool);
    double epoch_loss = 0.0;
    int batches = 0;
    const Index step = cfg.objective == MetricObjective::kNca ? static_cast<Index>(pool.size())
                                                              : cfg.batch_size;
    for (std::size_t start = 0; start < pool.size(); start += static_cast<std::size_t>(step)) {
      const std::size_t stop = std::min(pool.size(), start + static_cast<std::size_t>(step));
      batch.assign(pool.begin() + static_cast<std::ptrdiff_t>(start),
                   pool.begin() + static_cast<std::ptrdiff_t>(stop));
      auto [loss, grad] = cfg.objective == MetricObjective::kNca
                              ? nca_loss_grad(res.embedder, e, *labels, batch)
                              : instance_loss_grad(res.embedder, e, batch);
      if (!std::isfinite(loss) || !grad.allFinite())
        throw NumericError("metric training diverged at epoch " + std::to_string(epoch));
      res.embedder.A.noalias() -= cfg.learning_rate * grad;
      epoch_loss += loss;
      ++batches;
    }
    res.loss_curve.push_back(epoch_loss / batches);
  }
  return res;
}

void save_embedder(const LinearEmbedder& m, const std::string& matrix_path,
                   const std::string& meta_path) {
  EmbeddingMatrix mat(m.d_out(), m.d_in());
  for (Index i = 0; i < m.d_out(); ++i)
    for (Index j = 0; j < m.d_in(); ++j) mat.at(i, j) = static_cast<float>(m.A(i, j));
  write_embeddings(mat, matrix_path);
  std::ofstream out(meta_path);
  if (!out) throw IoError("cannot open " + meta_path + " for writing");
  out << "d_in=" << m.d_in() << ",d_out=" << m.d_out() << ",normalize=" << (m.normalize ? 1 : 0)
      << ",temperature=" << format_double(m.temperature) << "\n";
  if (!out) throw IoError("short write to " + meta_path);
}

LinearEmbedder load_embedder(const std::string& matrix_path, const std::string& meta_path) {
  const EmbeddingMatrix mat = read_embeddings(matrix_path);
  std::ifstream in(meta_path);
  if (!in) throw IoError("cannot open " + meta_path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(meta_path + " is empty");
  LinearEmbedder m;
  m.A.resize(mat.n(), mat.d());
  for (Index i = 0; i < mat.n(); ++i)
    for (Index j = 0; j < mat.d(); ++j) m.A(i, j) = mat.at(i, j);
  Index d_in = -1, d_out = -1;
  int normalize = -1;
  double temperature = 0.0;
  bool have_temp = false;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) comma = line.size();
    const std::string field = line.substr(pos, comma - pos);
    const std::size_t eq = field.find('=');
    if (eq == std::string::npos)
      throw FormatError(meta_path + ": field '" + field + "' is not key=value");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    try {
      if (key == "d_in")
        d_in = std::stoll(value);
      else if (key == "d_out")
        d_out = std::stoll(value);
      else if (key == "normalize")
        normalize = std::stoi(value);
      else if (key == "temperature") {
        temperature = std::stod(value);
        have_temp = true;
      } else
        throw FormatError(meta_path + ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw FormatError(meta_path + ": cannot parse value '" + value + "' for " + key);
    }
    pos = comma + 1;
  }
  if (d_in != mat.d() || d_out != mat.n())
    throw FormatError(meta_path + " dimensions disagree with the matrix file");
  if (normalize != 0 && normalize != 1)
    throw FormatError(meta_path + ": normalize must be 0 or 1");
  if (!have_temp || !(temperature > 0.0))
    throw FormatError(meta_path + ": temperature must be positive");
  m.normalize = normalize == 1;
  m.temperature = temperature;
  return m;
}

}  // namespace mprop
