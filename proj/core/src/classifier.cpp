#include "metricprop/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include "metricprop/io.hpp"
#include "metricprop/rng.hpp"

namespace mprop {

void ClassifierTrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be positive, got " + std::to_string(learning_rate));
  if (epochs < 0) throw ConfigError("epochs must be >= 0, got " + std::to_string(epochs));
  if (batch_size < 1)
    throw ConfigError("batch size must be >= 1, got " + std::to_string(batch_size));
  if (!(l2 >= 0.0) || !std::isfinite(l2))
    throw ConfigError("l2 strength must be >= 0, got " + std::to_string(l2));
}

namespace {

// softmax probabilities of one feature row under the model
void row_probabilities(const SoftmaxClassifier& clf, const Eigen::VectorXd& x,
                       Eigen::VectorXd& p) {
  p.noalias() = clf.weights * x;
  p += clf.bias;
  const double mx = p.maxCoeff();
  double sum = 0.0;
  for (Index c = 0; c < p.size(); ++c) {
    p[c] = std::exp(p[c] - mx);
    sum += p[c];
  }
  p /= sum;
}

}  // namespace

ClassifierLossGrad weighted_ce_loss_grad(const SoftmaxClassifier& clf, const EmbeddingMatrix& e,
                                         const std::vector<Index>& rows,
                                         const std::vector<int>& labels,
                                         const std::vector<double>& weights) {
  if (rows.size() != labels.size() || rows.size() != weights.size())
    throw ArgumentError("rows, labels, and weights must have equal lengths");
  const int C = clf.num_classes();
  if (clf.d() != e.d())
    throw ArgumentError("classifier expects d=" + std::to_string(clf.d()) +
                        " but features have d=" + std::to_string(e.d()));
  const std::size_t N = rows.size();
  if (N == 0) throw ArgumentError("loss over an empty example list is undefined");

  ClassifierLossGrad out;
  out.grad_weights = Eigen::MatrixXd::Zero(C, clf.d());
  out.grad_bias = Eigen::VectorXd::Zero(C);
  Eigen::VectorXd p(C), x;
  for (std::size_t t = 0; t < N; ++t) {
    if (labels[t] < 0 || labels[t] >= C)
      throw ArgumentError("label " + std::to_string(labels[t]) + " outside 0.." +
                          std::to_string(C - 1));
    if (rows[t] < 0 || rows[t] >= e.n())
      throw ArgumentError("row " + std::to_string(rows[t]) + " outside embedding with " +
                          std::to_string(e.n()) + " points");
    const double alpha = weights[t];
    if (!std::isfinite(alpha))
      throw ArgumentError("weight for row " + std::to_string(rows[t]) + " is not finite");
    if (alpha == 0.0) continue;  // contributes exactly zero
    x = e.row(rows[t]);
    row_probabilities(clf, x, p);
    out.loss -= alpha * std::log(p[labels[t]]);
    p[labels[t]] -= 1.0;  // d(-log p_y)/d logits = p - onehot
    const double scale = alpha / static_cast<double>(N);
    out.grad_weights.noalias() += (scale * p) * x.transpose();
    out.grad_bias += scale * p;
  }
  out.loss /= static_cast<double>(N);
  return out;
}

ClassifierTrainResult train_classifier(const EmbeddingMatrix& e, const LabeledSet& labels,
                                       const PseudoLabelSet& pseudo,
                                       const ClassifierTrainConfig& cfg) {
  cfg.validate();
  pseudo.check_disjoint(labels);
  const int C = labels.num_classes();

  struct Example {
    Index row;
    int label;
    double weight;
  };
  std::vector<Example> examples;
  examples.reserve(static_cast<std::size_t>(labels.size() + pseudo.size()));
  for (const auto& entry : labels.entries()) examples.push_back({entry.index, entry.class_id, 1.0});
  for (const auto& rec : pseudo.records()) {
    if (rec.pseudo_label >= C)
      throw ArgumentError("pseudo-label " + std::to_string(rec.pseudo_label) + " outside 0.." +
                          std::to_string(C - 1));
    if (rec.confidence == 0.0) continue;  // removable: cannot move the optimum
    examples.push_back({rec.index, rec.pseudo_label, rec.confidence});
  }
  for (const auto& ex : examples)
    if (ex.row >= e.n())
      throw ArgumentError("training index " + std::to_string(ex.row) +
                          " outside embedding with " + std::to_string(e.n()) + " points");

  ClassifierTrainResult res;
  res.model.weights = Eigen::MatrixXd::Zero(C, e.d());
  res.model.bias = Eigen::VectorXd::Zero(C);
  if (cfg.epochs == 0 || examples.empty()) return res;

  Rng rng = Rng::for_stage(cfg.seed, "classifier-train");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Index> rows;
  std::vector<int> batch_labels;
  std::vector<double> batch_weights;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      rows.clear();
      batch_labels.clear();
      batch_weights.clear();
      for (std::size_t t = start; t < stop; ++t) {
        const Example& ex = examples[order[t]];
        rows.push_back(ex.row);
        batch_labels.push_back(ex.label);
        batch_weights.push_back(ex.weight);
      }
      ClassifierLossGrad lg = weighted_ce_loss_grad(res.model, e, rows, batch_labels, batch_weights);
      if (!std::isfinite(lg.loss) || !lg.grad_weights.allFinite() || !lg.grad_bias.allFinite())
        throw NumericError("classifier training diverged at epoch " + std::to_string(epoch));
      if (cfg.l2 > 0.0) lg.grad_weights.noalias() += cfg.l2 * res.model.weights;
      res.model.weights.noalias() -= cfg.learning_rate * lg.grad_weights;
      res.model.bias -= cfg.learning_rate * lg.grad_bias;
      epoch_loss += lg.loss;
      ++batches;
    }
    res.loss_curve.push_back(epoch_loss / batches);
  }
  return res;
}

Predictions predict(const SoftmaxClassifier& clf, const EmbeddingMatrix& e) {
  if (clf.d() != e.d())
    throw ArgumentError("classifier expects d=" + std::to_string(clf.d()) +
                        " but features have d=" + std::to_string(e.d()));
  const Index n = e.n();
  const int C = clf.num_classes();
  Predictions out;
  out.classes.resize(static_cast<std::size_t>(n));
  out.probabilities.resize(n, C);
  Eigen::VectorXd p(C), x;
  for (Index i = 0; i < n; ++i) {
    x = e.row(i);
    row_probabilities(clf, x, p);
    int best = 0;
    for (int c = 1; c < C; ++c)
      if (p[c] > p[best]) best = c;  // ties keep the lower id
    out.classes[static_cast<std::size_t>(i)] = best;
    out.probabilities.row(i) = p;
  }
  return out;
}

void save_classifier(const SoftmaxClassifier& clf, const std::string& weights_path,
                     const std::string& bias_path) {
  EmbeddingMatrix w(clf.num_classes(), clf.d());
  for (Index i = 0; i < w.n(); ++i)
    for (Index j = 0; j < w.d(); ++j) w.at(i, j) = static_cast<float>(clf.weights(i, j));
  write_embeddings(w, weights_path);
  std::ofstream out(bias_path);
  if (!out) throw IoError("cannot open " + bias_path + " for writing");
  for (Index c = 0; c < clf.bias.size(); ++c) out << format_double(clf.bias[c]) << '\n';
  if (!out) throw IoError("short write to " + bias_path);
}

SoftmaxClassifier load_classifier(const std::string& weights_path, const std::string& bias_path) {
  const EmbeddingMatrix w = read_embeddings(weights_path);
  SoftmaxClassifier clf;
  clf.weights.resize(w.n(), w.d());
  for (Index i = 0; i < w.n(); ++i)
    for (Index j = 0; j < w.d(); ++j) clf.weights(i, j) = w.at(i, j);
  std::ifstream in(bias_path);
  if (!in) throw IoError("cannot open " + bias_path);
  std::vector<double> bias;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || *end != '\0')
      throw FormatError(bias_path + ": cannot parse bias line '" + line + "'");
    bias.push_back(v);
  }
  if (static_cast<Index>(bias.size()) != clf.weights.rows())
    throw FormatError(bias_path + " has " + std::to_string(bias.size()) +
                      " entries but the weight matrix has " + std::to_string(clf.weights.rows()) +
                      " classes");
  clf.bias = Eigen::Map<Eigen::VectorXd>(bias.data(), static_cast<Index>(bias.size()));
  return clf;
}

}  // namespace mprop
