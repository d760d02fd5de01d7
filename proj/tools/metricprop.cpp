// Command-line front end for the label-propagation pipeline. Every subcommand
// echoes its resolved configuration as one sorted key=value CSV line on
// stdout; failures print a single machine-readable `error=` line on stderr
// and exit nonzero.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "metricprop/classifier.hpp"
#include "metricprop/confidence.hpp"
#include "metricprop/evaluation.hpp"
#include "metricprop/io.hpp"
#include "metricprop/kernel.hpp"
#include "metricprop/knn_graph.hpp"
#include "metricprop/metric_learn.hpp"
#include "metricprop/parallel.hpp"
#include "metricprop/propagate.hpp"
#include "metricprop/spectral.hpp"
#include "metricprop/types.hpp"

namespace {

using mprop::Index;

constexpr const char* kEtaHelp =
    "spectral components to compute (robust roughly between 30 and 200)";
constexpr const char* kTauHelp =
    "softmax temperature for confidences (robust roughly between 10 and 100)";

void echo_config(const std::map<std::string, std::string>& config) {
  bool first = true;
  for (const auto& [key, value] : config) {
    if (!first) std::cout << ',';
    std::cout << key << '=' << value;
    first = false;
  }
  std::cout << '\n';
}

std::string fmt(double v) { return mprop::format_double(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(Index v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }

// Ground truth as a dense class-per-point vector; -1 marks unknown.
std::vector<int> truth_vector(const mprop::LabeledSet& truth, Index n) {
  std::vector<int> v(static_cast<std::size_t>(n), -1);
  for (const auto& entry : truth.entries()) {
    if (entry.index >= n)
      throw mprop::ArgumentError("truth index " + std::to_string(entry.index) +
                                 " outside embedding with " + std::to_string(n) + " points");
    v[static_cast<std::size_t>(entry.index)] = entry.class_id;
  }
  return v;
}

void require_covered(const std::vector<int>& truth, const mprop::PseudoLabelSet& pseudo) {
  for (const auto& rec : pseudo.records())
    if (rec.index >= static_cast<Index>(truth.size()) ||
        truth[static_cast<std::size_t>(rec.index)] < 0)
      throw mprop::ArgumentError("ground truth does not cover pseudo-labeled index " +
                                 std::to_string(rec.index));
}

struct CommonOpts {
  int threads = 0;
};

struct GenOpts {
  std::string kind = "two-moons";
  Index n = 2000;
  double noise = 0.05;
  int classes = 2;
  Index d = 2;
  std::uint64_t seed = 0;
  Index labeled_per_class = 0;
  std::string out_embeddings;
  std::string out_labels;
  std::string out_labeled;
};

void run_gen(const GenOpts& o) {
  echo_config({{"command", "gen-synthetic"},
               {"kind", o.kind},
               {"n", fmt(o.n)},
               {"noise", fmt(o.noise)},
               {"classes", fmt(o.classes)},
               {"d", fmt(o.d)},
               {"seed", fmt(o.seed)},
               {"labeled-per-class", fmt(o.labeled_per_class)},
               {"out-embeddings", o.out_embeddings},
               {"out-labels", o.out_labels},
               {"out-labeled", o.out_labeled}});
  if ((o.labeled_per_class > 0) != !o.out_labeled.empty())
    throw mprop::ConfigError("--labeled-per-class and --out-labeled go together");
  const mprop::SyntheticData data = mprop::gen_synthetic(mprop::parse_synthetic_kind(o.kind), o.n,
                                                         o.noise, o.classes, o.seed, o.d);
  mprop::write_embeddings(data.points, o.out_embeddings);
  std::vector<mprop::LabeledEntry> entries;
  entries.reserve(data.truth.size());
  for (std::size_t i = 0; i < data.truth.size(); ++i)
    entries.push_back({static_cast<Index>(i), data.truth[i]});
  mprop::write_labels(mprop::LabeledSet(std::move(entries), o.classes), o.out_labels);
  if (o.labeled_per_class > 0)
    mprop::write_labels(mprop::split_labeled(data.truth, o.labeled_per_class, o.seed),
                        o.out_labeled);
}

struct TrainMetricOpts {
  std::string embeddings;
  std::string labels;
  int classes = 0;
  std::string objective = "instance";
  Index d_out = 0;
  double temperature = 0.07;
  bool normalize = true;
  double lr = 0.1;
  int epochs = 100;
  Index batch = 64;
  std::uint64_t seed = 0;
  std::string out_embedder;
  std::string out_meta;
  std::string out_embedded;
  std::string out_loss;
};

void run_train_metric(const TrainMetricOpts& o) {
  echo_config({{"command", "train-metric"},
               {"embeddings", o.embeddings},
               {"labels", o.labels},
               {"classes", fmt(o.classes)},
               {"objective", o.objective},
               {"d-out", fmt(o.d_out)},
               {"temperature", fmt(o.temperature)},
               {"normalize", o.normalize ? "1" : "0"},
               {"lr", fmt(o.lr)},
               {"epochs", fmt(o.epochs)},
               {"batch", fmt(o.batch)},
               {"seed", fmt(o.seed)},
               {"out-embedder", o.out_embedder},
               {"out-meta", o.out_meta},
               {"out-embedded", o.out_embedded},
               {"out-loss", o.out_loss}});
  mprop::TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.seed = o.seed;
  if (o.objective == "instance")
    cfg.objective = mprop::MetricObjective::kInstance;
  else if (o.objective == "nca")
    cfg.objective = mprop::MetricObjective::kNca;
  else
    throw mprop::ConfigError("unknown objective '" + o.objective + "' (instance, nca)");

  const mprop::EmbeddingMatrix e = mprop::read_embeddings(o.embeddings);
  mprop::LabeledSet labels;
  const bool have_labels = !o.labels.empty();
  if (have_labels) {
    if (o.classes < 1)
      throw mprop::ConfigError("--classes is required when --labels is given");
    labels = mprop::read_labels(o.labels, o.classes, e.n());
  } else if (cfg.objective == mprop::MetricObjective::kNca) {
    throw mprop::ConfigError("objective nca requires --labels");
  }

  const mprop::LinearEmbedder init =
      mprop::random_embedder(o.d_out, e.d(), o.seed, o.temperature, o.normalize);
  const mprop::MetricTrainResult res =
      mprop::train(init, e, have_labels ? &labels : nullptr, cfg);
  mprop::save_embedder(res.embedder, o.out_embedder, o.out_meta);
  if (!o.out_embedded.empty())
    mprop::write_embeddings(mprop::embed(res.embedder, e), o.out_embedded);
  if (!o.out_loss.empty()) {
    std::ofstream out(o.out_loss);
    if (!out) throw mprop::IoError("cannot open " + o.out_loss + " for writing");
    for (std::size_t epoch = 0; epoch < res.loss_curve.size(); ++epoch)
      out << epoch << ',' << mprop::format_double(res.loss_curve[epoch]) << '\n';
    if (!out) throw mprop::IoError("short write to " + o.out_loss);
  }
}

struct BuildGraphOpts {
  std::string embeddings;
  int k = 10;
  std::string kernel = "cosine";
  bool exponentiate = true;
  std::string out_graph;
};

void run_build_graph(const BuildGraphOpts& o) {
  echo_config({{"command", "build-graph"},
               {"embeddings", o.embeddings},
               {"k", fmt(o.k)},
               {"kernel", o.kernel},
               {"exponentiate", o.exponentiate ? "1" : "0"},
               {"out-graph", o.out_graph}});
  const mprop::EmbeddingMatrix e = mprop::read_embeddings(o.embeddings);
  mprop::KernelSpec spec{mprop::parse_kernel_kind(o.kernel), o.exponentiate};
  const mprop::SimilarityGraph g = mprop::build_knn_graph(e, o.k, spec);
  mprop::write_graph_dump(g, o.out_graph);
}

struct PropagateOpts {
  std::string embeddings;
  std::string labels;
  int classes = 0;
  std::string method = "spectral";
  int k = 10;
  int eta = 200;
  std::string kernel = "cosine";
  bool exponentiate = true;
  int chunks = 1;
  std::uint64_t seed = 0;
  std::string out_logits;
  std::string out_indices;
  std::string out_eigenvectors;
  std::string out_eigenvalues;
};

mprop::PropagationResult propagate_for(const PropagateOpts& o, const mprop::EmbeddingMatrix& e,
                                       const mprop::LabeledSet& labels) {
  mprop::KernelSpec spec{mprop::parse_kernel_kind(o.kernel), o.exponentiate};
  if (o.method == "nn") {
    if (o.chunks != 1)
      throw mprop::ConfigError("--chunks applies to spectral propagation only");
    return mprop::nn_propagate(e, labels, spec);
  }
  if (o.method != "spectral")
    throw mprop::ConfigError("unknown method '" + o.method + "' (nn, spectral)");
  mprop::ChunkedParams params;
  params.k = o.k;
  params.kernel = spec;
  params.eta = o.eta;
  params.chunks = o.chunks;
  params.seed = o.seed;
  return mprop::chunked_propagate(e, labels, params);
}

void run_propagate(const PropagateOpts& o) {
  echo_config({{"command", "propagate"},
               {"embeddings", o.embeddings},
               {"labels", o.labels},
               {"classes", fmt(o.classes)},
               {"method", o.method},
               {"k", fmt(o.k)},
               {"eta", fmt(o.eta)},
               {"kernel", o.kernel},
               {"exponentiate", o.exponentiate ? "1" : "0"},
               {"chunks", fmt(o.chunks)},
               {"seed", fmt(o.seed)},
               {"out-logits", o.out_logits},
               {"out-indices", o.out_indices},
               {"out-eigenvectors", o.out_eigenvectors},
               {"out-eigenvalues", o.out_eigenvalues}});
  const mprop::EmbeddingMatrix e = mprop::read_embeddings(o.embeddings);
  const mprop::LabeledSet labels = mprop::read_labels(o.labels, o.classes, e.n());

  const bool want_eigen = !o.out_eigenvectors.empty() || !o.out_eigenvalues.empty();
  if (want_eigen && (o.method != "spectral" || o.chunks != 1))
    throw mprop::ConfigError("eigenpair dumps need method=spectral with chunks=1");

  mprop::PropagationResult result;
  if (want_eigen) {
    mprop::KernelSpec spec{mprop::parse_kernel_kind(o.kernel), o.exponentiate};
    const mprop::SimilarityGraph g = mprop::build_knn_graph(e, o.k, spec);
    const mprop::SpectralModel model = mprop::build_spectral_model(g, o.eta);
    if (!o.out_eigenvectors.empty()) {
      mprop::EmbeddingMatrix vecs(model.n(), model.eta);
      for (Index i = 0; i < model.n(); ++i)
        for (int j = 0; j < model.eta; ++j)
          vecs.at(i, j) = static_cast<float>(model.eigenvectors(i, j));
      mprop::write_embeddings(vecs, o.out_eigenvectors);
    }
    if (!o.out_eigenvalues.empty()) {
      std::ofstream out(o.out_eigenvalues);
      if (!out) throw mprop::IoError("cannot open " + o.out_eigenvalues + " for writing");
      for (int j = 0; j < model.eta; ++j)
        out << j << ',' << mprop::format_double(model.eigenvalues[j]) << '\n';
      if (!out) throw mprop::IoError("short write to " + o.out_eigenvalues);
    }
    result = mprop::spectral_propagate(model, labels);
  } else {
    result = propagate_for(o, e, labels);
  }

  mprop::EmbeddingMatrix logits(result.logits.rows(), result.logits.cols());
  for (Index i = 0; i < result.logits.rows(); ++i)
    for (Index j = 0; j < result.logits.cols(); ++j)
      logits.at(i, j) = static_cast<float>(result.logits(i, j));
  mprop::write_embeddings(logits, o.out_logits);
  mprop::write_index_list(result.unlabeled, o.out_indices);
}

struct PseudoLabelOpts {
  std::string logits;
  std::string indices;
  double tau = 40.0;
  double alpha_threshold = 0.01;
  std::string out_pseudo;
  std::string out_summary;
};

void run_pseudo_label(const PseudoLabelOpts& o) {
  echo_config({{"command", "pseudo-label"},
               {"logits", o.logits},
               {"indices", o.indices},
               {"tau", fmt(o.tau)},
               {"alpha-threshold", fmt(o.alpha_threshold)},
               {"out-pseudo", o.out_pseudo},
               {"out-summary", o.out_summary}});
  const mprop::EmbeddingMatrix logits = mprop::read_embeddings(o.logits);
  mprop::PropagationResult p;
  p.logits.resize(logits.n(), logits.d());
  for (Index i = 0; i < logits.n(); ++i)
    for (Index j = 0; j < logits.d(); ++j) p.logits(i, j) = logits.at(i, j);
  p.unlabeled = mprop::read_index_list(o.indices);
  p.method = "file";
  mprop::ConfidenceParams params{o.tau, o.alpha_threshold};
  const mprop::PseudoLabelOutcome outcome = mprop::pseudo_label(p, params);
  mprop::write_pseudo_labels(outcome.kept, o.out_pseudo);
  if (!o.out_summary.empty()) {
    std::ofstream out(o.out_summary);
    if (!out) throw mprop::IoError("cannot open " + o.out_summary + " for writing");
    out << mprop::confidence_summary_csv(outcome);
    if (!out) throw mprop::IoError("short write to " + o.out_summary);
  }
}

struct TrainClassifierOpts {
  std::string embeddings;
  std::string labels;
  int classes = 0;
  std::string pseudo;
  double lr = 1.0;
  int epochs = 3000;
  Index batch = 256;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  std::string out_weights;
  std::string out_bias;
  std::string out_loss;
};

void run_train_classifier(const TrainClassifierOpts& o) {
  echo_config({{"command", "train-classifier"},
               {"embeddings", o.embeddings},
               {"labels", o.labels},
               {"classes", fmt(o.classes)},
               {"pseudo", o.pseudo},
               {"lr", fmt(o.lr)},
               {"epochs", fmt(o.epochs)},
               {"batch", fmt(o.batch)},
               {"l2", fmt(o.l2)},
               {"seed", fmt(o.seed)},
               {"out-weights", o.out_weights},
               {"out-bias", o.out_bias},
               {"out-loss", o.out_loss}});
  const mprop::EmbeddingMatrix e = mprop::read_embeddings(o.embeddings);
  const mprop::LabeledSet labels = mprop::read_labels(o.labels, o.classes, e.n());
  mprop::PseudoLabelSet pseudo;
  if (!o.pseudo.empty()) pseudo = mprop::read_pseudo_labels(o.pseudo);
  mprop::ClassifierTrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.l2 = o.l2;
  cfg.seed = o.seed;
  const mprop::ClassifierTrainResult res = mprop::train_classifier(e, labels, pseudo, cfg);
  mprop::save_classifier(res.model, o.out_weights, o.out_bias);
  if (!o.out_loss.empty()) {
    std::ofstream out(o.out_loss);
    if (!out) throw mprop::IoError("cannot open " + o.out_loss + " for writing");
    for (std::size_t epoch = 0; epoch < res.loss_curve.size(); ++epoch)
      out << epoch << ',' << mprop::format_double(res.loss_curve[epoch]) << '\n';
    if (!out) throw mprop::IoError("short write to " + o.out_loss);
  }
}

struct EvaluateOpts {
  std::string pseudo;
  std::string truth;
  int classes = 0;
  std::string out_curve;
  std::string out_map;
};

void run_evaluate(const EvaluateOpts& o) {
  echo_config({{"command", "evaluate"},
               {"pseudo", o.pseudo},
               {"truth", o.truth},
               {"classes", fmt(o.classes)},
               {"out-curve", o.out_curve},
               {"out-map", o.out_map}});
  const mprop::PseudoLabelSet pseudo = mprop::read_pseudo_labels(o.pseudo);
  const mprop::LabeledSet truth_set = mprop::read_labels(o.truth, o.classes);
  Index n = 0;
  for (const auto& entry : truth_set.entries()) n = std::max(n, entry.index + 1);
  const std::vector<int> truth = truth_vector(truth_set, n);
  require_covered(truth, pseudo);
  const auto ranked = mprop::RankedCorrectness::from_pseudo_labels(pseudo, truth);
  mprop::write_accuracy_curve_csv(mprop::accumulated_accuracy(ranked), o.out_curve);
  mprop::write_map_csv(mprop::pseudo_label_map(pseudo, truth, o.classes), o.out_map);
}

struct PipelineOpts {
  PropagateOpts prop;  // reuses embeddings/labels/method/graph knobs
  double tau = 40.0;
  double alpha_threshold = 0.01;
  std::string truth;
  double clf_lr = 1.0;
  int clf_epochs = 3000;
  Index clf_batch = 256;
  double l2 = 1e-4;
  std::string out_pseudo;
  std::string out_summary;
  std::string out_weights;
  std::string out_bias;
  std::string out_curve;
  std::string out_map;
  std::string out_accuracy;
};

void run_pipeline(const PipelineOpts& o) {
  echo_config({{"command", "pipeline"},
               {"embeddings", o.prop.embeddings},
               {"labels", o.prop.labels},
               {"classes", fmt(o.prop.classes)},
               {"method", o.prop.method},
               {"k", fmt(o.prop.k)},
               {"eta", fmt(o.prop.eta)},
               {"kernel", o.prop.kernel},
               {"exponentiate", o.prop.exponentiate ? "1" : "0"},
               {"chunks", fmt(o.prop.chunks)},
               {"seed", fmt(o.prop.seed)},
               {"tau", fmt(o.tau)},
               {"alpha-threshold", fmt(o.alpha_threshold)},
               {"truth", o.truth},
               {"clf-lr", fmt(o.clf_lr)},
               {"clf-epochs", fmt(o.clf_epochs)},
               {"clf-batch", fmt(o.clf_batch)},
               {"l2", fmt(o.l2)},
               {"out-pseudo", o.out_pseudo},
               {"out-summary", o.out_summary},
               {"out-weights", o.out_weights},
               {"out-bias", o.out_bias},
               {"out-curve", o.out_curve},
               {"out-map", o.out_map},
               {"out-accuracy", o.out_accuracy}});
  const mprop::EmbeddingMatrix e = mprop::read_embeddings(o.prop.embeddings);
  const mprop::LabeledSet labels = mprop::read_labels(o.prop.labels, o.prop.classes, e.n());

  const mprop::PropagationResult result = propagate_for(o.prop, e, labels);
  mprop::ConfidenceParams params{o.tau, o.alpha_threshold};
  const mprop::PseudoLabelOutcome outcome = mprop::pseudo_label(result, params);
  mprop::write_pseudo_labels(outcome.kept, o.out_pseudo);
  if (!o.out_summary.empty()) {
    std::ofstream out(o.out_summary);
    if (!out) throw mprop::IoError("cannot open " + o.out_summary + " for writing");
    out << mprop::confidence_summary_csv(outcome);
    if (!out) throw mprop::IoError("short write to " + o.out_summary);
  }

  mprop::ClassifierTrainConfig cfg;
  cfg.learning_rate = o.clf_lr;
  cfg.epochs = o.clf_epochs;
  cfg.batch_size = o.clf_batch;
  cfg.l2 = o.l2;
  cfg.seed = o.prop.seed;
  const mprop::ClassifierTrainResult weighted = mprop::train_classifier(e, labels, outcome.kept, cfg);
  mprop::save_classifier(weighted.model, o.out_weights, o.out_bias);

  if (o.truth.empty()) return;
  const mprop::LabeledSet truth_set = mprop::read_labels(o.truth, o.prop.classes, e.n());
  const std::vector<int> truth = truth_vector(truth_set, e.n());
  require_covered(truth, outcome.kept);
  const auto ranked = mprop::RankedCorrectness::from_pseudo_labels(outcome.kept, truth);
  if (!o.out_curve.empty())
    mprop::write_accuracy_curve_csv(mprop::accumulated_accuracy(ranked), o.out_curve);
  if (!o.out_map.empty())
    mprop::write_map_csv(mprop::pseudo_label_map(outcome.kept, truth, o.prop.classes), o.out_map);

  if (o.out_accuracy.empty()) return;
  // paired comparison on the unlabeled points: pseudo-trained vs labels-only
  const mprop::ClassifierTrainResult baseline =
      mprop::train_classifier(e, labels, mprop::PseudoLabelSet(), cfg);
  const mprop::Predictions pw = mprop::predict(weighted.model, e);
  const mprop::Predictions pb = mprop::predict(baseline.model, e);
  Index correct_w = 0, correct_b = 0, total = 0;
  for (const Index u : result.unlabeled) {
    const int t = truth[static_cast<std::size_t>(u)];
    if (t < 0)
      throw mprop::ArgumentError("ground truth does not cover unlabeled index " +
                                 std::to_string(u));
    ++total;
    if (pw.classes[static_cast<std::size_t>(u)] == t) ++correct_w;
    if (pb.classes[static_cast<std::size_t>(u)] == t) ++correct_b;
  }
  std::ofstream out(o.out_accuracy);
  if (!out) throw mprop::IoError("cannot open " + o.out_accuracy + " for writing");
  out << "labels_only," << mprop::format_double(static_cast<double>(correct_b) / total) << '\n'
      << "weighted," << mprop::format_double(static_cast<double>(correct_w) / total) << '\n';
  if (!out) throw mprop::IoError("short write to " + o.out_accuracy);
}

void add_propagate_options(CLI::App* cmd, PropagateOpts& o, bool with_dumps) {
  cmd->add_option("--embeddings", o.embeddings, "input EMB1 feature file")->required();
  cmd->add_option("--labels", o.labels, "labeled subset CSV index,class_id")->required();
  cmd->add_option("--classes", o.classes, "number of classes")->required();
  cmd->add_option("--method", o.method, "propagation method: nn or spectral")
      ->capture_default_str();
  cmd->add_option("--k", o.k, "neighbors per point in the similarity graph")
      ->capture_default_str();
  cmd->add_option("--eta", o.eta, kEtaHelp)->capture_default_str();
  cmd->add_option("--kernel", o.kernel, "similarity kernel: cosine or negative-euclidean")
      ->capture_default_str();
  cmd->add_option("--exponentiate", o.exponentiate, "exponentiate similarities into edge weights")
      ->capture_default_str();
  cmd->add_option("--chunks", o.chunks, "shard count for chunked spectral propagation")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "seed for all pipeline randomness")->capture_default_str();
  if (with_dumps) {
    cmd->add_option("--out-logits", o.out_logits, "output EMB1 logits file")->required();
    cmd->add_option("--out-indices", o.out_indices, "output unlabeled-index sidecar")->required();
    cmd->add_option("--out-eigenvectors", o.out_eigenvectors,
                    "optional EMB1 dump of computed eigenvectors");
    cmd->add_option("--out-eigenvalues", o.out_eigenvalues,
                    "optional CSV dump of computed eigenvalues");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transductive label propagation over k-NN similarity graphs"};
  app.require_subcommand(1);
  CommonOpts common;
  app.add_option("--threads", common.threads,
                 "worker thread cap, 0 = all cores; results never depend on it")
      ->capture_default_str();

  GenOpts gen;
  auto* cmd_gen = app.add_subcommand("gen-synthetic", "generate a synthetic labeled dataset");
  cmd_gen->add_option("--kind", gen.kind, "two-moons or gaussian-blobs")->capture_default_str();
  cmd_gen->add_option("--n", gen.n, "number of points")->capture_default_str();
  cmd_gen->add_option("--noise", gen.noise, "coordinate noise sigma")->capture_default_str();
  cmd_gen->add_option("--classes", gen.classes, "number of classes")->capture_default_str();
  cmd_gen->add_option("--d", gen.d, "dimensionality (gaussian-blobs only)")
      ->capture_default_str();
  cmd_gen->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  cmd_gen->add_option("--labeled-per-class", gen.labeled_per_class,
                      "also draw this many labeled examples per class");
  cmd_gen->add_option("--out-embeddings", gen.out_embeddings, "output EMB1 file")->required();
  cmd_gen->add_option("--out-labels", gen.out_labels, "output full truth CSV")->required();
  cmd_gen->add_option("--out-labeled", gen.out_labeled, "output labeled-subset CSV");
  cmd_gen->callback([&] {
    mprop::set_max_threads(common.threads);
    run_gen(gen);
  });

  TrainMetricOpts tm;
  auto* cmd_tm = app.add_subcommand("train-metric", "train a linear similarity embedder");
  cmd_tm->add_option("--embeddings", tm.embeddings, "input EMB1 feature file")->required();
  cmd_tm->add_option("--labels", tm.labels, "labeled subset CSV (required for nca)");
  cmd_tm->add_option("--classes", tm.classes, "number of classes (with --labels)");
  cmd_tm->add_option("--objective", tm.objective, "instance or nca")->capture_default_str();
  cmd_tm->add_option("--d-out", tm.d_out, "embedding output dimension")->required();
  cmd_tm->add_option("--temperature", tm.temperature, "similarity temperature inside the loss")
      ->capture_default_str();
  cmd_tm->add_option("--normalize", tm.normalize, "project embedded rows to the unit sphere")
      ->capture_default_str();
  cmd_tm->add_option("--lr", tm.lr, "learning rate")->capture_default_str();
  cmd_tm->add_option("--epochs", tm.epochs, "training epochs")->capture_default_str();
  cmd_tm->add_option("--batch", tm.batch, "minibatch size (instance objective)")
      ->capture_default_str();
  cmd_tm->add_option("--seed", tm.seed, "init and shuffle seed")->capture_default_str();
  cmd_tm->add_option("--out-embedder", tm.out_embedder, "output EMB1 embedder matrix")->required();
  cmd_tm->add_option("--out-meta", tm.out_meta, "output embedder metadata CSV")->required();
  cmd_tm->add_option("--out-embedded", tm.out_embedded, "optional embedded features EMB1");
  cmd_tm->add_option("--out-loss", tm.out_loss, "optional loss curve CSV");
  cmd_tm->callback([&] {
    mprop::set_max_threads(common.threads);
    run_train_metric(tm);
  });

  BuildGraphOpts bg;
  auto* cmd_bg = app.add_subcommand("build-graph", "build and dump the k-NN similarity graph");
  cmd_bg->add_option("--embeddings", bg.embeddings, "input EMB1 feature file")->required();
  cmd_bg->add_option("--k", bg.k, "neighbors per point")->capture_default_str();
  cmd_bg->add_option("--kernel", bg.kernel, "cosine or negative-euclidean")->capture_default_str();
  cmd_bg->add_option("--exponentiate", bg.exponentiate,
                     "exponentiate similarities into edge weights")
      ->capture_default_str();
  cmd_bg->add_option("--out-graph", bg.out_graph, "output edge list `i j w`")->required();
  cmd_bg->callback([&] {
    mprop::set_max_threads(common.threads);
    run_build_graph(bg);
  });

  PropagateOpts prop;
  auto* cmd_prop = app.add_subcommand("propagate", "propagate labels to the unlabeled points");
  add_propagate_options(cmd_prop, prop, true);
  cmd_prop->callback([&] {
    mprop::set_max_threads(common.threads);
    run_propagate(prop);
  });

  PseudoLabelOpts pl;
  auto* cmd_pl = app.add_subcommand("pseudo-label", "turn logits into filtered pseudo-labels");
  cmd_pl->add_option("--logits", pl.logits, "input EMB1 logits file")->required();
  cmd_pl->add_option("--indices", pl.indices, "input unlabeled-index sidecar")->required();
  cmd_pl->add_option("--tau", pl.tau, kTauHelp)->capture_default_str();
  cmd_pl->add_option("--alpha-threshold", pl.alpha_threshold, "discard cutoff on the margin")
      ->capture_default_str();
  cmd_pl->add_option("--out-pseudo", pl.out_pseudo, "output pseudo-label CSV")->required();
  cmd_pl->add_option("--out-summary", pl.out_summary, "optional kept/discarded histogram CSV");
  cmd_pl->callback([&] {
    mprop::set_max_threads(common.threads);
    run_pseudo_label(pl);
  });

  TrainClassifierOpts tc;
  auto* cmd_tc = app.add_subcommand("train-classifier",
                                    "train the confidence-weighted linear classifier");
  cmd_tc->add_option("--embeddings", tc.embeddings, "input EMB1 feature file")->required();
  cmd_tc->add_option("--labels", tc.labels, "true labeled subset CSV")->required();
  cmd_tc->add_option("--classes", tc.classes, "number of classes")->required();
  cmd_tc->add_option("--pseudo", tc.pseudo, "pseudo-label CSV (empty = labels only)");
  cmd_tc->add_option("--lr", tc.lr, "learning rate")->capture_default_str();
  cmd_tc->add_option("--epochs", tc.epochs, "training epochs")->capture_default_str();
  cmd_tc->add_option("--batch", tc.batch, "minibatch size")->capture_default_str();
  cmd_tc->add_option("--l2", tc.l2, "decoupled weight decay strength")->capture_default_str();
  cmd_tc->add_option("--seed", tc.seed, "shuffle seed")->capture_default_str();
  cmd_tc->add_option("--out-weights", tc.out_weights, "output EMB1 weight matrix")->required();
  cmd_tc->add_option("--out-bias", tc.out_bias, "output bias CSV")->required();
  cmd_tc->add_option("--out-loss", tc.out_loss, "optional loss curve CSV");
  cmd_tc->callback([&] {
    mprop::set_max_threads(common.threads);
    run_train_classifier(tc);
  });

  EvaluateOpts ev;
  auto* cmd_ev = app.add_subcommand("evaluate", "score pseudo-labels against ground truth");
  cmd_ev->add_option("--pseudo", ev.pseudo, "pseudo-label CSV")->required();
  cmd_ev->add_option("--truth", ev.truth, "full ground-truth CSV")->required();
  cmd_ev->add_option("--classes", ev.classes, "number of classes")->required();
  cmd_ev->add_option("--out-curve", ev.out_curve, "accumulated-accuracy curve CSV")->required();
  cmd_ev->add_option("--out-map", ev.out_map, "per-class AP + mAP CSV")->required();
  cmd_ev->callback([&] {
    mprop::set_max_threads(common.threads);
    run_evaluate(ev);
  });

  PipelineOpts pipe;
  auto* cmd_pipe = app.add_subcommand("pipeline", "propagate, pseudo-label, train, evaluate");
  add_propagate_options(cmd_pipe, pipe.prop, false);
  cmd_pipe->add_option("--tau", pipe.tau, kTauHelp)->capture_default_str();
  cmd_pipe->add_option("--alpha-threshold", pipe.alpha_threshold, "discard cutoff on the margin")
      ->capture_default_str();
  cmd_pipe->add_option("--truth", pipe.truth, "optional full ground-truth CSV for evaluation");
  cmd_pipe->add_option("--clf-lr", pipe.clf_lr, "classifier learning rate")
      ->capture_default_str();
  cmd_pipe->add_option("--clf-epochs", pipe.clf_epochs, "classifier epochs")
      ->capture_default_str();
  cmd_pipe->add_option("--clf-batch", pipe.clf_batch, "classifier minibatch size")
      ->capture_default_str();
  cmd_pipe->add_option("--l2", pipe.l2, "classifier weight decay")->capture_default_str();
  cmd_pipe->add_option("--out-pseudo", pipe.out_pseudo, "output pseudo-label CSV")->required();
  cmd_pipe->add_option("--out-summary", pipe.out_summary, "optional confidence summary CSV");
  cmd_pipe->add_option("--out-weights", pipe.out_weights, "output classifier weights EMB1")
      ->required();
  cmd_pipe->add_option("--out-bias", pipe.out_bias, "output classifier bias CSV")->required();
  cmd_pipe->add_option("--out-curve", pipe.out_curve, "optional accumulated-accuracy CSV");
  cmd_pipe->add_option("--out-map", pipe.out_map, "optional per-class AP CSV");
  cmd_pipe->add_option("--out-accuracy", pipe.out_accuracy,
                       "optional paired labels-only vs weighted accuracy CSV");
  cmd_pipe->callback([&] {
    mprop::set_max_threads(common.threads);
    run_pipeline(pipe);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    std::cerr << "error=" << msg << "\n";
    return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    std::cerr << "error=" << msg << "\n";
    return 1;
  }
  return 0;
}
