#include "metricprop/confidence.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "metricprop/parallel.hpp"

namespace mprop {

void ConfidenceParams::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw ConfigError("temperature must be positive, got " + std::to_string(temperature));
  if (!(alpha_threshold >= 0.0 && alpha_threshold < 1.0))
    throw ConfigError("confidence threshold must lie in [0,1), got " +
                      std::to_string(alpha_threshold));
}

Eigen::VectorXd normalize_logits(const Eigen::VectorXd& z, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw ArgumentError("temperature must be positive, got " + std::to_string(temperature));
  if (z.size() < 1) throw ArgumentError("cannot normalize an empty logit vector");
  for (Index c = 0; c < z.size(); ++c)
    if (!std::isfinite(z[c]))
      throw ArgumentError("logit " + std::to_string(c) + " is not finite");
  const double m = z.maxCoeff();
  Eigen::VectorXd p(z.size());
  double sum = 0.0;
  for (Index c = 0; c < z.size(); ++c) {
    p[c] = std::exp((z[c] - m) / temperature);
    sum += p[c];
  }
  p /= sum;
  return p;
}

double margin_confidence(const Eigen::VectorXd& probabilities) {
  if (probabilities.size() < 2)
    throw ArgumentError("margin confidence needs at least two classes, got " +
                        std::to_string(probabilities.size()));
  double top = -1.0, second = -1.0;
  for (Index c = 0; c < probabilities.size(); ++c) {
    const double v = probabilities[c];
    if (v > top) {
      second = top;
      top = v;
    } else if (v > second) {
      second = v;
    }
  }
  return top - second;
}

PseudoLabelOutcome pseudo_label(const PropagationResult& p, const ConfidenceParams& params) {
  params.validate();
  const Index n = p.logits.rows();
  if (static_cast<Index>(p.unlabeled.size()) != n)
    throw ArgumentError("propagation result rows and unlabeled index list disagree");

  PseudoLabelOutcome out;
  out.all.resize(static_cast<std::size_t>(n));
  parallel_for(n, [&](Index begin, Index end) {
    for (Index r = begin; r < end; ++r) {
      const Eigen::VectorXd row = p.logits.row(r);
      int label = 0;
      for (Index c = 1; c < row.size(); ++c)
        if (row[c] > row[label]) label = static_cast<int>(c);  // ties keep the lower id
      const double alpha = margin_confidence(normalize_logits(row, params.temperature));
      out.all[static_cast<std::size_t>(r)] = {p.unlabeled[static_cast<std::size_t>(r)], label,
                                              alpha};
    }
  });

  std::vector<PseudoLabelRecord> kept;
  kept.reserve(out.all.size());
  for (const auto& rec : out.all) {
    if (rec.confidence < params.alpha_threshold)
      ++out.discarded;
    else
      kept.push_back(rec);
  }
  out.kept = PseudoLabelSet(std::move(kept));
  return out;
}

std::string confidence_summary_csv(const PseudoLabelOutcome& o) {
  std::array<Index, 10> bins{};
  for (const auto& rec : o.all) {
    int b = static_cast<int>(rec.confidence * 10.0);
    b = std::min(std::max(b, 0), 9);  // confidence 1.0 lands in the top bin
    ++bins[static_cast<std::size_t>(b)];
  }
  std::ostringstream head, vals;
  head << "kept,discarded";
  vals << o.kept.size() << ',' << o.discarded;
  for (int b = 0; b < 10; ++b) {
    head << ",bin" << b;
    vals << ',' << bins[static_cast<std::size_t>(b)];
  }
  return head.str() + "\n" + vals.str() + "\n";
}

}  // namespace mprop
