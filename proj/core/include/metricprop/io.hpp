#pragma once

#include <string>
#include <vector>

#include "metricprop/types.hpp"

namespace mprop {

// Binary embedding container: magic "EMB1", u32-LE n, u32-LE d, then n*d
// f32-LE row-major values, no padding. Bitwise round-trip safe.
EmbeddingMatrix read_embeddings(const std::string& path);
void write_embeddings(const EmbeddingMatrix& m, const std::string& path);

// Header-free CSV `index,class_id`. num_points bounds the index range; pass
// -1 to skip the bound check (tools that know n pass it).
LabeledSet read_labels(const std::string& path, int num_classes, Index num_points = -1);
void write_labels(const LabeledSet& labels, const std::string& path);

// Header-free CSV `index,pseudo_label,confidence`, confidence printed with
// enough digits to round-trip through decimal text.
PseudoLabelSet read_pseudo_labels(const std::string& path);
void write_pseudo_labels(const PseudoLabelSet& set, const std::string& path);

// Decimal formatting used for every real value this library writes: shortest
// text that parses back to the identical double (printf %.17g trimmed).
std::string format_double(double v);

// One-value-per-line index sidecar (for logits dumps).
std::vector<Index> read_index_list(const std::string& path);
void write_index_list(const std::vector<Index>& indices, const std::string& path);

}  // namespace mprop
