#pragma once

#include "gcnstab/graph.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gcnstab {

/// A node-classification task on one graph. Labels are kept as ±1; a {0,1}
/// labels.csv is read with 0 mapped to −1.
struct Dataset {
  Graph graph;
  FeatureMatrix<double> features;
  std::vector<int> labels;
  std::vector<Index> train;
  std::vector<Index> test;

  /// Hidden labelling direction of generated tasks.
  std::optional<Vector<double>> teacher;
  /// All-zero feature rows seen by the normalizer.
  Index zero_feature_rows = 0;

  Index num_nodes() const noexcept { return graph.num_nodes(); }
  Index feature_dim() const noexcept { return features.cols(); }

  /// Throws std::invalid_argument if sizes, label values or the split are inconsistent.
  void validate() const;
};

/// Reads graph.tsv, features.csv, labels.csv and split.json from `dir`.
/// Errors name the file and line.
Dataset load_canonical(const std::string& dir, bool normalize = true);

/// Writes the four canonical files into `dir` (created if missing).
void save_canonical(const Dataset& ds, const std::string& dir);

enum class SyntheticKind { ErdosRenyi, Star, Complete, Cycle };

std::string_view to_string(SyntheticKind kind);
SyntheticKind parse_synthetic_kind(std::string_view name);

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::ErdosRenyi;
  Index n = 100;
  /// Edge probability, ER only.
  double p = 0.05;
  Index d_in = 4;
  std::uint64_t seed = 0;
  double teacher_noise = 0.0;
  double train_fraction = 0.6;

  void validate() const;
};

/// Random graph of the requested family (Star has its center at node 0), standard
/// normal features normalized to unit rows, and labels sign(a·θ*) under the
/// symmetric normalized filter with each label flipped with probability
/// teacher_noise.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Reassigns the split: a seeded shuffle with round(fraction·N) training nodes,
/// kept within [1, N−1].
Dataset split(const Dataset& ds, double train_fraction, std::uint64_t seed);

}  // namespace gcnstab
