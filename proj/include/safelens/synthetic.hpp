#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "safelens/influence.hpp"
#include "safelens/manifest.hpp"

namespace safelens {

/// Seven Gaussian clusters for desk-scale end-to-end runs. Class k is centred
/// at separation * e_k with isotropic noise.
struct SyntheticSpec {
  std::uint64_t seed = 0;
  std::size_t dim = 32;
  std::size_t train_per_class = 100;
  std::size_t val_per_class = 20;
  std::size_t test_per_class = 0;
  double separation = 5.0;
  double noise = 1.0;
  /// Share of training labels replaced by a different class.
  double flip_fraction = 0.0;
  /// Rows per hidden-state window; every row is an independent draw.
  std::size_t tokens = 1;
  /// Full-batch gradient steps of the linear softmax model whose per-sample
  /// gradients stand in for backbone gradients.
  std::size_t toy_steps = 10;
  double toy_learning_rate = 0.1;
  double duration_seconds = 6.0;
  std::size_t frame_count = 60;

  /// Throws ConfigError on out-of-range fields.
  void validate() const;
};

struct SyntheticCorpus {
  Manifest train;
  Manifest val;
  Manifest test;
  /// Keyed by record id (which is also the media key).
  std::map<std::string, HiddenStates, std::less<>> embeddings;
  std::map<std::string, GradientVector, std::less<>> gradients;
  std::map<std::string, Category, std::less<>> gold;
  std::vector<std::string> flipped_ids;
  /// Toy model weights, kNumCategories x dim row-major.
  std::vector<double> toy_weights;

  [[nodiscard]] std::vector<SampleRecord> all_records() const;
};

/// Fully determined by the spec. Train labels carry the flips; validation
/// and test labels are clean. Records reference embeddings/<id>.slvf and
/// gradients/<id>.slvf.
SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec);

/// softmax(W x) - e_y, the logit-space part of the toy gradient.
std::vector<double> toy_logit_residual(const std::vector<double>& weights, std::size_t dim,
                                       const std::vector<double>& x, Category y);

/// Writes train.jsonl, val.jsonl, test.jsonl (when nonempty) and the tensors
/// under `dir`, and sets each manifest's base_dir to `dir`.
void write_synthetic_corpus(SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace safelens
