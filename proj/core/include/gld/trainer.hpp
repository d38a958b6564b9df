#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gld/corpus.hpp"
#include "gld/dgm.hpp"
#include "gld/embedder.hpp"
#include "gld/tmn.hpp"

namespace gld {

/// Training hyperparameters. Defaults follow the reference setup
/// (Adam, lr 5e-5, 4 epochs, Q = 10, r1 = -3, r2 = 1, lambda_y/h/g = 0.1/0.2/0.2).
struct TrainConfig {
  int epochs = 4;
  double learning_rate = 5e-5;
  int batch_size = 64;
  int q = 10;
  double tau = 1.0;
  double beta = 0.5;
  LossWeights weights;
  KernelConfig kernel;
  std::uint64_t seed = 0;
  EmbedderConfig embedder;
  bool use_author_memory = true;
  bool use_domain_memory = true;
  Precision precision = Precision::f32;
  /// Worker threads for independent evaluation cells (LOGO); training itself is sequential.
  int workers = 1;
  /// Where to write a checkpoint of the current state if the loss turns non-finite (empty: none).
  std::string failure_dump_path;

  void validate() const;
};

/// Per-epoch sums of the per-batch loss components.
struct EpochStats {
  int epoch = 0;
  std::size_t batches = 0;
  double total = 0.0;
  double loss_y = 0.0;
  double loss_h = 0.0;
  double loss_g = 0.0;
};

/// Trained detector: embedder settings, frozen twin memory networks and the
/// classification head. Discrepancy components are training-only.
struct Model {
  TrainConfig config;
  std::vector<std::string> authors;
  std::vector<std::string> domains;
  TmnState tmn;
  ClassifierParams classifier;
  std::vector<EpochStats> history;

  /// Every trainable tensor with its stable name.
  std::vector<NamedParameter> parameters();
};

/// Group-stratified batches: each group's shuffled documents are cut into
/// chunks of `chunk_size`, chunks from all groups are interleaved in
/// proportion to group size and packed into batches of at most `batch_size`.
/// Falls back to a plain shuffle (with a warning) when the corpus lacks two
/// human domains or two LLM cells.
std::vector<std::vector<std::size_t>> make_batches(const Corpus& corpus, std::uint64_t seed, int batch_size,
                                                   int chunk_size = 4);

/// Loss components of one batch.
struct BatchLoss {
  double total = 0.0;
  double loss_y = 0.0;
  double loss_h = 0.0;
  double loss_g = 0.0;
};

/// Untrained model for a corpus: banks from k-means over `embeddings`,
/// attention and classifier initialised from the config seed.
Model initialize_model(const Corpus& corpus, std::span<const Eigen::VectorXd> embeddings, const TrainConfig& config);

/// Forward pass over one batch with memory updates and loss assembly. When
/// `accumulate` is set the total loss is back-propagated into the parameter gradients.
BatchLoss batch_forward(Model& model, const Corpus& corpus, std::span<const Eigen::VectorXd> embeddings,
                        std::span<const std::size_t> batch, bool accumulate);

/// Full training run. Returns a frozen model.
Model train(const Corpus& corpus, const TrainConfig& config);

/// Same, reusing precomputed embeddings aligned with corpus.documents().
Model train(const Corpus& corpus, std::span<const Eigen::VectorXd> embeddings, const TrainConfig& config);

}  // namespace gld
