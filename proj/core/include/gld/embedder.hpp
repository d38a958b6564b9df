#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "gld/corpus.hpp"

namespace gld {

enum class EmbedderMode { toy, external };

struct EmbedderConfig {
  int dim = 64;
  EmbedderMode mode = EmbedderMode::toy;
  std::uint64_t seed = 0;
  int ngram_lo = 2;
  int ngram_hi = 4;
  int buckets = 4096;
  /// Texts are truncated to this many UTF-8 code points before embedding.
  std::size_t max_chars = 4000;
  /// External mode only: gradients would flow into the encoder.
  bool trainable = false;
  /// External mode only: shell command implementing the encoder protocol.
  std::string external_command;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

std::string to_string(EmbedderMode mode);
EmbedderMode embedder_mode_from_string(std::string_view s);

/// Output of an encoder call: row-major float32 (rows x dim).
struct EncodedBatch {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> data;
};

/// Adapter contract for an external pretrained encoder: a batch of strings
/// in, one row of width dim per string out.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual EncodedBatch encode(std::span<const std::string> texts) = 0;
  /// Encoders that are not reentrant get their calls serialized.
  virtual bool reentrant() const { return false; }
};

/// Runs a shell command once per batch. The command reads JSONL records
/// {"text": ...} on stdin and writes to stdout a little-endian header
/// (uint32 rows, uint32 dim) followed by rows*dim float32 values.
class CommandEncoder final : public TextEncoder {
 public:
  explicit CommandEncoder(std::string command) : command_(std::move(command)) {}
  EncodedBatch encode(std::span<const std::string> texts) override;

 private:
  std::string command_;
};

/// Parses the binary matrix emitted by an external encoder.
EncodedBatch decode_encoded_batch(std::string_view bytes);

/// Trims surrounding whitespace and truncates to max_chars code points.
std::string prepare_text(std::string_view text, std::size_t max_chars);

/// Hashed character n-gram counts of the (already prepared) text. The text is
/// padded with one space on each side; n-grams are taken over UTF-8 bytes.
std::vector<std::pair<std::size_t, double>> ngram_counts(std::string_view prepared, const EmbedderConfig& cfg);

/// Embeds documents according to a config; owns the external encoder when one is configured.
class Embedder {
 public:
  explicit Embedder(EmbedderConfig cfg);
  Embedder(EmbedderConfig cfg, std::shared_ptr<TextEncoder> encoder);

  const EmbedderConfig& config() const { return cfg_; }

  Eigen::VectorXd embed(std::string_view text) const;
  std::vector<Eigen::VectorXd> embed_batch(std::span<const std::string> texts) const;

 private:
  Eigen::VectorXd embed_toy(std::string_view text) const;

  EmbedderConfig cfg_;
  std::shared_ptr<TextEncoder> encoder_;
  mutable std::mutex encoder_mutex_;
};

/// d-dimensional textual embedding of one document.
Eigen::VectorXd embed_text(std::string_view text, const EmbedderConfig& cfg);

/// Embeddings for every document, in corpus order.
std::vector<Eigen::VectorXd> embed_corpus(const Corpus& corpus, const EmbedderConfig& cfg);

}  // namespace gld
