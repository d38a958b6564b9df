#include "gld/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "gld/error.hpp"
#include "gld/rng.hpp"

namespace gld {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = kFnvOffset;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::uint32_t read_u32(const char* p) {
  const auto* b = reinterpret_cast<const unsigned char*>(p);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::filesystem::path temp_path(const char* tag) {
  static std::atomic<unsigned> counter{0};
  return std::filesystem::temp_directory_path() /
         ("gld_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + tag);
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace

void EmbedderConfig::validate() const {
  if (dim <= 0) throw ConfigError("embedder dim must be positive");
  if (ngram_lo < 1 || ngram_lo > ngram_hi) throw ConfigError("embedder n-gram range must satisfy 1 <= lo <= hi");
  if (buckets < dim) throw ConfigError("embedder buckets must be >= dim");
  if (max_chars == 0) throw ConfigError("embedder max_chars must be positive");
  if (mode == EmbedderMode::toy && trainable) throw ConfigError("the toy embedder is frozen; trainable requires external mode");
  if (mode == EmbedderMode::external) {
    if (external_command.empty()) throw ConfigError("external embedder requires a command");
    if (trainable) {
      throw ConfigError("trainable external encoders cannot receive gradients through the command adapter");
    }
  }
}

std::string to_string(EmbedderMode mode) { return mode == EmbedderMode::toy ? "toy" : "external"; }

EmbedderMode embedder_mode_from_string(std::string_view s) {
  if (s == "toy") return EmbedderMode::toy;
  if (s == "external") return EmbedderMode::external;
  throw ConfigError("unknown embedder mode '" + std::string(s) + "'");
}

std::string prepare_text(std::string_view text, std::size_t max_chars) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
  text = text.substr(begin, end - begin);
  std::size_t chars = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    // Count code points by their leading bytes.
    if ((static_cast<unsigned char>(text[pos]) & 0xC0) != 0x80) {
      if (chars == max_chars) break;
      ++chars;
    }
    ++pos;
  }
  return std::string(text.substr(0, pos));
}

std::vector<std::pair<std::size_t, double>> ngram_counts(std::string_view prepared, const EmbedderConfig& cfg) {
  const std::string padded = " " + std::string(prepared) + " ";
  std::map<std::size_t, double> counts;
  const auto buckets = static_cast<std::uint64_t>(cfg.buckets);
  for (int n = cfg.ngram_lo; n <= cfg.ngram_hi; ++n) {
    const auto len = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + len <= padded.size(); ++i) {
      counts[fnv1a(std::string_view(padded).substr(i, len)) % buckets] += 1.0;
    }
  }
  if (counts.empty()) counts[fnv1a(padded) % buckets] += 1.0;
  return {counts.begin(), counts.end()};
}

Embedder::Embedder(EmbedderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.mode == EmbedderMode::external) encoder_ = std::make_shared<CommandEncoder>(cfg_.external_command);
}

Embedder::Embedder(EmbedderConfig cfg, std::shared_ptr<TextEncoder> encoder)
    : cfg_(std::move(cfg)), encoder_(std::move(encoder)) {
  if (cfg_.mode == EmbedderMode::external && cfg_.external_command.empty()) {
    // An in-process encoder stands in for the command.
    if (!encoder_) throw ConfigError("external embedder requires an encoder");
  } else {
    cfg_.validate();
  }
}

Eigen::VectorXd Embedder::embed_toy(std::string_view text) const {
  const std::string prepared = prepare_text(text, cfg_.max_chars);
  if (prepared.empty()) throw DataError("cannot embed empty text");
  const auto dim = static_cast<std::size_t>(cfg_.dim);
  const std::uint64_t base = splitmix64(cfg_.seed);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(cfg_.dim);
  for (const auto& [bucket, count] : ngram_counts(prepared, cfg_)) {
    for (std::size_t j = 0; j < dim; ++j) {
      const std::uint64_t bits = splitmix64(base + bucket * dim + j);
      z[static_cast<Eigen::Index>(j)] += (bits & 1U) != 0 ? count : -count;
    }
  }
  const double norm = z.norm();
  if (norm == 0.0) throw DataError("degenerate embedding (zero projection) for text");
  return z / norm;
}

Eigen::VectorXd Embedder::embed(std::string_view text) const {
  if (cfg_.mode == EmbedderMode::toy) return embed_toy(text);
  const std::vector<std::string> one{std::string(text)};
  return embed_batch(one).front();
}

std::vector<Eigen::VectorXd> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(texts.size());
  if (cfg_.mode == EmbedderMode::toy) {
    for (const auto& t : texts) out.push_back(embed_toy(t));
    return out;
  }

  std::vector<std::string> prepared;
  prepared.reserve(texts.size());
  for (const auto& t : texts) {
    prepared.push_back(prepare_text(t, cfg_.max_chars));
    if (prepared.back().empty()) throw DataError("cannot embed empty text");
  }
  EncodedBatch batch;
  if (encoder_->reentrant()) {
    batch = encoder_->encode(prepared);
  } else {
    std::lock_guard lock(encoder_mutex_);
    batch = encoder_->encode(prepared);
  }
  if (batch.dim != static_cast<std::size_t>(cfg_.dim)) {
    throw DataError("external encoder returned dim " + std::to_string(batch.dim) + ", expected " +
                    std::to_string(cfg_.dim));
  }
  if (batch.rows != texts.size() || batch.data.size() != batch.rows * batch.dim) {
    throw DataError("external encoder returned " + std::to_string(batch.rows) + " rows for " +
                    std::to_string(texts.size()) + " texts");
  }
  for (std::size_t r = 0; r < batch.rows; ++r) {
    Eigen::VectorXd z(cfg_.dim);
    for (std::size_t j = 0; j < batch.dim; ++j) {
      z[static_cast<Eigen::Index>(j)] = static_cast<double>(batch.data[r * batch.dim + j]);
    }
    if (!z.allFinite()) throw DataError("external encoder returned non-finite values");
    out.push_back(std::move(z));
  }
  return out;
}

EncodedBatch decode_encoded_batch(std::string_view bytes) {
  if (bytes.size() < 8) throw DataError("encoder output shorter than its header");
  EncodedBatch b;
  b.rows = read_u32(bytes.data());
  b.dim = read_u32(bytes.data() + 4);
  const std::size_t expected = 8 + b.rows * b.dim * sizeof(float);
  if (bytes.size() != expected) {
    throw DataError("encoder output has " + std::to_string(bytes.size()) + " bytes, expected " +
                    std::to_string(expected));
  }
  b.data.resize(b.rows * b.dim);
  for (std::size_t i = 0; i < b.data.size(); ++i) {
    const std::uint32_t raw = read_u32(bytes.data() + 8 + i * 4);
    std::memcpy(&b.data[i], &raw, sizeof(float));
  }
  return b;
}

EncodedBatch CommandEncoder::encode(std::span<const std::string> texts) {
  const auto in_path = temp_path("in.jsonl");
  const auto out_path = temp_path("out.bin");
  {
    std::ofstream in(in_path, std::ios::binary);
    for (const auto& t : texts) in << nlohmann::json{{"text", t}}.dump() << '\n';
  }
  const std::string cmd =
      "(" + command_ + ") < " + shell_quote(in_path.string()) + " > " + shell_quote(out_path.string());
  const int status = std::system(cmd.c_str());
  std::filesystem::remove(in_path);
  std::string bytes;
  {
    std::ifstream out(out_path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(out), std::istreambuf_iterator<char>());
  }
  std::filesystem::remove(out_path);
  if (status != 0) throw DataError("external encoder command failed with status " + std::to_string(status));
  return decode_encoded_batch(bytes);
}

Eigen::VectorXd embed_text(std::string_view text, const EmbedderConfig& cfg) { return Embedder(cfg).embed(text); }

std::vector<Eigen::VectorXd> embed_corpus(const Corpus& corpus, const EmbedderConfig& cfg) {
  if (corpus.size() == 0) throw DataError("cannot embed an empty corpus");
  const Embedder embedder(cfg);
  std::vector<Eigen::VectorXd> out;
  out.reserve(corpus.size());
  if (cfg.mode == EmbedderMode::toy) {
    for (const auto& d : corpus.documents()) {
      try {
        out.push_back(embedder.embed(d.text));
      } catch (const Error& e) {
        throw DataError("document '" + d.id + "': " + e.what());
      }
    }
    return out;
  }
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& d : corpus.documents()) texts.push_back(d.text);
  return embedder.embed_batch(texts);
}

}  // namespace gld
