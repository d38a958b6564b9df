#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace gld {

/// Author key reserved for human-written documents; always registry index 0.
inline constexpr std::string_view kHumanAuthor = "human";

struct Document {
  std::string id;
  std::string text;
  std::string author;
  std::string domain;
  int label = 0;  // 0 human, 1 LLM-generated
};

/// Dense key -> index registry in first-seen order.
class Registry {
 public:
  std::size_t intern(const std::string& key);
  std::size_t index_of(const std::string& key) const;  // throws DataError when absent
  bool contains(const std::string& key) const { return lookup_.contains(key); }
  const std::string& key(std::size_t index) const { return keys_.at(index); }
  const std::vector<std::string>& keys() const { return keys_; }
  std::size_t size() const { return keys_.size(); }

  bool operator==(const Registry& other) const { return keys_ == other.keys_; }

 private:
  std::vector<std::string> keys_;
  std::map<std::string, std::size_t, std::less<>> lookup_;
};

/// (author index, domain index). Author 0 is human; domains are 0-based.
struct GroupKey {
  std::size_t author = 0;
  std::size_t domain = 0;

  auto operator<=>(const GroupKey&) const = default;
};

/// Validated, immutable collection of labeled documents plus author and
/// domain registries. Human is pinned at author index 0.
class Corpus {
 public:
  /// Validates invariants and builds registries; throws DataError.
  explicit Corpus(std::vector<Document> documents);

  const std::vector<Document>& documents() const { return documents_; }
  const Document& document(std::size_t i) const { return documents_[i]; }
  std::size_t size() const { return documents_.size(); }

  const Registry& authors() const { return authors_; }
  const Registry& domains() const { return domains_; }
  /// Number of LLM authors (m).
  std::size_t llm_count() const { return authors_.size() - 1; }
  /// Number of domains (n).
  std::size_t domain_count() const { return domains_.size(); }

  std::size_t author_index(std::size_t doc) const { return author_index_[doc]; }
  std::size_t domain_index(std::size_t doc) const { return domain_index_[doc]; }
  GroupKey group_of(std::size_t doc) const { return {author_index_[doc], domain_index_[doc]}; }
  std::vector<int> labels() const;

  /// Copy of the documents at the given positions, re-registered.
  Corpus subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<Document> documents_;
  Registry authors_;
  Registry domains_;
  std::vector<std::size_t> author_index_;
  std::vector<std::size_t> domain_index_;
};

/// Reads a JSONL corpus: one {"id","text","author","domain","label"} object per line.
/// Blank lines are skipped. Errors name the 1-based line number.
Corpus load_corpus(const std::filesystem::path& path);

/// Parses a JSONL corpus from an in-memory string.
Corpus parse_corpus(std::string_view jsonl);

/// Serializes a corpus back to JSONL (inverse of parse_corpus).
std::string to_jsonl(const Corpus& corpus);

/// Partition of document indices by (author, domain). Every index appears exactly once.
std::map<GroupKey, std::vector<std::size_t>> group_embeddings(const Corpus& corpus,
                                                              std::span<const Eigen::VectorXd> embeddings);

struct LogoSplit {
  Corpus train;
  Corpus test;
};

/// Holds out one (LLM, domain) pair. Train: human docs and docs of the other
/// LLMs, all outside held_domain. Test: human and held_llm docs inside held_domain.
LogoSplit logo_split(const Corpus& corpus, const std::string& held_llm, const std::string& held_domain);

/// Document counts per author (rows, human first) and domain (columns).
struct CountTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  std::vector<std::vector<std::size_t>> counts;  // [author][domain]

  std::size_t row_total(std::size_t row) const;
  std::size_t column_total(std::size_t column) const;
  std::size_t total() const;
  /// Fixed-width text rendering with a Total column and Total row.
  std::string render() const;
};

CountTable count_table(const Corpus& corpus);

}  // namespace gld
