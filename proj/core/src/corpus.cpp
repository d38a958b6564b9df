#include "gld/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gld/error.hpp"

namespace gld {

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

Document parse_record(const std::string& raw, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(line_prefix(line) + "malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw DataError(line_prefix(line) + "record is not a JSON object");

  auto string_field = [&](const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw DataError(line_prefix(line) + "missing or non-string field '" + key + "'");
    }
    return it->get<std::string>();
  };

  Document doc;
  doc.id = string_field("id");
  doc.text = string_field("text");
  doc.author = string_field("author");
  doc.domain = string_field("domain");
  const auto label = j.find("label");
  if (label == j.end() || !label->is_number_integer()) {
    throw DataError(line_prefix(line) + "missing or non-integer field 'label'");
  }
  const auto value = label->get<long long>();
  if (value != 0 && value != 1) throw DataError(line_prefix(line) + "label must be 0 or 1");
  doc.label = static_cast<int>(value);
  return doc;
}

// Validates a single document; `where` prefixes error messages.
void validate_document(const Document& doc, const std::string& where) {
  if (doc.id.empty()) throw DataError(where + "empty id");
  if (is_blank(doc.text)) throw DataError(where + "document '" + doc.id + "' has empty text");
  if (doc.author.empty()) throw DataError(where + "document '" + doc.id + "' has empty author");
  if (doc.domain.empty()) throw DataError(where + "document '" + doc.id + "' has empty domain");
  const bool human = doc.author == kHumanAuthor;
  if (doc.label != 0 && doc.label != 1) throw DataError(where + "label must be 0 or 1");
  if (human != (doc.label == 0)) {
    throw DataError(where + "label " + std::to_string(doc.label) + " inconsistent with author '" + doc.author +
                    "' in document '" + doc.id + "'");
  }
}

Corpus parse_stream(std::istream& in) {
  std::vector<Document> docs;
  std::set<std::string, std::less<>> ids;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (is_blank(raw)) continue;
    Document doc = parse_record(raw, line);
    validate_document(doc, line_prefix(line));
    if (!ids.insert(doc.id).second) throw DataError(line_prefix(line) + "duplicate id '" + doc.id + "'");
    docs.push_back(std::move(doc));
  }
  return Corpus(std::move(docs));
}

}  // namespace

std::size_t Registry::intern(const std::string& key) {
  if (const auto it = lookup_.find(key); it != lookup_.end()) return it->second;
  keys_.push_back(key);
  lookup_.emplace(key, keys_.size() - 1);
  return keys_.size() - 1;
}

std::size_t Registry::index_of(const std::string& key) const {
  const auto it = lookup_.find(key);
  if (it == lookup_.end()) throw DataError("unknown key '" + key + "'");
  return it->second;
}

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
  authors_.intern(std::string(kHumanAuthor));
  std::set<std::string_view> ids;
  bool any_human = false;
  bool any_llm = false;
  author_index_.reserve(documents_.size());
  domain_index_.reserve(documents_.size());
  for (const auto& doc : documents_) {
    validate_document(doc, "");
    if (!ids.insert(doc.id).second) throw DataError("duplicate id '" + doc.id + "'");
    author_index_.push_back(authors_.intern(doc.author));
    domain_index_.push_back(domains_.intern(doc.domain));
    any_human |= doc.label == 0;
    any_llm |= doc.label == 1;
  }
  if (!any_human) throw DataError("corpus has no human-written documents");
  if (!any_llm) throw DataError("corpus has no LLM-generated documents");
}

std::vector<int> Corpus::labels() const {
  std::vector<int> out;
  out.reserve(documents_.size());
  for (const auto& d : documents_) out.push_back(d.label);
  return out;
}

Corpus Corpus::subset(std::span<const std::size_t> indices) const {
  std::vector<Document> docs;
  docs.reserve(indices.size());
  for (const auto i : indices) docs.push_back(documents_.at(i));
  return Corpus(std::move(docs));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file '" + path.string() + "'");
  return parse_stream(in);
}

Corpus parse_corpus(std::string_view jsonl) {
  std::istringstream in{std::string(jsonl)};
  return parse_stream(in);
}

std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus.documents()) {
    const nlohmann::json j = {{"id", d.id}, {"text", d.text}, {"author", d.author}, {"domain", d.domain},
                              {"label", d.label}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::map<GroupKey, std::vector<std::size_t>> group_embeddings(const Corpus& corpus,
                                                              std::span<const Eigen::VectorXd> embeddings) {
  if (embeddings.size() != corpus.size()) {
    throw DataError("embedding count " + std::to_string(embeddings.size()) + " does not match corpus size " +
                    std::to_string(corpus.size()));
  }
  std::map<GroupKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < corpus.size(); ++i) groups[corpus.group_of(i)].push_back(i);
  return groups;
}

LogoSplit logo_split(const Corpus& corpus, const std::string& held_llm, const std::string& held_domain) {
  if (held_llm == kHumanAuthor) throw DataError("held-out author must be an LLM, not 'human'");
  if (!corpus.authors().contains(held_llm)) throw DataError("unknown LLM '" + held_llm + "'");
  if (!corpus.domains().contains(held_domain)) throw DataError("unknown domain '" + held_domain + "'");

  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& d = corpus.document(i);
    const bool in_domain = d.domain == held_domain;
    const bool human = d.label == 0;
    if (in_domain) {
      if (human || d.author == held_llm) test.push_back(i);
    } else if (d.author != held_llm) {
      train.push_back(i);
    }
  }

  auto check = [&](const std::vector<std::size_t>& idx, const char* which) {
    if (idx.empty()) {
      throw DataError(std::string("empty ") + which + " split for held-out (" + held_llm + ", " + held_domain + ")");
    }
    const bool has_human = std::any_of(idx.begin(), idx.end(), [&](auto i) { return corpus.document(i).label == 0; });
    const bool has_llm = std::any_of(idx.begin(), idx.end(), [&](auto i) { return corpus.document(i).label == 1; });
    if (!has_human || !has_llm) {
      throw DataError(std::string(which) + " split for held-out (" + held_llm + ", " + held_domain +
                      ") lacks one of the two classes");
    }
  };
  check(train, "training");
  check(test, "test");
  return {corpus.subset(train), corpus.subset(test)};
}

std::size_t CountTable::row_total(std::size_t row) const {
  std::size_t s = 0;
  for (const auto c : counts.at(row)) s += c;
  return s;
}

std::size_t CountTable::column_total(std::size_t column) const {
  std::size_t s = 0;
  for (const auto& row : counts) s += row.at(column);
  return s;
}

std::size_t CountTable::total() const {
  std::size_t s = 0;
  for (std::size_t r = 0; r < counts.size(); ++r) s += row_total(r);
  return s;
}

std::string CountTable::render() const {
  std::size_t label_w = 5;
  for (const auto& r : row_labels) label_w = std::max(label_w, r.size());
  std::size_t col_w = 7;
  for (const auto& c : column_labels) col_w = std::max(col_w, c.size());
  col_w = std::max<std::size_t>(col_w, std::to_string(total()).size());

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_w)) << "" << std::right;
  for (const auto& c : column_labels) out << "  " << std::setw(static_cast<int>(col_w)) << c;
  out << "  " << std::setw(static_cast<int>(col_w)) << "Total" << '\n';
  for (std::size_t r = 0; r < counts.size(); ++r) {
    out << std::left << std::setw(static_cast<int>(label_w)) << row_labels[r] << std::right;
    for (const auto c : counts[r]) out << "  " << std::setw(static_cast<int>(col_w)) << c;
    out << "  " << std::setw(static_cast<int>(col_w)) << row_total(r) << '\n';
  }
  out << std::left << std::setw(static_cast<int>(label_w)) << "Total" << std::right;
  for (std::size_t c = 0; c < column_labels.size(); ++c) {
    out << "  " << std::setw(static_cast<int>(col_w)) << column_total(c);
  }
  out << "  " << std::setw(static_cast<int>(col_w)) << total() << '\n';
  return out.str();
}

CountTable count_table(const Corpus& corpus) {
  CountTable t;
  t.row_labels = corpus.authors().keys();
  t.row_labels[0] = "Human";
  t.column_labels = corpus.domains().keys();
  t.counts.assign(corpus.authors().size(), std::vector<std::size_t>(corpus.domains().size(), 0));
  for (std::size_t i = 0; i < corpus.size(); ++i) ++t.counts[corpus.author_index(i)][corpus.domain_index(i)];
  return t;
}

}  // namespace gld
