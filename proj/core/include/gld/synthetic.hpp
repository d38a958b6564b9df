#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gld/corpus.hpp"

namespace gld {

/// Seeded generator of labeled pseudo-text corpora. Each document mixes
/// words from several vocabularies of random letter strings:
///   class words    shared by every cell of a class (human vs LLM),
///   domain words   one vocabulary per domain (nuisance),
///   author words   one vocabulary per pseudo-LLM (nuisance),
///   filler words   shared by everything.
/// The class vocabularies give a direction shared across all cells; the
/// domain and author vocabularies add per-group offsets.
struct SyntheticSpec {
  std::vector<std::string> llms;
  std::vector<std::string> domains;
  std::size_t human_per_domain = 100;
  std::size_t llm_per_cell = 40;
  std::size_t words_per_doc = 30;
  std::size_t vocabulary_size = 40;
  /// Per-word probabilities of drawing from each vocabulary; the rest is filler.
  double class_rate = 0.2;
  double domain_rate = 0.3;
  double author_rate = 0.2;
  std::uint64_t seed = 0;
};

Corpus make_synthetic_corpus(const SyntheticSpec& spec);

/// Five LLMs x five domains with 1500 human documents per domain and 500
/// documents per (LLM, domain) cell: 20000 documents in total.
SyntheticSpec benchmark_spec(std::uint64_t seed = 0);

/// 3 pseudo-LLMs x 3 domains for quick generalization experiments.
SyntheticSpec small_generalization_spec(std::uint64_t seed = 0);

}  // namespace gld
