#include "gld/synthetic.hpp"

#include "gld/error.hpp"
#include "gld/rng.hpp"

namespace gld {

namespace {

using Vocabulary = std::vector<std::string>;

Vocabulary make_vocabulary(std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  Vocabulary words;
  words.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t len = 4 + rng.index(5);
    std::string w;
    for (std::size_t c = 0; c < len; ++c) w += static_cast<char>('a' + rng.index(26));
    words.push_back(std::move(w));
  }
  return words;
}

std::string make_text(Rng& rng, const SyntheticSpec& spec, const Vocabulary& cls, const Vocabulary& domain,
                      const Vocabulary* author, const Vocabulary& filler) {
  std::string text;
  for (std::size_t w = 0; w < spec.words_per_doc; ++w) {
    const double u = rng.uniform();
    const Vocabulary* source = &filler;
    if (u < spec.class_rate) {
      source = &cls;
    } else if (u < spec.class_rate + spec.domain_rate) {
      source = &domain;
    } else if (author != nullptr && u < spec.class_rate + spec.domain_rate + spec.author_rate) {
      source = author;
    }
    if (!text.empty()) text += ' ';
    text += (*source)[rng.index(source->size())];
  }
  return text;
}

}  // namespace

Corpus make_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.llms.empty() || spec.domains.empty()) throw ConfigError("synthetic corpus needs LLMs and domains");
  if (spec.words_per_doc == 0 || spec.vocabulary_size == 0) throw ConfigError("synthetic documents need words");
  // Vocabularies depend only on the seed and their role, never on corpus size.
  const std::uint64_t base = splitmix64(spec.seed);
  std::uint64_t tag = 0;
  const auto human_words = make_vocabulary(spec.vocabulary_size, base + (++tag));
  const auto llm_words = make_vocabulary(spec.vocabulary_size, base + (++tag));
  const auto filler = make_vocabulary(spec.vocabulary_size * 4, base + (++tag));
  std::vector<Vocabulary> domain_words;
  for (std::size_t d = 0; d < spec.domains.size(); ++d) {
    domain_words.push_back(make_vocabulary(spec.vocabulary_size, base + 1000 + d));
  }
  std::vector<Vocabulary> author_words;
  for (std::size_t a = 0; a < spec.llms.size(); ++a) {
    author_words.push_back(make_vocabulary(spec.vocabulary_size, base + 2000 + a));
  }

  Rng rng(base + 3000);
  std::vector<Document> docs;
  docs.reserve(spec.domains.size() * (spec.human_per_domain + spec.llms.size() * spec.llm_per_cell));
  for (std::size_t d = 0; d < spec.domains.size(); ++d) {
    for (std::size_t i = 0; i < spec.human_per_domain; ++i) {
      docs.push_back({"h-" + spec.domains[d] + "-" + std::to_string(i),
                      make_text(rng, spec, human_words, domain_words[d], nullptr, filler), std::string(kHumanAuthor),
                      spec.domains[d], 0});
    }
    for (std::size_t a = 0; a < spec.llms.size(); ++a) {
      for (std::size_t i = 0; i < spec.llm_per_cell; ++i) {
        docs.push_back({spec.llms[a] + "-" + spec.domains[d] + "-" + std::to_string(i),
                        make_text(rng, spec, llm_words, domain_words[d], &author_words[a], filler), spec.llms[a],
                        spec.domains[d], 1});
      }
    }
  }
  return Corpus(std::move(docs));
}

SyntheticSpec benchmark_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.llms = {"GPT-4o", "Command-R", "LLaMA-3.1", "OPT", "GPT-NeoX"};
  spec.domains = {"News", "Review", "Story", "Knowledge", "QA"};
  spec.human_per_domain = 1500;
  spec.llm_per_cell = 500;
  spec.words_per_doc = 12;
  spec.seed = seed;
  return spec;
}

SyntheticSpec small_generalization_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.llms = {"llm-a", "llm-b", "llm-c"};
  spec.domains = {"dom-x", "dom-y", "dom-z"};
  spec.human_per_domain = 60;
  spec.llm_per_cell = 20;
  spec.words_per_doc = 40;
  spec.class_rate = 0.35;
  spec.domain_rate = 0.25;
  spec.author_rate = 0.2;
  spec.seed = seed;
  return spec;
}

}  // namespace gld
