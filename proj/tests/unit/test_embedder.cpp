#include <doctest.h>

#include <algorithm>

#include "gld/embedder.hpp"
#include "gld/error.hpp"
#include "gld/rng.hpp"

using namespace gld;

// Values printed by tests/oracles/toy_embed_oracle.py.
TEST_CASE("toy embedding matches the reference implementation") {
  const EmbedderConfig cfg;
  const auto fox = embed_text("the quick brown fox", cfg);
  const auto dog = embed_text("the quick brown dog", cfg);
  CHECK(fox.dot(dog) == doctest::Approx(0.811897093158660).epsilon(1e-12));
  CHECK(embed_text("abcdefg", cfg).dot(embed_text("uvwxyz", cfg)) == doctest::Approx(0.111645418989155).epsilon(1e-12));
  CHECK(fox[0] == doctest::Approx(0.257551057403792).epsilon(1e-12));
  CHECK(fox[3] == doctest::Approx(-0.188870775429447).epsilon(1e-12));

  const auto a = embed_text("a", cfg);
  CHECK(a[0] == doctest::Approx(-0.193649167310371).epsilon(1e-12));
  CHECK(a[3] == doctest::Approx(-0.06454972243679).epsilon(1e-12));

  const auto utf8 = embed_text("caf\xc3\xa9 na\xc3\xafve", cfg);
  CHECK(utf8[1] == doctest::Approx(0.155581968316883).epsilon(1e-12));

  EmbedderConfig seeded;
  seeded.seed = 7;
  CHECK(embed_text("the quick brown fox", seeded)[0] == doctest::Approx(0.050738256861880).epsilon(1e-12));

  EmbedderConfig small;
  small.dim = 8;
  const auto s = embed_text("the quick brown fox", small);
  CHECK(s[0] == doctest::Approx(-0.745601135079326).epsilon(1e-12));
  CHECK(s[7] == doctest::Approx(0.172061800402921).epsilon(1e-12));
}

TEST_CASE("determinism and unit norm") {
  const EmbedderConfig cfg;
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    std::string text;
    const std::size_t len = 1 + rng.index(60);
    for (std::size_t c = 0; c < len; ++c) text += static_cast<char>(' ' + rng.index(95));
    if (text.find_first_not_of(" ") == std::string::npos) text += "x";
    const auto first = embed_text(text, cfg);
    const auto second = embed_text(text, cfg);
    CHECK(first == second);
    CHECK(first.norm() == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("surrounding whitespace is ignored and long texts are truncated") {
  const EmbedderConfig cfg;
  CHECK(embed_text("  hello world\n", cfg) == embed_text("hello world", cfg));

  EmbedderConfig short_cfg;
  short_cfg.max_chars = 5;
  CHECK(embed_text("abcdefXYZ", short_cfg) == embed_text("abcde", short_cfg));
  CHECK(prepare_text("\xc3\xa9\xc3\xa9\xc3\xa9", 2) == "\xc3\xa9\xc3\xa9");
}

TEST_CASE("empty or whitespace-only text is rejected") {
  const EmbedderConfig cfg;
  CHECK_THROWS_AS(embed_text("", cfg), DataError);
  CHECK_THROWS_AS(embed_text(" \t\n", cfg), DataError);
}

TEST_CASE("config validation") {
  EmbedderConfig cfg;
  cfg.dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.ngram_lo = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.trainable = true;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.mode = EmbedderMode::external;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(embedder_mode_from_string("toy") == EmbedderMode::toy);
  CHECK_THROWS_AS(embedder_mode_from_string("bert"), ConfigError);
}

TEST_CASE("corpus embedding is a loop over documents and permutation equivariant") {
  std::vector<Document> docs;
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    std::string text;
    for (int w = 0; w < 8; ++w) text += std::string(1 + rng.index(6), static_cast<char>('a' + rng.index(26))) + " ";
    docs.push_back({"d" + std::to_string(i), text, i % 2 == 0 ? "human" : "llm", "news", i % 2});
  }
  const Corpus corpus(docs);
  const EmbedderConfig cfg;
  const auto batch = embed_corpus(corpus, cfg);
  REQUIRE(batch.size() == 50);
  for (std::size_t i = 0; i < docs.size(); ++i) CHECK(batch[i] == embed_text(docs[i].text, cfg));

  std::vector<Document> reversed(docs.rbegin(), docs.rend());
  const auto flipped = embed_corpus(Corpus(reversed), cfg);
  for (std::size_t i = 0; i < docs.size(); ++i) CHECK(flipped[i] == batch[docs.size() - 1 - i]);
}

namespace {

class FixedEncoder final : public TextEncoder {
 public:
  explicit FixedEncoder(std::size_t dim) : dim_(dim) {}
  EncodedBatch encode(std::span<const std::string> texts) override {
    EncodedBatch b;
    b.rows = texts.size();
    b.dim = dim_;
    for (const auto& t : texts) {
      for (std::size_t j = 0; j < dim_; ++j) b.data.push_back(static_cast<float>(t.size() + j));
    }
    return b;
  }

 private:
  std::size_t dim_;
};

}  // namespace

TEST_CASE("external encoders go through the adapter contract") {
  EmbedderConfig cfg;
  cfg.mode = EmbedderMode::external;
  cfg.dim = 3;
  const Embedder ok(cfg, std::make_shared<FixedEncoder>(3));
  const auto z = ok.embed("  abcd ");
  CHECK(z[0] == 4.0);
  CHECK(z[2] == 6.0);

  const Embedder wrong(cfg, std::make_shared<FixedEncoder>(2));
  CHECK_THROWS_AS(wrong.embed("abcd"), DataError);
}

TEST_CASE("command encoder protocol") {
  // One row of width two: 1.0f, 0.0f.
  EmbedderConfig cfg;
  cfg.mode = EmbedderMode::external;
  cfg.dim = 2;
  cfg.external_command =
      R"(cat > /dev/null; printf '\001\000\000\000\002\000\000\000\000\000\200\077\000\000\000\000')";
  const auto z = embed_text("anything", cfg);
  CHECK(z[0] == 1.0);
  CHECK(z[1] == 0.0);

  cfg.external_command = "cat > /dev/null; exit 3";
  CHECK_THROWS_AS(embed_text("anything", cfg), DataError);

  std::string bytes("\x01\x00\x00\x00\x02\x00\x00\x00", 8);
  CHECK_THROWS_AS(decode_encoded_batch(bytes), DataError);
  CHECK_THROWS_AS(decode_encoded_batch("abc"), DataError);
}
