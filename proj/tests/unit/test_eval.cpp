#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "gld/error.hpp"
#include "gld/eval.hpp"
#include "gld/rng.hpp"
#include "gld/synthetic.hpp"
#include "oracles/oracles.hpp"

using namespace gld;

namespace {

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.embedder.dim = 16;
  cfg.q = 3;
  cfg.epochs = 2;
  cfg.batch_size = 32;
  cfg.learning_rate = 1e-2;
  cfg.seed = 3;
  return cfg;
}

Corpus micro_corpus(std::size_t llms, std::size_t domains, std::uint64_t seed = 1, std::size_t human = 16,
                    std::size_t per_cell = 8) {
  SyntheticSpec spec = small_generalization_spec(seed);
  spec.llms.resize(llms);
  spec.domains.resize(domains);
  const char* llm_names[] = {"llm-a", "llm-b", "llm-c"};
  const char* domain_names[] = {"dom-x", "dom-y", "dom-z"};
  for (std::size_t i = 0; i < llms; ++i) spec.llms[i] = llm_names[i];
  for (std::size_t i = 0; i < domains; ++i) spec.domains[i] = domain_names[i];
  spec.human_per_domain = human;
  spec.llm_per_cell = per_cell;
  return make_synthetic_corpus(spec);
}

}  // namespace

TEST_CASE("auc examples") {
  const std::vector<double> separated{0.9, 0.8, 0.2, 0.1};
  const std::vector<int> labels{1, 1, 0, 0};
  CHECK(auc(separated, labels) == 1.0);
  const std::vector<double> flat{0.4, 0.4, 0.4, 0.4};
  CHECK(auc(flat, labels) == 0.5);
  const std::vector<double> mixed{0.8, 0.6, 0.4};
  const std::vector<int> mixed_labels{1, 0, 1};
  CHECK(auc(mixed, mixed_labels) == 0.5);
  const std::vector<int> one_class{1, 1, 1, 1};
  CHECK_THROWS(auc(separated, one_class));
}

TEST_CASE("auc equals the pairwise oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(40);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores force ties.
      scores[i] = std::round(rng.uniform() * 8.0) / 8.0;
      labels[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    CHECK(auc(scores, labels) == oracle::pairwise_auc(scores, labels));
  }
}

TEST_CASE("f1 examples") {
  CHECK(f1_from_counts(5, 0, 5) == 1.0);
  CHECK(f1_from_counts(0, 3, 5) == 0.0);
  CHECK(f1_from_counts(3, 1, 5) == doctest::Approx(6.0 / 9.0));
  CHECK_THROWS(f1_from_counts(0, 0, 0));

  std::vector<Prediction> preds;
  preds.push_back({"a", 0.9, 1, 1});
  preds.push_back({"b", 0.5, 1, 0});
  preds.push_back({"c", 0.2, 0, 1});
  CHECK(f1_score(preds) == doctest::Approx(0.5));
}

TEST_CASE("variant names") {
  for (const auto v : all_ablation_variants()) CHECK(ablation_variant_from_string(to_string(v)) == v);
  CHECK(all_ablation_variants().size() == 7);
  CHECK(to_string(AblationVariant::no_dmc) == "no-DMC");
  CHECK_THROWS_AS(ablation_variant_from_string("no-everything"), ConfigError);

  const TrainConfig base;
  const auto no_dmc = apply_variant(base, AblationVariant::no_dmc);
  CHECK(no_dmc.weights.lambda_h == 0.0);
  CHECK(no_dmc.weights.lambda_g == 0.0);
  CHECK(no_dmc.weights.lambda_y == base.weights.lambda_y);
  const auto no_tmn = apply_variant(base, AblationVariant::no_tmn);
  CHECK_FALSE(no_tmn.use_author_memory);
  CHECK_FALSE(no_tmn.use_domain_memory);
  CHECK(apply_variant(base, AblationVariant::no_human_dmc).weights.lambda_g == base.weights.lambda_g);
  CHECK(apply_variant(base, AblationVariant::no_llm_dmc).weights.lambda_g == 0.0);
}

TEST_CASE("detect is deterministic and leaves the banks alone") {
  const Corpus c = micro_corpus(2, 2, 1, 30, 10);
  REQUIRE(c.size() == 100);
  const Model m = train(c, quick_config());
  const auto banks_before = m.tmn.author.banks;
  std::vector<DetectInput> docs;
  for (std::size_t i = 0; i < 100; ++i) docs.push_back({c.document(i).id, c.document(i).text, c.document(i).label});
  docs.push_back({"dup", c.document(0).text, {}});
  docs.push_back({"empty", "   ", {}});
  const auto result = detect(m, docs);
  REQUIRE(result.predictions.size() == 101);
  REQUIRE(result.failures.size() == 1);
  CHECK(result.failures[0].id == "empty");
  CHECK(result.predictions[0].score == result.predictions[100].score);
  for (const auto& p : result.predictions) {
    CHECK(p.score > 0.0);
    CHECK(p.score < 1.0);
    CHECK(p.predicted == (p.score >= 0.5 ? 1 : 0));
  }
  for (std::size_t i = 0; i < banks_before.size(); ++i) CHECK(banks_before[i].units == m.tmn.author.banks[i].units);

  Model open = m;
  open.tmn.frozen = false;
  CHECK_THROWS(detect(open, docs));
}

TEST_CASE("a trained toy model ranks a held-out LLM document above a human one") {
  auto spec = small_generalization_spec(7);
  const Corpus c = make_synthetic_corpus(spec);
  const auto split = logo_split(c, "llm-b", "dom-y");
  TrainConfig cfg;
  cfg.embedder.dim = 32;
  cfg.epochs = 4;
  cfg.batch_size = 32;
  cfg.learning_rate = 1e-2;
  const Model m = train(split.train, cfg);
  const auto result = detect(m, split.test);
  double human = 0.0;
  double llm = 0.0;
  std::size_t nh = 0;
  std::size_t nl = 0;
  for (const auto& p : result.predictions) {
    (*p.label == 1 ? llm : human) += p.score;
    (*p.label == 1 ? nl : nh) += 1;
  }
  CHECK(llm / static_cast<double>(nl) > human / static_cast<double>(nh));
}

TEST_CASE("logo over a 2x2 corpus") {
  const Corpus c = micro_corpus(2, 2);
  const auto report = run_logo(c, quick_config());
  REQUIRE(report.cells.size() == 4);
  CHECK(report.evaluated() == 4);
  double mean = 0.0;
  for (const auto& cell : report.cells) {
    CHECK(cell.train_size > 0);
    CHECK(cell.test_size == 24);
    mean += cell.auc / 4.0;
  }
  CHECK(report.auc.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(report.llm_mean_auc.size() == 2);
  CHECK(report.llm_mean_auc[0] == doctest::Approx((report.cell(0, 0).auc + report.cell(0, 1).auc) / 2.0));
  CHECK(report.domain_mean_f1[1] == doctest::Approx((report.cell(0, 1).f1 + report.cell(1, 1).f1) / 2.0));

  LogoReport copy = report;
  copy.aggregate();
  CHECK(std::abs(copy.auc.mean - report.auc.mean) <= 1e-12);
  CHECK(std::abs(copy.auc.stddev - report.auc.stddev) <= 1e-12);

  const auto j = nlohmann::json::parse(report.to_json());
  CHECK(j.at("schema_version") == kReportSchemaVersion);
  CHECK(j.at("cells").size() == 4);
  const std::string csv = report.to_csv();
  CHECK(csv.rfind("llm,domain,status,auc,f1,train_size,test_size\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("a missing cell is skipped and excluded from aggregates") {
  // With three LLMs every other cell still has LLM documents on both sides of its split.
  Corpus full = micro_corpus(3, 2);
  std::vector<Document> docs;
  for (const auto& d : full.documents()) {
    if (d.author == "llm-a" && d.domain == "dom-y") continue;
    docs.push_back(d);
  }
  const auto report = run_logo(Corpus(docs), quick_config());
  REQUIRE(report.cells.size() == 6);
  CHECK(report.evaluated() == 5);
  CHECK(report.cell(0, 1).skipped);
  CHECK_FALSE(report.cell(0, 1).skip_reason.empty());
  double mean = 0.0;
  for (const auto& cell : report.cells) {
    if (!cell.skipped) mean += cell.auc / 5.0;
  }
  CHECK(report.auc.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(report.to_csv().find("skipped") != std::string::npos);
}

TEST_CASE("logo needs two LLMs and two domains") {
  CHECK_THROWS_AS(run_logo(micro_corpus(1, 2), quick_config()), DataError);
  CHECK_THROWS_AS(run_logo(micro_corpus(2, 1), quick_config()), DataError);
}

TEST_CASE("worker count does not change the report") {
  const Corpus c = micro_corpus(2, 2);
  TrainConfig cfg = quick_config();
  const auto serial = run_logo(c, cfg);
  cfg.workers = 3;
  const auto parallel = run_logo(c, cfg);
  CHECK(serial.to_csv() == parallel.to_csv());
}

TEST_CASE("every ablation variant runs") {
  const Corpus c = micro_corpus(2, 2);
  TrainConfig cfg = quick_config();
  cfg.epochs = 1;
  for (const auto v : all_ablation_variants()) {
    const auto report = run_ablation(c, cfg, v);
    CHECK(report.variant == to_string(v));
    CHECK(report.evaluated() == 4);
  }
}
