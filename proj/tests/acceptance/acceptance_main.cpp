// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gld/checkpoint.hpp"
#include "gld/corpus.hpp"
#include "gld/dgm.hpp"
#include "gld/eval.hpp"
#include "gld/rng.hpp"
#include "gld/synthetic.hpp"
#include "gld/tmn.hpp"
#include "gld/trainer.hpp"
#include "oracles/oracles.hpp"

namespace fs = std::filesystem;
using namespace gld;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0, double shift = 0.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = shift + scale * rng.normal();
  return m;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

Outcome mmd_oracle() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = 1 + static_cast<Eigen::Index>(rng.index(16));
    const auto a = random_matrix(rng, d, 1 + static_cast<Eigen::Index>(rng.index(64)), 0.5);
    const auto b = random_matrix(rng, d, 1 + static_cast<Eigen::Index>(rng.index(64)), 0.5, 0.1 * rng.normal());
    worst = std::max(worst, std::abs(mmd(a, b, KernelConfig{}) - oracle::naive_mmd(a, b)));
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-10 && elapsed < 30.0, "max |diff| " + fmt(worst) + " over 200 pairs, " + fmt(elapsed) + " s"};
}

Outcome kernel_axioms() {
  Rng rng(102);
  const KernelConfig cfg;
  int violations = 0;
  double min_mmd = INFINITY;
  double max_self = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto d = 1 + static_cast<Eigen::Index>(rng.index(16));
    const Eigen::VectorXd x = random_matrix(rng, d, 1, 0.7);
    const Eigen::VectorXd y = random_matrix(rng, d, 1, 0.7);
    const double kxy = kernel(x, y, cfg);
    if (kernel(x, x, cfg) != 1.0) ++violations;
    if (!(kxy > 0.0 && kxy <= 1.0)) ++violations;
    if (kxy != kernel(y, x, cfg)) ++violations;

    const auto a = random_matrix(rng, d, 1 + static_cast<Eigen::Index>(rng.index(12)), 0.7);
    const auto b = random_matrix(rng, d, 1 + static_cast<Eigen::Index>(rng.index(12)), 0.7, 0.2);
    const double ab = mmd(a, b, cfg);
    if (std::abs(ab - mmd(b, a, cfg)) > 1e-12) ++violations;
    max_self = std::max(max_self, std::abs(mmd(a, a, cfg)));
    min_mmd = std::min(min_mmd, ab);
  }
  const bool pass = violations == 0 && max_self <= 1e-12 && min_mmd >= -1e-12;
  return {pass, std::to_string(violations) + " kernel/symmetry violations, max |MMD(D,D)| " + fmt(max_self) +
                    ", min MMD " + fmt(min_mmd) + " over 1000 draws"};
}

Outcome attention_simplex() {
  Rng rng(103);
  double worst_sum = 0.0;
  double min_weight = INFINITY;
  const double taus[] = {1e-3, 1e6, 1.0, 0.1, 10.0};
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + static_cast<int>(rng.index(8));
    const int q = 1 + static_cast<int>(rng.index(6));
    const int entities = 1 + static_cast<int>(rng.index(6));
    const double tau = taus[trial % 5];
    Rng init(static_cast<std::uint64_t>(trial));
    auto params = AttentionParams::init(d, tau, init);
    params.w_a.value = random_matrix(rng, d, d, 2.0);
    params.w_b.value = random_matrix(rng, d, d, 2.0);
    const Eigen::VectorXd z = random_matrix(rng, d, 1, 3.0);
    MemoryBank bank;
    bank.units = random_matrix(rng, d, q, 3.0);
    const auto l1 = level1_attend(z, bank, params);
    std::vector<Eigen::VectorXd> reps;
    for (int e = 0; e < entities; ++e) reps.push_back(random_matrix(rng, d, 1, 3.0));
    const auto l2 = level2_attend(z, reps, params);
    for (const auto* w : {&l1.weights, &l2.weights}) {
      worst_sum = std::max(worst_sum, std::abs(w->sum() - 1.0));
      min_weight = std::min(min_weight, w->minCoeff());
    }
  }
  return {worst_sum <= 1e-6 && min_weight >= 0.0,
          "max |sum - 1| " + fmt(worst_sum) + ", min weight " + fmt(min_weight) + " over 1000 draws per level"};
}

bool same_bits(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
}

Outcome memory_isolation() {
  auto spec = small_generalization_spec(104);
  spec.human_per_domain = 30;
  spec.llm_per_cell = 10;
  const Corpus corpus = make_synthetic_corpus(spec);
  TrainConfig cfg;
  cfg.embedder.dim = 16;
  cfg.q = 4;
  const auto embeddings = embed_corpus(corpus, cfg.embedder);
  Model model = initialize_model(corpus, embeddings, cfg);
  TmnState& tmn = model.tmn;

  std::size_t isolation_failures = 0;
  std::size_t changed_units = 0;
  double worst_segment = 0.0;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto g = corpus.author_index(k);
    const auto s = corpus.domain_index(k);
    const auto author_before = tmn.author.banks;
    const auto domain_before = tmn.domain.banks;
    const auto author_expect = level1_attend(embeddings[k], author_before[g], tmn.author.attention);
    const auto domain_expect = level1_attend(embeddings[k], domain_before[s], tmn.domain.attention);
    (void)tmn_forward_train(embeddings[k], g, s, tmn);

    for (std::size_t i = 0; i < author_before.size(); ++i) {
      if (i != g && !same_bits(author_before[i].units, tmn.author.banks[i].units)) ++isolation_failures;
    }
    for (std::size_t i = 0; i < domain_before.size(); ++i) {
      if (i != s && !same_bits(domain_before[i].units, tmn.domain.banks[i].units)) ++isolation_failures;
    }
    // Each written unit must lie on the segment from its old value to the adjusted representation.
    const auto check_segment = [&](const MemoryBank& old_bank, const MemoryBank& new_bank, const Eigen::VectorXd& rep) {
      for (int q = 0; q < old_bank.size(); ++q) {
        const Eigen::VectorXd from = old_bank.units.col(q);
        const Eigen::VectorXd to = new_bank.units.col(q);
        if (same_bits(from, to)) continue;
        ++changed_units;
        const Eigen::VectorXd dir = rep - from;
        const double t = std::clamp(dir.squaredNorm() > 0 ? (to - from).dot(dir) / dir.squaredNorm() : 0.0, 0.0, 1.0);
        worst_segment = std::max(worst_segment, (to - (from + t * dir)).cwiseAbs().maxCoeff());
      }
    };
    check_segment(author_before[g], tmn.author.banks[g], author_expect.adjusted);
    check_segment(domain_before[s], tmn.domain.banks[s], domain_expect.adjusted);
  }
  return {isolation_failures == 0 && changed_units > 0 && worst_segment <= 1e-6,
          std::to_string(corpus.size()) + " documents, " + std::to_string(isolation_failures) +
              " unlabelled banks changed, " + std::to_string(changed_units) + " units written, max distance to segment " +
              fmt(worst_segment)};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  SyntheticSpec spec;
  spec.llms = {"llm-a", "llm-b"};
  spec.domains = {"dom-x", "dom-y"};
  spec.human_per_domain = 5;
  spec.llm_per_cell = 4;
  spec.words_per_doc = 12;
  spec.seed = 105;
  const Corpus corpus = make_synthetic_corpus(spec);
  TrainConfig cfg;
  cfg.embedder.dim = 8;
  cfg.q = 2;
  cfg.precision = Precision::f64;
  // Memory writes are state updates outside the graph; with beta = 0 the
  // finite-difference objective sees the same banks as the analytic one.
  cfg.beta = 0.0;
  cfg.seed = 5;
  const auto embeddings = embed_corpus(corpus, cfg.embedder);
  Model model = initialize_model(corpus, embeddings, cfg);
  std::vector<std::size_t> batch(corpus.size());
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;

  const auto params = model.parameters();
  for (const auto& p : params) p.param->zero_grad();
  const auto loss = batch_forward(model, corpus, embeddings, batch, true);

  // Smaller steps let float64 roundoff dominate on near-zero gradients; larger
  // ones start crossing ReLU kinks.
  constexpr double kStep = 1e-4;
  constexpr double kFloor = 1e-7;
  double worst = 0.0;
  std::string worst_name;
  std::size_t checked = 0;
  for (const auto& p : params) {
    for (Eigen::Index i = 0; i < p.param->value.size(); ++i) {
      const double numeric = oracle::central_difference(p.param->value.data() + i, kStep, [&] {
        return batch_forward(model, corpus, embeddings, batch, false).total;
      });
      const double analytic = p.param->grad.data()[i];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kFloor});
      if (rel > worst) {
        worst = rel;
        worst_name = p.name;
      }
      ++checked;
    }
  }
  const double elapsed = seconds_since(t0);
  const bool discrepancy_active = loss.loss_h > 0.0 && loss.loss_g > 0.0;
  return {worst <= 1e-4 && elapsed < 60.0 && discrepancy_active,
          std::to_string(checked) + " parameters, h " + fmt(kStep) + ", max rel err " + fmt(worst) + (worst_name.empty() ? "" : " (" + worst_name + ")") +
              ", L_h " + fmt(loss.loss_h) + ", L_g " + fmt(loss.loss_g) + ", " + fmt(elapsed) + " s"};
}

Outcome metric_oracles() {
  Rng rng(106);
  int auc_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.index(60);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    const double grid = 1.0 + static_cast<double>(rng.index(20));
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = std::round(rng.uniform() * grid) / grid;
      labels[i] = rng.uniform() < 0.4 ? 1 : 0;
    }
    // Both classes must be present; their positions do not matter to either side.
    labels[0] = 1;
    labels[1] = 0;
    if (auc(scores, labels) != oracle::pairwise_auc(scores, labels)) ++auc_mismatch;
  }

  int f1_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t positives = 1 + rng.index(30);
    const std::size_t tp = rng.index(positives + 1);
    const std::size_t fp = rng.index(30);
    std::vector<Prediction> preds;
    for (std::size_t i = 0; i < positives; ++i) {
      const bool hit = i < tp;
      preds.push_back({"p" + std::to_string(i), hit ? 0.9 : 0.1, hit ? 1 : 0, 1});
    }
    for (std::size_t i = 0; i < fp + 5; ++i) {
      const bool false_alarm = i < fp;
      preds.push_back({"n" + std::to_string(i), false_alarm ? 0.7 : 0.3, false_alarm ? 1 : 0, 0});
    }
    const double expected = 2.0 * static_cast<double>(tp) / static_cast<double>(tp + fp + positives);
    if (std::abs(f1_score(preds) - expected) > 1e-15) ++f1_mismatch;
  }
  const double hand = f1_from_counts(3, 1, 5);
  const bool pass = auc_mismatch == 0 && f1_mismatch == 0 && std::abs(hand - 6.0 / 9.0) < 1e-15;
  return {pass, std::to_string(auc_mismatch) + " AUC mismatches / 1000, " + std::to_string(f1_mismatch) +
                    " F1 mismatches / 100, F1(TP=3,FP=1,P=5) = " + fmt(hand)};
}

Outcome logo_hygiene() {
  const Corpus corpus = make_synthetic_corpus(benchmark_spec(107));
  int bad = 0;
  int splits = 0;
  for (const auto& llm : std::vector<std::string>(corpus.authors().keys().begin() + 1, corpus.authors().keys().end())) {
    for (const auto& domain : corpus.domains().keys()) {
      const auto split = logo_split(corpus, llm, domain);
      ++splits;
      if (split.train.size() != 14000 || split.test.size() != 2000) ++bad;
      std::set<std::string> train_ids;
      for (const auto& d : split.train.documents()) {
        if (d.author == llm || d.domain == domain) ++bad;
        train_ids.insert(d.id);
      }
      for (const auto& d : split.test.documents()) {
        if (train_ids.contains(d.id) || d.domain != domain || (d.label == 1 && d.author != llm)) ++bad;
      }
    }
  }
  return {bad == 0 && splits == 25,
          std::to_string(splits) + " splits of " + std::to_string(corpus.size()) + " documents, " + std::to_string(bad) +
              " violations (train 14000 / test 2000 each)"};
}

Outcome synthetic_generalization() {
  const auto t0 = Clock::now();
  double worst_cell = 1.0;
  double full_sum = 0.0;
  double ablated_sum = 0.0;
  int full_wins = 0;
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    const Corpus corpus = make_synthetic_corpus(small_generalization_spec(static_cast<std::uint64_t>(s)));
    TrainConfig cfg;
    cfg.embedder.dim = 64;
    cfg.embedder.seed = static_cast<std::uint64_t>(s);
    cfg.learning_rate = 1e-2;
    cfg.epochs = 4;
    cfg.batch_size = 32;
    cfg.seed = static_cast<std::uint64_t>(s);
    const auto full = run_logo(corpus, cfg);
    const auto ablated = run_ablation(corpus, cfg, AblationVariant::no_dmc);
    if (full.evaluated() != 9) worst_cell = 0.0;
    for (const auto& cell : full.cells) worst_cell = std::min(worst_cell, cell.auc);
    full_sum += full.auc.mean;
    ablated_sum += ablated.auc.mean;
    full_wins += full.auc.mean >= ablated.auc.mean ? 1 : 0;
  }
  const double full_mean = full_sum / seeds;
  const double ablated_mean = ablated_sum / seeds;
  const double elapsed = seconds_since(t0);
  return {worst_cell >= 0.90 && full_mean >= ablated_mean && elapsed < 300.0,
          "min cell AUC " + fmt(worst_cell) + ", mean AUC full " + std::to_string(full_mean) + " vs no-DMC " +
              std::to_string(ablated_mean) + " over 5 seeds (full >= no-DMC on " + std::to_string(full_wins) +
              "/5 seeds), " + fmt(elapsed) + " s"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path dir = GLD_TEST_TMPDIR;
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto spec = small_generalization_spec(108);
  spec.human_per_domain = 20;
  spec.llm_per_cell = 8;
  const Corpus corpus = make_synthetic_corpus(spec);
  std::ofstream(dir / "corpus.jsonl") << to_jsonl(corpus);
  std::ofstream(dir / "config.json") << R"({"dim": 16, "q": 4, "epochs": 2, "batch_size": 32, "lr": 0.01})";

  const std::string gld = GLD_CLI_PATH;
  const auto sh = [&](const std::string& args) {
    return std::system((gld + " " + args + " > /dev/null 2>&1").c_str());
  };
  const std::string common = " --config " + (dir / "config.json").string() + " --seed 42";
  int failures = 0;
  for (const char* run : {"1", "2"}) {
    const std::string r = run;
    failures += sh("train --in " + (dir / "corpus.jsonl").string() + " --out " + (dir / ("m" + r + ".ckpt")).string() + common) != 0;
    failures += sh("detect --model " + (dir / ("m" + r + ".ckpt")).string() + " --in " + (dir / "corpus.jsonl").string() +
                   " --out " + (dir / ("scores" + r + ".jsonl")).string()) != 0;
    failures += sh("logo --in " + (dir / "corpus.jsonl").string() + " --out " + (dir / ("report" + r)).string() + common) != 0;
  }
  const bool ckpt = slurp(dir / "m1.ckpt") == slurp(dir / "m2.ckpt") && !slurp(dir / "m1.ckpt").empty();
  const bool scores = slurp(dir / "scores1.jsonl") == slurp(dir / "scores2.jsonl") && !slurp(dir / "scores1.jsonl").empty();
  const bool report = slurp(dir / "report1.json") == slurp(dir / "report2.json") &&
                      slurp(dir / "report1.csv") == slurp(dir / "report2.csv") && !slurp(dir / "report1.csv").empty();
  return {failures == 0 && ckpt && scores && report,
          std::string("two CLI processes each: checkpoint ") + (ckpt ? "identical" : "DIFFERS") + ", scores " +
              (scores ? "identical" : "DIFFER") + ", LOGO report " + (report ? "identical" : "DIFFERS") +
              (failures ? ", " + std::to_string(failures) + " commands failed" : "")};
}

Outcome h_divergence() {
  Rng rng(110);
  const auto a = random_matrix(rng, 3, 20);
  const double same = empirical_h_divergence(a, a);
  Eigen::MatrixXd left = random_matrix(rng, 3, 20, 0.5);
  Eigen::MatrixXd right = random_matrix(rng, 3, 20, 0.5);
  left.row(1).array() -= 4.0;
  right.row(1).array() += 4.0;
  const double separated = empirical_h_divergence(left, right);
  int mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto x = random_matrix(rng, 2, 4);
    const auto y = random_matrix(rng, 2, 4, 1.0, rng.normal());
    const auto family = stump_family(x, y);
    if (std::abs(empirical_h_divergence(x, y, family) - empirical_h_divergence(x, y)) > 1e-12) ++mismatches;
  }
  return {same == 0.0 && separated == 2.0 && mismatches == 0,
          "identical " + fmt(same) + ", separable " + fmt(separated) + ", " + std::to_string(mismatches) +
              " enumeration mismatches over 500 N=4 sets"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"MMD oracle equivalence", mmd_oracle},
      {"kernel/MMD axioms", kernel_axioms},
      {"attention simplex", attention_simplex},
      {"memory isolation and convexity", memory_isolation},
      {"gradient check", gradient_check},
      {"metric oracles", metric_oracles},
      {"LOGO hygiene", logo_hygiene},
      {"synthetic generalization", synthetic_generalization},
      {"determinism", determinism},
      {"H-divergence diagnostic", h_divergence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    failed += outcome.pass ? 0 : 1;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " ("
              << outcome.detail << ")" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
