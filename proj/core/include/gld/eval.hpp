#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gld/corpus.hpp"
#include "gld/trainer.hpp"

namespace gld {

inline constexpr double kDecisionThreshold = 0.5;

struct Prediction {
  std::string id;
  double score = 0.5;
  int predicted = 0;                // score >= 0.5
  std::optional<int> label;         // ground truth when known
};

struct DetectFailure {
  std::string id;
  std::string message;
};

struct DetectResult {
  std::vector<Prediction> predictions;
  std::vector<DetectFailure> failures;
};

/// Unlabeled detection input.
struct DetectInput {
  std::string id;
  std::string text;
  std::optional<int> label;
};

/// Scores documents with a frozen model. Documents whose embedding fails are
/// reported in `failures`; the rest are scored.
DetectResult detect(const Model& model, std::span<const DetectInput> documents);
DetectResult detect(const Model& model, const Corpus& corpus);

/// Score for a precomputed textual embedding.
double score_embedding(const Model& model, const Eigen::VectorXd& z);

/// Rank-statistic AUC (ties count one half). Requires both classes.
double auc(std::span<const double> scores, std::span<const int> labels);

/// 2 TP / (TP + FP + P) at threshold 0.5. Requires at least one positive.
double f1_score(std::span<const Prediction> predictions);
double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t positives);

enum class AblationVariant { full, no_tmn, no_author_mn, no_domain_mn, no_dmc, no_human_dmc, no_llm_dmc };

std::string to_string(AblationVariant v);
AblationVariant ablation_variant_from_string(std::string_view s);
std::vector<AblationVariant> all_ablation_variants();

/// Config with the variant's components switched off.
TrainConfig apply_variant(TrainConfig config, AblationVariant variant);

struct LogoCell {
  std::string llm;
  std::string domain;
  bool skipped = false;
  std::string skip_reason;
  double auc = 0.0;
  double f1 = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1); 0 for a single cell
};

inline constexpr int kReportSchemaVersion = 1;

/// Per-(LLM, domain) results of a leave-one-group-out run.
struct LogoReport {
  std::string variant = "full";
  std::string config_json;
  std::vector<std::string> llms;     // rows
  std::vector<std::string> domains;  // columns
  std::vector<LogoCell> cells;       // row-major llms x domains
  MetricSummary auc;
  MetricSummary f1;
  std::vector<double> llm_mean_auc;     // per row, over evaluated cells
  std::vector<double> llm_mean_f1;
  std::vector<double> domain_mean_auc;  // per column
  std::vector<double> domain_mean_f1;

  const LogoCell& cell(std::size_t llm, std::size_t domain) const { return cells.at(llm * domains.size() + domain); }
  std::size_t evaluated() const;

  /// Recomputes every aggregate from the cells (skipped cells excluded).
  void aggregate();

  std::string to_json() const;
  /// llm,domain,status,auc,f1,train_size,test_size
  std::string to_csv() const;
};

/// Trains and evaluates one model per (LLM, domain) pair with that pair
/// held out. Cell k uses seed (config.seed XOR k); cells run on
/// config.workers threads and the report is independent of the thread count.
LogoReport run_logo(const Corpus& corpus, const TrainConfig& config);

/// run_logo with the variant applied to the config.
LogoReport run_ablation(const Corpus& corpus, const TrainConfig& config, AblationVariant variant);

}  // namespace gld
