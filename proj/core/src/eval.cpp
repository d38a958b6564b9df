#include "gld/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "gld/config.hpp"
#include "gld/error.hpp"
#include "gld/log.hpp"

namespace gld {

namespace {

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

double mean_or_nan(const std::vector<double>& values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

double score_embedding(const Model& model, const Eigen::VectorXd& z) {
  ad::Tape tape(false);
  const auto x = tmn_forward_infer(tape, tape.constant(ad::Matrix(z)), model.tmn);
  return sigmoid(classifier_logits(tape, x, model.classifier).scalar());
}

DetectResult detect(const Model& model, std::span<const DetectInput> documents) {
  if (!model.tmn.frozen) throw Error("detect requires a frozen (trained) model");
  const Embedder embedder(model.config.embedder);
  DetectResult out;
  for (const auto& doc : documents) {
    Eigen::VectorXd z;
    try {
      z = embedder.embed(doc.text);
    } catch (const Error& e) {
      out.failures.push_back({doc.id, e.what()});
      continue;
    }
    Prediction p;
    p.id = doc.id;
    p.score = score_embedding(model, z);
    p.predicted = p.score >= kDecisionThreshold ? 1 : 0;
    p.label = doc.label;
    out.predictions.push_back(std::move(p));
  }
  return out;
}

DetectResult detect(const Model& model, const Corpus& corpus) {
  std::vector<DetectInput> inputs;
  inputs.reserve(corpus.size());
  for (const auto& d : corpus.documents()) inputs.push_back({d.id, d.text, d.label});
  return detect(model, inputs);
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("scores and labels have different lengths");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  // Mid-ranks (1-based) over tied runs.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += mid_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw Error("AUC requires both positive and negative labels");
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t positives) {
  if (positives == 0) throw Error("F1 requires at least one positive instance");
  return 2.0 * static_cast<double>(tp) / static_cast<double>(tp + fp + positives);
}

double f1_score(std::span<const Prediction> predictions) {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t positives = 0;
  for (const auto& p : predictions) {
    if (!p.label) throw Error("F1 requires ground-truth labels for prediction '" + p.id + "'");
    const bool pred = p.score >= kDecisionThreshold;
    positives += *p.label == 1 ? 1 : 0;
    if (pred && *p.label == 1) ++tp;
    if (pred && *p.label == 0) ++fp;
  }
  return f1_from_counts(tp, fp, positives);
}

std::string to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::full: return "full";
    case AblationVariant::no_tmn: return "no-TMN";
    case AblationVariant::no_author_mn: return "no-authorMN";
    case AblationVariant::no_domain_mn: return "no-domainMN";
    case AblationVariant::no_dmc: return "no-DMC";
    case AblationVariant::no_human_dmc: return "no-humanDMC";
    case AblationVariant::no_llm_dmc: return "no-llmDMC";
  }
  return "unknown";
}

std::vector<AblationVariant> all_ablation_variants() {
  return {AblationVariant::full,   AblationVariant::no_tmn,       AblationVariant::no_author_mn,
          AblationVariant::no_domain_mn, AblationVariant::no_dmc, AblationVariant::no_human_dmc,
          AblationVariant::no_llm_dmc};
}

AblationVariant ablation_variant_from_string(std::string_view s) {
  for (const auto v : all_ablation_variants()) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown ablation variant '" + std::string(s) + "'");
}

TrainConfig apply_variant(TrainConfig config, AblationVariant variant) {
  switch (variant) {
    case AblationVariant::full: break;
    case AblationVariant::no_tmn:
      config.use_author_memory = false;
      config.use_domain_memory = false;
      break;
    case AblationVariant::no_author_mn: config.use_author_memory = false; break;
    case AblationVariant::no_domain_mn: config.use_domain_memory = false; break;
    case AblationVariant::no_dmc:
      config.weights.lambda_h = 0.0;
      config.weights.lambda_g = 0.0;
      break;
    case AblationVariant::no_human_dmc: config.weights.lambda_h = 0.0; break;
    case AblationVariant::no_llm_dmc: config.weights.lambda_g = 0.0; break;
  }
  return config;
}

std::size_t LogoReport::evaluated() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.skipped; }));
}

void LogoReport::aggregate() {
  std::vector<double> aucs;
  std::vector<double> f1s;
  std::vector<std::vector<double>> row_auc(llms.size()), row_f1(llms.size());
  std::vector<std::vector<double>> col_auc(domains.size()), col_f1(domains.size());
  for (std::size_t r = 0; r < llms.size(); ++r) {
    for (std::size_t c = 0; c < domains.size(); ++c) {
      const auto& cell = this->cell(r, c);
      if (cell.skipped) continue;
      aucs.push_back(cell.auc);
      f1s.push_back(cell.f1);
      row_auc[r].push_back(cell.auc);
      row_f1[r].push_back(cell.f1);
      col_auc[c].push_back(cell.auc);
      col_f1[c].push_back(cell.f1);
    }
  }
  auc = summarize(aucs);
  f1 = summarize(f1s);
  llm_mean_auc.clear();
  llm_mean_f1.clear();
  domain_mean_auc.clear();
  domain_mean_f1.clear();
  for (std::size_t r = 0; r < llms.size(); ++r) {
    llm_mean_auc.push_back(mean_or_nan(row_auc[r]));
    llm_mean_f1.push_back(mean_or_nan(row_f1[r]));
  }
  for (std::size_t c = 0; c < domains.size(); ++c) {
    domain_mean_auc.push_back(mean_or_nan(col_auc[c]));
    domain_mean_f1.push_back(mean_or_nan(col_f1[c]));
  }
}

std::string LogoReport::to_json() const {
  using nlohmann::json;
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["variant"] = variant;
  j["config"] = config_json.empty() ? json::object() : json::parse(config_json);
  j["llms"] = llms;
  j["domains"] = domains;
  json cell_list = json::array();
  for (const auto& c : cells) {
    json e = {{"llm", c.llm}, {"domain", c.domain}, {"skipped", c.skipped}};
    if (c.skipped) {
      e["reason"] = c.skip_reason;
    } else {
      e["auc"] = c.auc;
      e["f1"] = c.f1;
      e["train_size"] = c.train_size;
      e["test_size"] = c.test_size;
    }
    cell_list.push_back(e);
  }
  j["cells"] = cell_list;
  j["evaluated"] = evaluated();
  j["skipped"] = cells.size() - evaluated();
  j["auc"] = {{"mean", auc.mean}, {"std", auc.stddev}};
  j["f1"] = {{"mean", f1.mean}, {"std", f1.stddev}};
  auto vec = [](const std::vector<double>& v) {
    json a = json::array();
    for (const double x : v) a.push_back(number_or_null(x));
    return a;
  };
  j["per_llm"] = {{"auc", vec(llm_mean_auc)}, {"f1", vec(llm_mean_f1)}};
  j["per_domain"] = {{"auc", vec(domain_mean_auc)}, {"f1", vec(domain_mean_f1)}};
  return j.dump(2) + "\n";
}

std::string LogoReport::to_csv() const {
  std::ostringstream out;
  out << "llm,domain,status,auc,f1,train_size,test_size\n";
  out << std::setprecision(17);
  for (const auto& c : cells) {
    out << c.llm << ',' << c.domain << ',';
    if (c.skipped) {
      out << "skipped,,,,\n";
    } else {
      out << "ok," << c.auc << ',' << c.f1 << ',' << c.train_size << ',' << c.test_size << '\n';
    }
  }
  return out.str();
}

LogoReport run_logo(const Corpus& corpus, const TrainConfig& config) {
  config.validate();
  if (corpus.llm_count() < 2 || corpus.domain_count() < 2) {
    throw DataError("leave-one-group-out evaluation needs at least two LLMs and two domains");
  }
  LogoReport report;
  report.config_json = train_config_to_json(config);
  report.llms.assign(corpus.authors().keys().begin() + 1, corpus.authors().keys().end());
  report.domains = corpus.domains().keys();
  const std::size_t n_cells = report.llms.size() * report.domains.size();
  report.cells.resize(n_cells);

  const auto embeddings = embed_corpus(corpus, config.embedder);
  std::map<std::string, std::size_t, std::less<>> position;
  for (std::size_t i = 0; i < corpus.size(); ++i) position.emplace(corpus.document(i).id, i);

  auto run_cell = [&](std::size_t k) {
    auto& cell = report.cells[k];
    cell.llm = report.llms[k / report.domains.size()];
    cell.domain = report.domains[k % report.domains.size()];
    std::optional<LogoSplit> split;
    try {
      split.emplace(logo_split(corpus, cell.llm, cell.domain));
    } catch (const DataError& e) {
      cell.skipped = true;
      cell.skip_reason = e.what();
      logger()->warn("skipping cell ({}, {}): {}", cell.llm, cell.domain, e.what());
      return;
    }
    for (const auto& d : split->train.documents()) {
      if (d.author == cell.llm || d.domain == cell.domain) {
        throw Error("held-out group leaked into the training split of (" + cell.llm + ", " + cell.domain + ")");
      }
    }
    auto cell_config = config;
    cell_config.seed = config.seed ^ static_cast<std::uint64_t>(k);
    std::vector<Eigen::VectorXd> train_z;
    train_z.reserve(split->train.size());
    for (const auto& d : split->train.documents()) train_z.push_back(embeddings[position.at(d.id)]);
    const Model model = train(split->train, train_z, cell_config);

    std::vector<double> scores;
    std::vector<int> labels;
    std::vector<Prediction> preds;
    for (const auto& d : split->test.documents()) {
      const double s = score_embedding(model, embeddings[position.at(d.id)]);
      scores.push_back(s);
      labels.push_back(d.label);
      preds.push_back({d.id, s, s >= kDecisionThreshold ? 1 : 0, d.label});
    }
    cell.auc = auc(scores, labels);
    cell.f1 = f1_score(preds);
    cell.train_size = split->train.size();
    cell.test_size = split->test.size();
    logger()->info("cell ({}, {}): AUC {:.4f} F1 {:.4f}", cell.llm, cell.domain, cell.auc, cell.f1);
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.workers), n_cells);
  if (workers <= 1) {
    for (std::size_t k = 0; k < n_cells; ++k) run_cell(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = next++; k < n_cells; k = next++) run_cell(k);
        } catch (...) {
          errors[w] = std::current_exception();
          next = n_cells;
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  report.aggregate();
  return report;
}

LogoReport run_ablation(const Corpus& corpus, const TrainConfig& config, AblationVariant variant) {
  auto report = run_logo(corpus, apply_variant(config, variant));
  report.variant = to_string(variant);
  return report;
}

}  // namespace gld
