#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gld/checkpoint.hpp"
#include "gld/config.hpp"
#include "gld/corpus.hpp"
#include "gld/error.hpp"
#include "gld/eval.hpp"
#include "gld/trainer.hpp"

namespace gld::cli {

namespace {

namespace fs = std::filesystem;

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<double> tau;
  std::optional<double> beta;
  std::optional<double> lambda_y;
  std::optional<double> lambda_h;
  std::optional<double> lambda_g;
  std::optional<int> q;
  std::optional<int> dim;
  std::optional<int> batch_size;
  std::optional<int> workers;
  std::optional<std::string> embedder;
  std::optional<std::string> embedder_command;
};

void add_training_flags(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config, "JSON config file (flags override its values)");
  cmd.add_option("--seed", o.seed, "Random seed");
  cmd.add_option("--epochs", o.epochs, "Training epochs");
  cmd.add_option("--lr", o.lr, "Adam learning rate");
  cmd.add_option("--tau", o.tau, "Attention temperature");
  cmd.add_option("--beta", o.beta, "Memory update strength in [0, 1]");
  cmd.add_option("--lambda-y", o.lambda_y, "Weight of the classification loss");
  cmd.add_option("--lambda-h", o.lambda_h, "Weight of the human discrepancy loss");
  cmd.add_option("--lambda-g", o.lambda_g, "Weight of the LLM discrepancy loss");
  cmd.add_option("--q", o.q, "Memory units per bank");
  cmd.add_option("--dim", o.dim, "Embedding width d");
  cmd.add_option("--batch-size", o.batch_size, "Documents per batch");
  cmd.add_option("--workers", o.workers, "Parallel LOGO cells");
  cmd.add_option("--embedder", o.embedder, "Embedder mode")->check(CLI::IsMember({"toy", "external"}));
  cmd.add_option("--embedder-command", o.embedder_command, "Shell command implementing the external encoder");
}

TrainConfig resolve_config(const Overrides& o) {
  TrainConfig c;
  if (o.config) c = load_train_config(*o.config, c);
  if (o.seed) c.seed = *o.seed;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.lr) c.learning_rate = *o.lr;
  if (o.tau) c.tau = *o.tau;
  if (o.beta) c.beta = *o.beta;
  if (o.lambda_y) c.weights.lambda_y = *o.lambda_y;
  if (o.lambda_h) c.weights.lambda_h = *o.lambda_h;
  if (o.lambda_g) c.weights.lambda_g = *o.lambda_g;
  if (o.q) c.q = *o.q;
  if (o.dim) c.embedder.dim = *o.dim;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.workers) c.workers = *o.workers;
  if (o.embedder) c.embedder.mode = embedder_mode_from_string(*o.embedder);
  if (o.embedder_command) c.embedder.external_command = *o.embedder_command;
  c.validate();
  return c;
}

void require_readable(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(what) + " '" + path + "' does not exist");
}

void require_writable_parent(const std::string& path) {
  const auto parent = fs::absolute(fs::path(path)).parent_path();
  if (!fs::is_directory(parent)) throw ConfigError("output directory '" + parent.string() + "' does not exist");
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("failed writing '" + path + "'");
}

std::vector<DetectInput> read_detect_inputs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<DetectInput> docs;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw DataError("line " + std::to_string(n) + ": malformed JSON");
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      throw DataError("line " + std::to_string(n) + ": record needs a string 'text'");
    }
    DetectInput d;
    d.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : std::to_string(n);
    d.text = j["text"].get<std::string>();
    if (j.contains("label") && j["label"].is_number_integer()) d.label = j["label"].get<int>();
    docs.push_back(std::move(d));
  }
  return docs;
}

std::string report_path(const std::string& prefix, const char* ext) {
  fs::path p(prefix);
  if (p.extension() == ".json" || p.extension() == ".csv") p.replace_extension();
  return p.string() + ext;
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"General LLM detector: twin memory networks with discrepancy-regularised training", "gld"};
  app.require_subcommand(1, 1);

  Overrides overrides;
  std::string in_path;
  std::string out_path;
  std::string model_path;
  std::optional<std::string> held_llm;
  std::optional<std::string> held_domain;
  std::string variant = "full";

  auto* ingest = app.add_subcommand("ingest", "Validate a JSONL corpus and print per-author/domain counts");
  ingest->add_option("--in", in_path, "Corpus JSONL")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a detector and write a checkpoint");
  train_cmd->add_option("--in", in_path, "Training corpus JSONL")->required();
  train_cmd->add_option("--out", out_path, "Checkpoint path")->required();
  train_cmd->add_option("--held-llm", held_llm, "Train on the LOGO split holding out this LLM");
  train_cmd->add_option("--held-domain", held_domain, "... and this domain");
  add_training_flags(*train_cmd, overrides);

  auto* detect_cmd = app.add_subcommand("detect", "Score documents with a trained checkpoint");
  detect_cmd->add_option("--model", model_path, "Checkpoint path")->required();
  detect_cmd->add_option("--in", in_path, "JSONL with {\"id\",\"text\"} records")->required();
  detect_cmd->add_option("--out", out_path, "Scores JSONL")->required();

  auto* logo_cmd = app.add_subcommand("logo", "Leave-one-group-out evaluation over every (LLM, domain) pair");
  logo_cmd->add_option("--in", in_path, "Corpus JSONL")->required();
  logo_cmd->add_option("--out", out_path, "Report path prefix (writes .json and .csv)")->required();
  add_training_flags(*logo_cmd, overrides);

  auto* ablate_cmd = app.add_subcommand("ablate", "LOGO evaluation of one ablation variant");
  ablate_cmd->add_option("--in", in_path, "Corpus JSONL")->required();
  ablate_cmd->add_option("--out", out_path, "Report path prefix (writes .json and .csv)")->required();
  ablate_cmd->add_option("--variant", variant, "full | no-TMN | no-authorMN | no-domainMN | no-DMC | no-humanDMC | no-llmDMC")
      ->required();
  add_training_flags(*ablate_cmd, overrides);

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (ingest->parsed()) {
      require_readable(in_path, "corpus");
      const auto corpus = load_corpus(in_path);
      out << count_table(corpus).render();
      return kOk;
    }

    if (train_cmd->parsed()) {
      require_readable(in_path, "corpus");
      require_writable_parent(out_path);
      if (held_llm.has_value() != held_domain.has_value()) {
        throw ConfigError("--held-llm and --held-domain must be given together");
      }
      const auto config = resolve_config(overrides);
      auto corpus = load_corpus(in_path);
      if (held_llm) corpus = logo_split(corpus, *held_llm, *held_domain).train;
      const auto model = train(corpus, config);
      save_checkpoint(model, out_path);
      if (!model.history.empty()) {
        const auto& last = model.history.back();
        out << "trained " << model.history.size() << " epochs; final epoch loss " << last.total << " (L_y "
            << last.loss_y << ", L_h " << last.loss_h << ", L_g " << last.loss_g << ")\n";
      }
      return kOk;
    }

    if (detect_cmd->parsed()) {
      require_readable(model_path, "checkpoint");
      require_readable(in_path, "input");
      require_writable_parent(out_path);
      if (fs::exists(out_path) && fs::equivalent(out_path, model_path)) {
        throw ConfigError("--out must not overwrite the checkpoint");
      }
      const auto model = load_checkpoint(model_path);
      const auto docs = read_detect_inputs(in_path);
      const auto result = detect(model, docs);
      std::map<std::string, const Prediction*> by_id;
      for (const auto& p : result.predictions) by_id[p.id] = &p;
      std::map<std::string, const DetectFailure*> failed;
      for (const auto& f : result.failures) failed[f.id] = &f;
      std::string lines;
      for (const auto& d : docs) {
        nlohmann::json j{{"id", d.id}};
        if (const auto it = by_id.find(d.id); it != by_id.end() && !failed.contains(d.id)) {
          j["score"] = it->second->score;
          j["label_pred"] = it->second->predicted;
        } else {
          j["score"] = nullptr;
          j["label_pred"] = nullptr;
          j["error"] = failed.contains(d.id) ? failed[d.id]->message : "not scored";
        }
        lines += j.dump() + "\n";
      }
      write_file(out_path, lines);
      for (const auto& f : result.failures) err << "warning: document '" << f.id << "': " << f.message << "\n";
      return result.failures.empty() ? kOk : kDataError;
    }

    if (logo_cmd->parsed() || ablate_cmd->parsed()) {
      require_readable(in_path, "corpus");
      require_writable_parent(report_path(out_path, ".json"));
      const auto v = ablation_variant_from_string(logo_cmd->parsed() ? "full" : variant);
      const auto config = resolve_config(overrides);
      const auto corpus = load_corpus(in_path);
      const auto report = run_ablation(corpus, config, v);
      write_file(report_path(out_path, ".json"), report.to_json());
      write_file(report_path(out_path, ".csv"), report.to_csv());
      out << report.variant << ": " << report.evaluated() << "/" << report.cells.size() << " cells, AUC "
          << report.auc.mean << " (" << report.auc.stddev << "), F1 " << report.f1.mean << " (" << report.f1.stddev
          << ")\n";
      return kOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  err << app.help();
  return kUsage;
}

}  // namespace gld::cli
