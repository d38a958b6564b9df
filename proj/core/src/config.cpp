#include "gld/config.hpp"

#include <fstream>
#include <iterator>

#include <json.hpp>

#include "gld/error.hpp"

namespace gld {

namespace {

using nlohmann::json;

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

Precision precision_from_string(const std::string& s) {
  if (s == "f32") return Precision::f32;
  if (s == "f64") return Precision::f64;
  throw ConfigError("precision must be 'f32' or 'f64'");
}

}  // namespace

TrainConfig parse_train_config(std::string_view json_text, TrainConfig base) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  TrainConfig c = std::move(base);
  for (const auto& [key, v] : j.items()) {
    if (key == "epochs") c.epochs = get_as<int>(v, key);
    else if (key == "lr") c.learning_rate = get_as<double>(v, key);
    else if (key == "batch_size") c.batch_size = get_as<int>(v, key);
    else if (key == "q") c.q = get_as<int>(v, key);
    else if (key == "tau") c.tau = get_as<double>(v, key);
    else if (key == "beta") c.beta = get_as<double>(v, key);
    else if (key == "lambda_y") c.weights.lambda_y = get_as<double>(v, key);
    else if (key == "lambda_h") c.weights.lambda_h = get_as<double>(v, key);
    else if (key == "lambda_g") c.weights.lambda_g = get_as<double>(v, key);
    else if (key == "min_group_size") c.weights.min_group_size = get_as<int>(v, key);
    else if (key == "r1") c.kernel.r1 = get_as<int>(v, key);
    else if (key == "r2") c.kernel.r2 = get_as<int>(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else if (key == "dim") c.embedder.dim = get_as<int>(v, key);
    else if (key == "embedder") c.embedder.mode = embedder_mode_from_string(get_as<std::string>(v, key));
    else if (key == "embedder_seed") c.embedder.seed = get_as<std::uint64_t>(v, key);
    else if (key == "ngram_lo") c.embedder.ngram_lo = get_as<int>(v, key);
    else if (key == "ngram_hi") c.embedder.ngram_hi = get_as<int>(v, key);
    else if (key == "buckets") c.embedder.buckets = get_as<int>(v, key);
    else if (key == "max_chars") c.embedder.max_chars = get_as<std::size_t>(v, key);
    else if (key == "external_command") c.embedder.external_command = get_as<std::string>(v, key);
    else if (key == "trainable") c.embedder.trainable = get_as<bool>(v, key);
    else if (key == "use_author_memory") c.use_author_memory = get_as<bool>(v, key);
    else if (key == "use_domain_memory") c.use_domain_memory = get_as<bool>(v, key);
    else if (key == "precision") c.precision = precision_from_string(get_as<std::string>(v, key));
    else if (key == "workers") c.workers = get_as<int>(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_train_config(text, std::move(base));
}

std::string train_config_to_json(const TrainConfig& c) {
  const json j = {
      {"epochs", c.epochs},
      {"lr", c.learning_rate},
      {"batch_size", c.batch_size},
      {"q", c.q},
      {"tau", c.tau},
      {"beta", c.beta},
      {"lambda_y", c.weights.lambda_y},
      {"lambda_h", c.weights.lambda_h},
      {"lambda_g", c.weights.lambda_g},
      {"min_group_size", c.weights.min_group_size},
      {"r1", c.kernel.r1},
      {"r2", c.kernel.r2},
      {"seed", c.seed},
      {"dim", c.embedder.dim},
      {"embedder", to_string(c.embedder.mode)},
      {"embedder_seed", c.embedder.seed},
      {"ngram_lo", c.embedder.ngram_lo},
      {"ngram_hi", c.embedder.ngram_hi},
      {"buckets", c.embedder.buckets},
      {"max_chars", c.embedder.max_chars},
      {"external_command", c.embedder.external_command},
      {"trainable", c.embedder.trainable},
      {"use_author_memory", c.use_author_memory},
      {"use_domain_memory", c.use_domain_memory},
      {"precision", c.precision == Precision::f32 ? "f32" : "f64"},
      {"workers", c.workers},
  };
  return j.dump(2);
}

}  // namespace gld
