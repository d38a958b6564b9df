#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gld/trainer.hpp"

namespace gld {

/// Config files are flat JSON objects. Recognised keys:
///   epochs, lr, batch_size, q, tau, beta, lambda_y, lambda_h, lambda_g,
///   min_group_size, r1, r2, seed, dim, embedder ("toy" | "external"),
///   embedder_seed, ngram_lo, ngram_hi, buckets, max_chars, external_command, trainable,
///   use_author_memory, use_domain_memory, precision ("f32" | "f64"), workers.
/// Unknown keys are rejected. Values override those in `base`.
TrainConfig parse_train_config(std::string_view json_text, TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});

/// Serializes every key listed above (pretty-printed JSON object).
std::string train_config_to_json(const TrainConfig& config);

}  // namespace gld
