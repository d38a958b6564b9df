#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gld/trainer.hpp"

namespace gld {

inline constexpr int kCheckpointMajor = 1;
inline constexpr int kCheckpointMinor = 0;

/// Archive layout (little-endian):
///   "GLDCKPT\0" | u32 entry count | entries...
///   entry: u32 name length | name | u64 payload length | u32 CRC32(payload) | payload
/// The first entry is manifest.json; every tensor follows as "<name>.f32"
/// (row-major float32) or "<name>.f64" for float64 models.
std::string serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

/// Hex CRC32 over the serialized checkpoint; cheap fingerprint for determinism checks.
std::string checkpoint_fingerprint(const Model& model);

}  // namespace gld
