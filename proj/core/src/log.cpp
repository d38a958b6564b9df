#include "gld/log.hpp"

#include <cstdlib>
#include <mutex>
#include <optional>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace gld {

namespace {

std::optional<spdlog::level::level_enum> parse_level(std::string_view v) {
  if (v == "error") return spdlog::level::err;
  if (v == "warn") return spdlog::level::warn;
  if (v == "info") return spdlog::level::info;
  if (v == "debug") return spdlog::level::debug;
  return std::nullopt;
}

}  // namespace

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::stderr_color_mt("gld");
    instance->set_pattern("[%l] %v");
    instance->set_level(spdlog::level::warn);
    if (const char* raw = std::getenv("GLD_LOG_LEVEL")) {
      if (const auto level = parse_level(raw)) {
        instance->set_level(*level);
      } else {
        instance->warn("ignoring GLD_LOG_LEVEL='{}' (expected error, warn, info or debug)", raw);
      }
    }
  });
  return instance;
}

}  // namespace gld
