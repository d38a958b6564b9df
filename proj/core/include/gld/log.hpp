#pragma once

#include <memory>

namespace spdlog {
class logger;
}

namespace gld {

/// Shared library logger. Level comes from GLD_LOG_LEVEL
/// (error, warn, info, debug); defaults to warn.
std::shared_ptr<spdlog::logger> logger();

}  // namespace gld
