#pragma once

#include <stdexcept>
#include <string>

namespace metapipe {

// Broken declarations: unknown ids, unresolvable references, malformed spec files.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Valid declarations used incorrectly at runtime (preconditions).
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : ConfigError {
  ParseError(const std::string& msg, std::size_t position)
      : ConfigError(msg + " (at offset " + std::to_string(position) + ")"),
        offset(position) {}
  std::size_t offset;
};

}  // namespace metapipe
