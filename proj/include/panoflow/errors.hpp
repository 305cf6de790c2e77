#pragma once

#include <stdexcept>
#include <string>

namespace panoflow {

/// Bad flags, bad spec parameters, malformed config files. CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Missing/corrupt input data: bad magic, truncated payloads, spec mismatch.
/// CLI exit code 3.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace panoflow
