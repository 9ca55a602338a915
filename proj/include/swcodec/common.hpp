// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace swc {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration or malformed input file (CLI exit code 2).
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Failure while processing otherwise valid inputs (CLI exit code 1).
class RuntimeError : public Error {
public:
  explicit RuntimeError(const std::string& msg) : Error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

inline void require_runtime(bool cond, const std::string& msg) {
  if (!cond) throw RuntimeError(msg);
}

} // namespace swc
