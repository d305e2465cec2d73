#pragma once

#include <stdexcept>
#include <string>

namespace qsc {

// Exit-code mapping at the CLI: ConfigError -> 1, SolverError -> 2,
// VerifyError -> 3.

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& m) : std::runtime_error(m) {}
};

struct VerifyError : std::runtime_error {
  explicit VerifyError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace qsc
