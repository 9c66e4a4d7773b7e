#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace millerpole {

/// Failure raised by a library operation. The message is prefixed with the
/// module that raised it ("polyalg: no roots defined").
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Malformed or incomplete user configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

/// Non-fatal diagnostic attached to a result (validity-domain violations,
/// weak midband values, missing crossovers).
struct Warning {
  std::string code;
  std::string message;

  friend bool operator==(const Warning&, const Warning&) = default;
};

using Warnings = std::vector<Warning>;

inline bool has_warning(const Warnings& ws, const std::string& code) {
  for (const auto& w : ws) {
    if (w.code == code) return true;
  }
  return false;
}

}  // namespace millerpole
