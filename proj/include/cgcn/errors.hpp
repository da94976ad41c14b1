#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace cgcn {

/// Base error carrying a stable machine-readable kind tag alongside the
/// human-readable message. The CLI maps kind() onto the error JSON it
/// prints on stderr.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error("dimension_error", msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config_error", msg) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& msg) : Error("format_error", msg) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error("validation_error", msg) {}
};

struct ContractError : Error {
  explicit ContractError(const std::string& msg) : Error("contract_error", msg) {}
};

struct DivergenceError : Error {
  explicit DivergenceError(const std::string& msg) : Error("divergence_error", msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io_error", msg) {}
};

}  // namespace cgcn
