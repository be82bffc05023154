#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nvcharge {

/// Invalid user input or configuration. Carries every violated field so a
/// caller can report them all at once.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message, std::vector<std::string> fields = {})
      : std::runtime_error(message), fields_(std::move(fields)) {}

  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  std::vector<std::string> fields_;
};

/// A numerical operation could not produce a trustworthy result
/// (degenerate steady state, non-finite propagation, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Collects validation failures and throws one ConfigError listing all of them.
class FieldChecker {
 public:
  explicit FieldChecker(std::string context) : context_(std::move(context)) {}

  void require(bool ok, const std::string& field, const std::string& why) {
    if (!ok) violations_.push_back(field + ": " + why);
  }

  bool ok() const noexcept { return violations_.empty(); }

  void throw_if_failed() const;

 private:
  std::string context_;
  std::vector<std::string> violations_;
};

}  // namespace nvcharge
