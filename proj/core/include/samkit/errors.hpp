#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace samkit {

/// A loss or gradient turned non-finite mid-run.
struct NumericalAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Carries every problem found while validating a config, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string s = "invalid config:";
    for (const std::string& issue : issues) {
      s += "\n  - " + issue;
    }
    return s;
  }

  std::vector<std::string> issues_;
};

}  // namespace samkit
