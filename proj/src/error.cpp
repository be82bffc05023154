#include "nvcharge/error.hpp"

namespace nvcharge {

void FieldChecker::throw_if_failed() const {
  if (violations_.empty()) return;
  std::string msg = context_ + ": invalid configuration";
  for (const auto& v : violations_) msg += "\n  " + v;
  throw ConfigError(msg, violations_);
}

}  // namespace nvcharge
