#include "lira/logging.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

namespace lira {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("LIRA_LOG");
    const std::string v = env ? env : "";
    if (v == "error") return LogLevel::Error;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

void log(LogLevel level, std::string_view message) {
  if (level > log_level()) return;
  static constexpr const char* kTags[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << kTags[static_cast<int>(level)] << "] " << message << "\n";
}

}  // namespace lira
