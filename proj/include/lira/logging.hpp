#pragma once

#include <string_view>

namespace lira {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Verbosity comes from LIRA_LOG (error|warn|info|debug), default warn.
LogLevel log_level();
void log(LogLevel level, std::string_view message);

}  // namespace lira
