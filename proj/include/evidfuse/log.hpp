#pragma once

#include <string>

namespace evidfuse {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Level comes from EVIDFUSE_LOG (error|warn|info|debug), default warn.
LogLevel log_level();

void log_message(LogLevel level, const std::string& message);

inline void log_warn(const std::string& message) { log_message(LogLevel::kWarn, message); }
inline void log_info(const std::string& message) { log_message(LogLevel::kInfo, message); }

} // namespace evidfuse
