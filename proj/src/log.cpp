#include "evidfuse/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace evidfuse {

LogLevel log_level() {
    const char* env = std::getenv("EVIDFUSE_LOG");
    if (env == nullptr) return LogLevel::kWarn;
    if (std::strcmp(env, "error") == 0) return LogLevel::kError;
    if (std::strcmp(env, "warn") == 0) return LogLevel::kWarn;
    if (std::strcmp(env, "info") == 0) return LogLevel::kInfo;
    if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
    return LogLevel::kWarn;
}

void log_message(LogLevel level, const std::string& message) {
    if (static_cast<int>(level) > static_cast<int>(log_level())) return;
    const char* tag = "info";
    switch (level) {
        case LogLevel::kError: tag = "error"; break;
        case LogLevel::kWarn: tag = "warn"; break;
        case LogLevel::kInfo: tag = "info"; break;
        case LogLevel::kDebug: tag = "debug"; break;
    }
    std::fprintf(stderr, "[evidfuse %s] %s\n", tag, message.c_str());
}

} // namespace evidfuse
