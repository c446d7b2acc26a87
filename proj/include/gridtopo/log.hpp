#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace gridtopo {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Level comes from GRIDTOPO_LOG (error|warn|info|debug), default warn.
inline LogLevel log_level() {
  static LogLevel lvl = [] {
    const char* e = std::getenv("GRIDTOPO_LOG");
    if (!e) return LogLevel::Warn;
    if (std::strcmp(e, "error") == 0) return LogLevel::Error;
    if (std::strcmp(e, "warn") == 0) return LogLevel::Warn;
    if (std::strcmp(e, "info") == 0) return LogLevel::Info;
    if (std::strcmp(e, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return lvl;
}

inline void log_at(LogLevel lvl, const char* tag, const char* fmt, va_list ap) {
  if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
  std::fprintf(stderr, "[%s] ", tag);
  std::vfprintf(stderr, fmt, ap);
  std::fputc('\n', stderr);
}

#define GRIDTOPO_LOG_FN(name, lvl, tag)                  \
  inline void name(const char* fmt, ...) {               \
    va_list ap;                                          \
    va_start(ap, fmt);                                   \
    log_at(lvl, tag, fmt, ap);                           \
    va_end(ap);                                          \
  }

GRIDTOPO_LOG_FN(log_error, LogLevel::Error, "error")
GRIDTOPO_LOG_FN(log_warn, LogLevel::Warn, "warn")
GRIDTOPO_LOG_FN(log_info, LogLevel::Info, "info")
GRIDTOPO_LOG_FN(log_debug, LogLevel::Debug, "debug")

#undef GRIDTOPO_LOG_FN

}  // namespace gridtopo
