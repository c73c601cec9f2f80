#pragma once

#include <iostream>
#include <sstream>

namespace poro {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3 };

/// Process-wide log level, initialized from the PORO_LOG environment
/// variable (debug|info|warn|error); defaults to warn.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_line(LogLevel level, const std::string& msg);

}  // namespace poro

#define PORO_LOG_AT(level, tag, expr)                        \
  do {                                                       \
    if (static_cast<int>(level) >= static_cast<int>(::poro::log_level())) { \
      std::ostringstream poro_log_os;                        \
      poro_log_os << expr;                                   \
      ::poro::log_line(level, poro_log_os.str());            \
    }                                                        \
  } while (0)

#define PORO_LOG_DEBUG(expr) PORO_LOG_AT(::poro::LogLevel::debug, "debug", expr)
#define PORO_LOG_INFO(expr) PORO_LOG_AT(::poro::LogLevel::info, "info", expr)
#define PORO_LOG_WARN(expr) PORO_LOG_AT(::poro::LogLevel::warn, "warn", expr)
