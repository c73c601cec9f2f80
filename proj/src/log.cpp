#include "poro/log.hpp"

#include <cstdlib>
#include <mutex>
#include <string>

namespace poro {

namespace {

LogLevel parse_env_level() {
  const char* env = std::getenv("PORO_LOG");
  if (!env) return LogLevel::warn;
  const std::string v(env);
  if (v == "debug") return LogLevel::debug;
  if (v == "info") return LogLevel::info;
  if (v == "warn") return LogLevel::warn;
  if (v == "error") return LogLevel::error;
  return LogLevel::warn;
}

LogLevel& level_ref() {
  static LogLevel level = parse_env_level();
  return level;
}

const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    default: return "error";
  }
}

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

LogLevel log_level() { return level_ref(); }

void set_log_level(LogLevel level) { level_ref() = level; }

void log_line(LogLevel level, const std::string& msg) {
  std::lock_guard<std::mutex> lock(log_mutex());
  std::cerr << "[porofem:" << level_name(level) << "] " << msg << "\n";
}

}  // namespace poro
