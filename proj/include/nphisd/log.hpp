#pragma once

#include <atomic>
#include <cstdio>
#include <string>

namespace nphisd {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

inline std::atomic<int>& log_level_flag() {
  static std::atomic<int> level{static_cast<int>(LogLevel::Quiet)};
  return level;
}

inline void set_log_level(LogLevel l) { log_level_flag() = static_cast<int>(l); }

inline void log_info(const std::string& msg) {
  if (log_level_flag() >= static_cast<int>(LogLevel::Info))
    std::fprintf(stderr, "nphisd: %s\n", msg.c_str());
}

inline void log_debug(const std::string& msg) {
  if (log_level_flag() >= static_cast<int>(LogLevel::Debug))
    std::fprintf(stderr, "nphisd[debug]: %s\n", msg.c_str());
}

// Anomalies are always visible regardless of level.
inline void log_anomaly(const std::string& msg) {
  std::fprintf(stderr, "nphisd[anomaly]: %s\n", msg.c_str());
}

} // namespace nphisd
