#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace prax {

enum class LogLevel : int { Debug = 0, Info = 1, Warn = 2, Off = 3 };

inline std::atomic<int>& log_threshold() {
  static std::atomic<int> level{static_cast<int>(LogLevel::Warn)};
  return level;
}

inline void set_log_level(LogLevel level) { log_threshold().store(static_cast<int>(level)); }

/// One line to stderr when level passes the threshold.
inline void log(LogLevel level, std::string_view message) {
  if (static_cast<int>(level) < log_threshold().load()) return;
  static std::mutex mu;
  static constexpr std::string_view names[] = {"debug", "info", "warn"};
  std::lock_guard lock(mu);
  std::clog << "[prax " << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace prax
