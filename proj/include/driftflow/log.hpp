#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace driftflow {

enum class LogLevel { info, warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

namespace detail {

inline std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

inline LogSink& log_sink() {
    static LogSink sink = [](LogLevel level, const std::string& msg) {
        std::cerr << (level == LogLevel::warning ? "[warn] " : "[info] ") << msg << '\n';
    };
    return sink;
}

}  // namespace detail

/// Replaces the process-wide log sink and returns the previous one.
inline LogSink set_log_sink(LogSink sink) {
    std::lock_guard lock(detail::log_mutex());
    return std::exchange(detail::log_sink(), std::move(sink));
}

inline void log(LogLevel level, const std::string& msg) {
    std::lock_guard lock(detail::log_mutex());
    if (detail::log_sink()) detail::log_sink()(level, msg);
}

inline void log_warning(const std::string& msg) { log(LogLevel::warning, msg); }
inline void log_info(const std::string& msg) { log(LogLevel::info, msg); }

}  // namespace driftflow
