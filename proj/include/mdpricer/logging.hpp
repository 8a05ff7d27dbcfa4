#pragma once

#include <cstdio>
#include <functional>
#include <string>
#include <utility>

namespace mdpricer::logging {

using WarningHandler = std::function<void(const std::string&)>;

inline WarningHandler& warning_handler() {
    static WarningHandler handler = [](const std::string& msg) {
        std::fprintf(stderr, "warning: %s\n", msg.c_str());
    };
    return handler;
}

inline void set_warning_handler(WarningHandler handler) {
    warning_handler() = std::move(handler);
}

inline void warn(const std::string& msg) {
    if (warning_handler()) warning_handler()(msg);
}

}  // namespace mdpricer::logging
