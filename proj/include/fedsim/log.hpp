#pragma once

#include <iostream>
#include <string>

namespace fedsim {

/// Minimal stderr logger for non-fatal conditions the contracts require to
/// be "logged" rather than raised (empty shards, zero-flip attacks, ...).
inline bool& log_enabled() {
    static bool enabled = true;
    return enabled;
}

inline void log_warn(const std::string& msg) {
    if (log_enabled()) std::cerr << "[fedsim] " << msg << "\n";
}

struct ScopedLogSilence {
    bool prev;
    ScopedLogSilence() : prev(log_enabled()) { log_enabled() = false; }
    ~ScopedLogSilence() { log_enabled() = prev; }
};

}  // namespace fedsim
