#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>

namespace msim {

/// Virtual clock of the simulator. Time is integral nanoseconds so that
/// derived quantities (slowdowns, sums of latencies) are exact.
struct VirtualClock {
    using rep = std::int64_t;
    using period = std::nano;
    using duration = std::chrono::duration<rep, period>;
    using time_point = std::chrono::time_point<VirtualClock>;
    static constexpr bool is_steady = true;
};

using SimDuration = VirtualClock::duration;
using SimTime = VirtualClock::time_point;

inline constexpr SimTime kTimeZero{};

/// Seconds (as used in configuration files) to virtual nanoseconds, rounded
/// to the nearest tick.
inline SimDuration from_seconds(double seconds) {
    return SimDuration{static_cast<SimDuration::rep>(std::llround(seconds * 1e9))};
}

inline double to_seconds(SimDuration d) {
    return std::chrono::duration<double>(d).count();
}

inline double to_seconds(SimTime t) {
    return to_seconds(t.time_since_epoch());
}

/// Scale a duration by a dimensionless factor, rounding to the nearest tick.
inline SimDuration scale(SimDuration d, double factor) {
    return SimDuration{static_cast<SimDuration::rep>(
        std::llround(static_cast<double>(d.count()) * factor))};
}

} // namespace msim
