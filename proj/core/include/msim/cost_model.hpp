#pragma once

#include "msim/time.hpp"

#include <string>
#include <vector>

namespace msim {

/// Virtual-time price of every primitive. Durations are virtual nanoseconds;
/// the defaults put window creation well above message costs, which is the
/// regime where one-sided redistribution is dominated by its setup.
struct CostModel {
    SimDuration window_create_latency = from_seconds(0.2);
    SimDuration window_free_latency = from_seconds(0.002);
    SimDuration lock_latency = from_seconds(5e-6);
    SimDuration per_message_latency = from_seconds(2e-6);
    double bandwidth = 1.25e9; ///< elements per second
    SimDuration barrier_latency = from_seconds(1e-5);
    SimDuration spawn_latency = from_seconds(0.5);
    SimDuration test_cost = SimDuration::zero();
    /// Compute slowdown of a main stream while an auxiliary stream shares its core.
    double oversubscription_factor = 20.0;
    /// Relative half-width of uniform noise applied to compute intervals (0 = none).
    double compute_jitter = 0.0;

    /// per_message_latency + count / bandwidth, rounded to the nearest tick.
    SimDuration message_time(std::int64_t count) const;
    SimDuration volume_time(std::int64_t count) const;

    /// Empty iff every field is within its domain.
    std::vector<std::string> violations() const;
};

} // namespace msim
