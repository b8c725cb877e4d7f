#include "msim/cost_model.hpp"

#include <cmath>

namespace msim {

SimDuration CostModel::volume_time(std::int64_t count) const {
    if (count <= 0) {
        return SimDuration::zero();
    }
    return SimDuration{static_cast<SimDuration::rep>(
        std::llround(static_cast<double>(count) * 1e9 / bandwidth))};
}

SimDuration CostModel::message_time(std::int64_t count) const {
    return per_message_latency + volume_time(count);
}

std::vector<std::string> CostModel::violations() const {
    std::vector<std::string> out;
    auto non_negative = [&](SimDuration d, const char* name) {
        if (d < SimDuration::zero()) {
            out.push_back(std::string("cost.") + name + " must be >= 0");
        }
    };
    non_negative(window_create_latency, "window_create_latency");
    non_negative(window_free_latency, "window_free_latency");
    non_negative(lock_latency, "lock_latency");
    non_negative(per_message_latency, "per_message_latency");
    non_negative(barrier_latency, "barrier_latency");
    non_negative(spawn_latency, "spawn_latency");
    non_negative(test_cost, "test_cost");
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        out.emplace_back("cost.bandwidth must be a finite value > 0");
    }
    if (!(oversubscription_factor >= 1.0)) {
        out.emplace_back("cost.oversubscription_factor must be >= 1");
    }
    if (!(compute_jitter >= 0.0 && compute_jitter < 1.0)) {
        out.emplace_back("cost.compute_jitter must be in [0, 1)");
    }
    return out;
}

} // namespace msim
