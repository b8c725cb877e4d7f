#include "msim/app.hpp"

#include <random>

namespace msim {

SimDuration AppConfig::base_iteration_time(int p) const {
    return from_seconds(total_work / static_cast<double>(p));
}

std::vector<std::string> AppConfig::violations() const {
    std::vector<std::string> out;
    if (!(total_work > 0.0)) {
        out.emplace_back("app.total_work must be > 0");
    }
    if (sync_every < 1) {
        out.emplace_back("app.sync_every must be >= 1");
    }
    if (reconfig_iteration < 1) {
        out.emplace_back("app.reconfig_iteration must be >= 1");
    }
    if (total_iterations <= reconfig_iteration) {
        out.emplace_back("app.total_iterations must exceed app.reconfig_iteration");
    }
    return out;
}

Task<SimDuration> run_iteration(Context ctx, AppConfig app, int p, int iteration, double slowdown,
                                SyncScope sync) {
    double factor = slowdown;
    if (const double j = ctx.cost().compute_jitter; j > 0.0) {
        factor *= std::uniform_real_distribution<double>(1.0 - j, 1.0 + j)(ctx.runtime().rng());
    }
    const auto duration = scale(app.base_iteration_time(p), factor);
    co_await ctx.compute(duration, "iter=" + std::to_string(iteration));

    if ((iteration + 1) % app.sync_every == 0) {
        if (sync.comm) {
            co_await ctx.barrier(*sync.comm, sync.tag_prefix + "-" + std::to_string(iteration));
        } else {
            if (sync.background && ctx.runtime().options().collective_blocks_background &&
                !ctx.finished(*sync.background)) {
                co_await ctx.join(*sync.background);
            }
            ctx.mark(EventKind::Sync, "local");
            co_await ctx.sleep(ctx.cost().barrier_latency);
        }
    }
    co_return duration;
}

Task<void> run_iterations(Context ctx, AppConfig app, int p, int first, int count, SyncScope sync) {
    for (int i = first; i < first + count; ++i) {
        co_await run_iteration(ctx, app, p, i, 1.0, sync);
    }
}

} // namespace msim
