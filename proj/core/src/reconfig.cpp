#include "msim/errors.hpp"
#include "msim/redist.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace msim {
namespace {

struct Driver {
    const ReconfigSpec* spec;
    RedistShared* shared;
    Communicator sources;
    Communicator drains;
    std::vector<RedistState>* states;
};

Communicator first_ranks(Runtime& rt, int n) {
    std::vector<int> ranks(static_cast<std::size_t>(n));
    std::iota(ranks.begin(), ranks.end(), 0);
    return rt.communicator(std::move(ranks));
}

Task<void> background_iteration(Context ctx, AppConfig app, int p, int iteration,
                                IterationMode mode) {
    const SyncScope sync{std::nullopt, "bg", mode.background};
    co_await run_iteration(ctx, app, p, iteration, mode.slowdown, sync);
}

Task<void> rank_program(Context ctx, Driver* d) {
    const auto& spec = *d->spec;
    const auto& plan = d->shared->plan;
    const int rank = ctx.rank();

    if (plan.is_source(rank)) {
        const SyncScope sync{d->sources, "pre", std::nullopt};
        co_await run_iterations(ctx, spec.app, spec.ns, 0, spec.app.reconfig_iteration, sync);
        co_await ctx.barrier(d->sources, "reconfig");
        if (spec.nd > spec.ns) {
            ctx.mark(EventKind::Spawn, "merge");
            const auto at = ctx.now() + spec.cost.spawn_latency;
            if (rank == 0) {
                for (int r = spec.ns; r < spec.nd; ++r) {
                    ctx.runtime().spawn(
                        r, StreamKind::Main, [d](Context c) { return rank_program(c, d); }, at);
                }
            }
            co_await ctx.sleep(spec.cost.spawn_latency);
        }
    }

    ctx.mark(EventKind::RedistBegin);
    int iteration = spec.app.reconfig_iteration;
    ComputeStep step = [app = spec.app, p = spec.ns, counter = &iteration](Context c,
                                                                           IterationMode m) {
        return background_iteration(c, app, p, (*counter)++, m);
    };
    co_await redistribute_rank(ctx, d->shared, spec.method, spec.strategy, std::move(step),
                               spec.cost.oversubscription_factor,
                               &(*d->states)[static_cast<std::size_t>(rank)]);
    ctx.mark(EventKind::Done);

    if (plan.is_drain(rank)) {
        co_await ctx.barrier(d->drains, "resume");
        const SyncScope sync{d->drains, "post", std::nullopt};
        co_await run_iterations(ctx, spec.app, spec.nd, spec.app.reconfig_iteration,
                                spec.app.iterations_after(), sync);
    }
}

SimDuration mean(const std::vector<SimDuration>& v) {
    if (v.empty()) {
        return SimDuration::zero();
    }
    long double sum = 0;
    for (auto x : v) {
        sum += static_cast<long double>(x.count());
    }
    return SimDuration{std::llround(sum / static_cast<long double>(v.size()))};
}

} // namespace

void check_spec(const ReconfigSpec& spec) {
    std::vector<std::string> problems;
    if (spec.ns < 1 || spec.nd < 1) {
        problems.emplace_back("ns and nd must be >= 1");
    }
    if (spec.data.elements < 0) {
        problems.emplace_back("data.elements must be >= 0");
    }
    if (spec.data.element_width < 1) {
        problems.emplace_back("data.element_width must be >= 1");
    }
    if (!eligible(spec.method, spec.strategy)) {
        problems.push_back("method " + std::string(to_string(spec.method)) +
                           " does not support strategy " + std::string(to_string(spec.strategy)));
    }
    if (spec.data.category == DataCategory::Variable && spec.strategy != Strategy::Blocking) {
        problems.emplace_back("variable data can only be redistributed with the blocking strategy");
    }
    for (auto& v : spec.cost.violations()) {
        problems.push_back(std::move(v));
    }
    for (auto& v : spec.app.violations()) {
        problems.push_back(std::move(v));
    }
    if (!problems.empty()) {
        std::string msg = "invalid reconfiguration";
        for (const auto& p : problems) {
            msg += "; " + p;
        }
        throw ConfigError(msg);
    }
}

RunRecord measure(const ReconfigSpec& spec, const std::vector<TraceEvent>& trace) {
    RunRecord rec;
    rec.method = spec.method;
    rec.strategy = spec.strategy;
    rec.ns = spec.ns;
    rec.nd = spec.nd;

    std::optional<SimTime> begin;
    std::optional<SimTime> end;
    std::map<int, SimTime> done;
    for (const auto& e : trace) {
        if (e.kind == EventKind::RedistBegin) {
            begin = begin ? std::min(*begin, e.time) : e.time;
        } else if (e.kind == EventKind::Done) {
            end = end ? std::max(*end, e.time) : e.time;
            done[e.rank] = e.time;
        }
    }
    if (!begin || !end) {
        throw ProtocolError("trace has no complete redistribution");
    }
    rec.t_redis = *end - *begin;

    std::vector<SimDuration> normal;
    std::vector<SimDuration> during;
    std::vector<SimDuration> after;
    std::map<int, int> overlapped;
    for (const auto& e : trace) {
        if (e.kind != EventKind::Compute || e.stream != StreamKind::Main) {
            continue;
        }
        const auto it = done.find(e.rank);
        if (e.time < *begin) {
            normal.push_back(e.duration);
        } else if (it != done.end() && e.time + e.duration <= it->second) {
            during.push_back(e.duration);
            ++overlapped[e.rank];
        } else if (it != done.end() && e.time >= it->second) {
            after.push_back(e.duration);
        }
    }
    rec.t_it_normal = mean(normal);
    rec.t_it_during = mean(during);
    rec.t_it_nd = mean(after);
    for (const auto& [rank, n] : overlapped) {
        rec.n_it_overlapped = std::max(rec.n_it_overlapped, n);
    }
    rec.trace_hash = msim::trace_hash(trace);
    return rec;
}

ReconfigOutcome simulate_reconfiguration(const ReconfigSpec& spec) {
    check_spec(spec);
    const ReconfigPlan plan(spec.ns, spec.nd);

    RuntimeOptions options;
    options.seed = spec.seed;
    options.collective_blocks_background = spec.collective_blocks_background;
    Runtime rt(spec.cost, options);

    ReconfigOutcome out;
    out.source_data = make_payload(spec.data.elements, spec.data.element_width, spec.seed);
    RedistShared shared(plan, spec.data, first_ranks(rt, plan.world_size()), out.source_data);
    out.states.resize(static_cast<std::size_t>(plan.world_size()));

    Driver driver{&spec, &shared, first_ranks(rt, spec.ns), first_ranks(rt, spec.nd), &out.states};
    for (int r = 0; r < spec.ns; ++r) {
        rt.spawn(r, StreamKind::Main, [&driver](Context c) { return rank_program(c, &driver); });
    }
    rt.run();

    out.trace = rt.trace();
    out.drain_data = shared.reassemble();
    out.record = measure(spec, out.trace);
    return out;
}

RunRecord run_reconfiguration(const ReconfigSpec& spec) {
    return simulate_reconfiguration(spec).record;
}

RunRecord redistribute_collective(int ns, int nd, DataDescriptor data, Strategy strategy,
                                  const AppConfig& app, const CostModel& cost, std::uint64_t seed) {
    ReconfigSpec spec;
    spec.ns = ns;
    spec.nd = nd;
    spec.method = Method::Collective;
    spec.strategy = strategy;
    spec.data = data;
    spec.app = app;
    spec.cost = cost;
    spec.seed = seed;
    return run_reconfiguration(spec);
}

RunRecord rma_redistribute(int ns, int nd, DataDescriptor data, Method method, const AppConfig& app,
                           const CostModel& cost, std::uint64_t seed) {
    if (!is_rma(method)) {
        throw std::invalid_argument("rma_redistribute needs a one-sided method");
    }
    ReconfigSpec spec;
    spec.ns = ns;
    spec.nd = nd;
    spec.method = method;
    spec.strategy = Strategy::Blocking;
    spec.data = data;
    spec.app = app;
    spec.cost = cost;
    spec.seed = seed;
    return run_reconfiguration(spec);
}

} // namespace msim
