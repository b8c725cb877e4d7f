#include "msim/redist.hpp"

#include "msim/errors.hpp"

#include <algorithm>
#include <cstring>

namespace msim {
namespace {

std::vector<Index> pad(const std::vector<Index>& v, int size) {
    std::vector<Index> out(static_cast<std::size_t>(size), 0);
    std::copy_n(v.begin(), std::min(v.size(), out.size()), out.begin());
    return out;
}

void enter(Context& ctx, RedistState& st, Phase next) {
    st.phase = next;
    ctx.mark(EventKind::Phase, "phase=" + std::string(to_string(next)));
}

// Opens the method's epochs and issues every read of the drain's plan, in the
// order of the lock+get loops: lock(i) and get(i) interleaved for RmaLock, a
// single lock_all up front for RmaLockAll. The first read starts at
// first_index inside its window; later ones start at 0.
Task<void> open_and_read(Context ctx, RedistShared* sh, RedistState* st, bool with_requests) {
    const auto win = *st->window;
    auto local = std::span<std::byte>(sh->new_blocks[static_cast<std::size_t>(ctx.rank())]);
    const auto& plan = st->plan;
    if (st->method == Method::RmaLockAll) {
        co_await ctx.lock_all(win, LockAssert::NoCheck);
        ++st->epochs;
    }
    Index first_index = plan.first_index;
    for (int i = plan.first_source; i < plan.last_source; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (st->method == Method::RmaLock) {
            co_await ctx.lock(win, i, LockAssert::NoCheck);
            ++st->epochs;
        }
        if (with_requests) {
            st->reads.push_back(ctx.rget(win, i, first_index, local, plan.displs[ui], plan.counts[ui]));
        } else {
            ctx.get(win, i, first_index, local, plan.displs[ui], plan.counts[ui]);
        }
        first_index = 0;
    }
}

Task<void> close_epochs(Context ctx, RedistState* st) {
    const auto win = *st->window;
    if (st->method == Method::RmaLockAll) {
        co_await ctx.unlock_all(win);
    } else {
        for (int i = st->plan.first_source; i < st->plan.last_source; ++i) {
            co_await ctx.unlock(win, i);
        }
    }
}

std::span<const std::byte> exposure(const RedistShared& sh, int rank) {
    return sh.old_blocks[static_cast<std::size_t>(rank)];
}

Task<void> blocking_routine(Context ctx, RedistShared* sh, Method method) {
    if (method == Method::Collective) {
        co_await collective_blocking(ctx, sh);
    } else {
        co_await rma_blocking(ctx, sh, method);
    }
}

// Test-first polling: one test per step, one iteration while still pending.
Task<void> poll_until(Context ctx, RequestId req, const ComputeStep& compute) {
    while (!co_await ctx.test(req)) {
        co_await compute(ctx, IterationMode{});
    }
    ctx.request_free(req);
}

} // namespace

std::string_view to_string(Phase p) {
    switch (p) {
    case Phase::Init: return "init";
    case Phase::Reading: return "reading";
    case Phase::AwaitOwnReads: return "await-own-reads";
    case Phase::BarrierSignaled: return "barrier-signaled";
    case Phase::AwaitBarrier: return "await-barrier";
    case Phase::Unlocking: return "unlocking";
    case Phase::Freeing: return "freeing";
    case Phase::Done: return "done";
    }
    return "unknown";
}

RedistShared::RedistShared(ReconfigPlan p, DataDescriptor d, Communicator w,
                           std::span<const std::byte> global)
    : plan(p), data(d), world(std::move(w)),
      source_ranges(block_partition(p.ns(), d.elements)),
      drain_ranges(block_partition(p.nd(), d.elements)) {
    const auto width = data.element_width;
    if (global.size() != static_cast<std::size_t>(data.elements) * width) {
        throw std::invalid_argument("payload size does not match the data descriptor");
    }
    const auto ranks = static_cast<std::size_t>(plan.world_size());
    old_blocks.resize(ranks);
    new_blocks.resize(ranks);
    for (int r = 0; r < plan.ns(); ++r) {
        const auto& b = source_ranges[static_cast<std::size_t>(r)];
        auto slice = global.subspan(static_cast<std::size_t>(b.ini) * width,
                                    static_cast<std::size_t>(b.size()) * width);
        old_blocks[static_cast<std::size_t>(r)].assign(slice.begin(), slice.end());
    }
    for (int r = 0; r < plan.nd(); ++r) {
        const auto& b = drain_ranges[static_cast<std::size_t>(r)];
        new_blocks[static_cast<std::size_t>(r)].assign(static_cast<std::size_t>(b.size()) * width,
                                                       std::byte{0});
    }
}

ReadPlan RedistShared::read_plan(int rank) const {
    return compute_read_plan(drain_ranges.at(static_cast<std::size_t>(rank)), source_ranges);
}

SendPlan RedistShared::send_plan(int rank) const {
    return compute_send_plan(source_ranges.at(static_cast<std::size_t>(rank)), drain_ranges);
}

AlltoallvArgs RedistShared::alltoallv_args(int rank) {
    const int size = world.size();
    const auto ur = static_cast<std::size_t>(rank);
    AlltoallvArgs a;
    a.element_width = data.element_width;
    a.send = old_blocks[ur];
    a.recv = new_blocks[ur];
    a.send_counts.assign(static_cast<std::size_t>(size), 0);
    a.send_displs.assign(static_cast<std::size_t>(size), 0);
    a.recv_counts.assign(static_cast<std::size_t>(size), 0);
    a.recv_displs.assign(static_cast<std::size_t>(size), 0);
    if (plan.is_source(rank)) {
        const auto sp = send_plan(rank);
        a.send_counts = pad(sp.counts, size);
        a.send_displs = pad(sp.displs, size);
    }
    if (plan.is_drain(rank)) {
        const auto rp = read_plan(rank);
        a.recv_counts = pad(rp.counts, size);
        a.recv_displs = pad(rp.displs, size);
    }
    return a;
}

std::vector<std::byte> RedistShared::reassemble() const {
    std::vector<std::byte> out;
    for (int r = 0; r < plan.nd(); ++r) {
        const auto& b = new_blocks[static_cast<std::size_t>(r)];
        out.insert(out.end(), b.begin(), b.end());
    }
    return out;
}

Task<void> rma_blocking(Context ctx, RedistShared* sh, Method method) {
    const int rank = ctx.rank();
    RedistState st;
    st.method = method;
    st.window = co_await ctx.win_create(sh->world, sh->tag, exposure(*sh, rank),
                                        sh->data.element_width);
    if (sh->plan.is_drain(rank)) {
        st.plan = sh->read_plan(rank);
        co_await open_and_read(ctx, sh, &st, false);
        co_await close_epochs(ctx, &st);
    }
    co_await ctx.win_free(*st.window);
}

Task<void> collective_blocking(Context ctx, RedistShared* sh) {
    co_await ctx.alltoallv(sh->world, sh->tag, sh->alltoallv_args(ctx.rank()));
}

Task<RedistState> init_rma(Context ctx, RedistShared* sh, Method method) {
    if (!is_rma(method)) {
        throw ConfigError("init_rma needs a one-sided method");
    }
    const int rank = ctx.rank();
    RedistState st;
    st.role = sh->plan.role(rank);
    st.method = method;
    st.window = co_await ctx.win_create(sh->world, sh->tag, exposure(*sh, rank),
                                        sh->data.element_width);
    switch (st.role) {
    case Role::SourceOnly:
        st.barrier = ctx.ibarrier(sh->world, sh->tag + "-drained");
        enter(ctx, st, Phase::BarrierSignaled);
        break;
    case Role::Both:
        st.plan = sh->read_plan(rank);
        co_await open_and_read(ctx, sh, &st, true);
        enter(ctx, st, Phase::AwaitOwnReads);
        break;
    case Role::DrainOnly:
        st.plan = sh->read_plan(rank);
        co_await open_and_read(ctx, sh, &st, false);
        enter(ctx, st, Phase::Reading);
        break;
    }
    co_return st;
}

Task<void> complete_rma_step(Context ctx, RedistShared* sh, RedistState* st, ComputeStep compute) {
    switch (st->phase) {
    case Phase::Init:
        throw ProtocolError("complete_rma_step before init_rma");
    case Phase::Done:
        throw ProtocolError("complete_rma_step on a finished redistribution");
    case Phase::Reading:
        // Drain-only: unlocking completes the blocking gets.
        co_await close_epochs(ctx, st);
        st->barrier = ctx.ibarrier(sh->world, sh->tag + "-drained");
        enter(ctx, *st, Phase::AwaitBarrier);
        break;
    case Phase::AwaitBarrier:
        co_await ctx.wait(*st->barrier);
        ctx.request_free(*st->barrier);
        enter(ctx, *st, Phase::Freeing);
        break;
    case Phase::AwaitOwnReads:
        if (co_await ctx.testall(st->reads)) {
            for (auto r : st->reads) {
                ctx.request_free(r);
            }
            st->barrier = ctx.ibarrier(sh->world, sh->tag + "-drained");
            enter(ctx, *st, Phase::BarrierSignaled);
        } else {
            co_await compute(ctx, IterationMode{});
            ++st->iterations;
        }
        break;
    case Phase::BarrierSignaled:
        if (co_await ctx.test(*st->barrier)) {
            ctx.request_free(*st->barrier);
            enter(ctx, *st, st->role == Role::Both ? Phase::Unlocking : Phase::Freeing);
        } else {
            co_await compute(ctx, IterationMode{});
            ++st->iterations;
        }
        break;
    case Phase::Unlocking:
        co_await close_epochs(ctx, st);
        enter(ctx, *st, Phase::Freeing);
        break;
    case Phase::Freeing:
        co_await ctx.win_free(*st->window);
        enter(ctx, *st, Phase::Done);
        break;
    }
}

Task<void> redistribute_rank(Context ctx, RedistShared* sh, Method method, Strategy strategy,
                             ComputeStep compute, double oversubscription, RedistState* out) {
    if (!eligible(method, strategy)) {
        throw ConfigError("method " + std::string(to_string(method)) +
                          " does not support strategy " + std::string(to_string(strategy)));
    }
    const int rank = ctx.rank();
    const Role role = sh->plan.role(rank);

    switch (strategy) {
    case Strategy::Blocking:
        co_await blocking_routine(ctx, sh, method);
        break;

    case Strategy::Threading:
        if (role == Role::DrainOnly) {
            co_await blocking_routine(ctx, sh, method);
            break;
        } else {
            const auto aux = ctx.spawn_aux(
                [sh, method](Context c) { return blocking_routine(c, sh, method); });
            while (!ctx.finished(aux)) {
                co_await compute(ctx, IterationMode{oversubscription, aux});
            }
            co_await ctx.join(aux);
        }
        break;

    case Strategy::NonBlocking: {
        const auto req = ctx.ialltoallv(sh->world, sh->tag, sh->alltoallv_args(rank));
        if (role == Role::DrainOnly) {
            co_await ctx.wait(req);
            ctx.request_free(req);
        } else {
            co_await poll_until(ctx, req, compute);
        }
        break;
    }

    case Strategy::WaitDrains:
        if (method == Method::Collective) {
            const auto req = ctx.ialltoallv(sh->world, sh->tag, sh->alltoallv_args(rank));
            if (role == Role::DrainOnly) {
                co_await ctx.wait(req);
                ctx.request_free(req);
                const auto bar = ctx.ibarrier(sh->world, sh->tag + "-drained");
                co_await ctx.wait(bar);
                ctx.request_free(bar);
            } else {
                co_await poll_until(ctx, req, compute);
                const auto bar = ctx.ibarrier(sh->world, sh->tag + "-drained");
                co_await poll_until(ctx, bar, compute);
            }
        } else {
            auto st = co_await init_rma(ctx, sh, method);
            while (st.phase != Phase::Done) {
                co_await complete_rma_step(ctx, sh, &st, compute);
            }
            if (out) {
                *out = std::move(st);
            }
        }
        break;
    }
}

std::vector<std::byte> make_payload(Index elements, std::size_t width, std::uint64_t seed) {
    std::vector<std::byte> out(static_cast<std::size_t>(elements) * width);
    std::uint64_t state = seed ^ 0x9e3779b97f4a7c15ULL;
    for (std::size_t off = 0; off < out.size(); off += 8) {
        // splitmix64
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        std::memcpy(out.data() + off, &z, std::min<std::size_t>(8, out.size() - off));
    }
    return out;
}

} // namespace msim
