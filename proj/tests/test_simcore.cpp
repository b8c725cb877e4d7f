#include <doctest.h>

#include "msim/errors.hpp"
#include "msim/runtime.hpp"

#include <cstring>
#include <numeric>
#include <vector>

using namespace msim;

namespace {

CostModel round_costs() {
    CostModel c;
    c.window_create_latency = from_seconds(0.1);
    c.window_free_latency = from_seconds(0.1);
    c.lock_latency = from_seconds(0.001);
    c.per_message_latency = from_seconds(1e-6);
    c.bandwidth = 1e9; // one element per nanosecond
    c.barrier_latency = from_seconds(0.1);
    return c;
}

std::vector<std::byte> iota_bytes(std::size_t elements, std::uint64_t start) {
    std::vector<std::uint64_t> v(elements);
    std::iota(v.begin(), v.end(), start);
    std::vector<std::byte> out(elements * 8);
    std::memcpy(out.data(), v.data(), out.size());
    return out;
}

std::uint64_t element(const std::vector<std::byte>& buf, std::size_t i) {
    std::uint64_t v = 0;
    std::memcpy(&v, buf.data() + i * 8, 8);
    return v;
}

Task<void> create_at(Context ctx, Communicator comm, SimDuration delay, SimTime* resumed) {
    co_await ctx.sleep(delay);
    co_await ctx.win_create(comm, "w", {}, 8);
    *resumed = ctx.now();
}

Task<void> create_and_free(Context ctx, Communicator comm, SimDuration free_delay, SimTime* freed) {
    auto win = co_await ctx.win_create(comm, "w", {}, 8);
    co_await ctx.sleep(free_delay);
    co_await ctx.win_free(win);
    *freed = ctx.now();
}

struct GetProbe {
    SimTime locked{};
    SimTime unlocked{};
};

// Rank 0 exposes `exposed`; rank 1 locks rank 0, reads `count` elements and unlocks.
Task<void> exposer(Context ctx, Communicator comm, std::span<const std::byte> exposed) {
    auto win = co_await ctx.win_create(comm, "w", exposed, 8);
    co_await ctx.win_free(win);
}

Task<void> reader(Context ctx, Communicator comm, Index count, std::vector<std::byte>* into,
                  GetProbe* probe) {
    auto win = co_await ctx.win_create(comm, "w", {}, 8);
    co_await ctx.lock(win, 0, LockAssert::NoCheck);
    probe->locked = ctx.now();
    ctx.get(win, 0, 1, *into, 0, count);
    co_await ctx.unlock(win, 0);
    probe->unlocked = ctx.now();
    co_await ctx.win_free(win);
}

Task<void> reader_lock_all(Context ctx, Communicator comm, Index count,
                           std::vector<std::byte>* into, GetProbe* probe) {
    auto win = co_await ctx.win_create(comm, "w", {}, 8);
    co_await ctx.lock_all(win);
    probe->locked = ctx.now();
    ctx.get(win, 0, 0, *into, 0, count);
    ctx.get(win, 1, 0, *into, count, 0);
    co_await ctx.unlock_all(win);
    probe->unlocked = ctx.now();
    co_await ctx.win_free(win);
}

Task<void> get_without_lock(Context ctx, Communicator comm, std::vector<std::byte>* into) {
    auto win = co_await ctx.win_create(comm, "w", {}, 8);
    ctx.get(win, 0, 0, *into, 0, 1);
    co_await ctx.win_free(win);
}

Task<void> unlock_without_lock(Context ctx, Communicator comm) {
    auto win = co_await ctx.win_create(comm, "w", {}, 8);
    co_await ctx.unlock(win, 0);
}

Task<void> nested_lock(Context ctx, Communicator comm) {
    auto win = co_await ctx.win_create(comm, "w", {}, 8);
    co_await ctx.lock(win, 0);
    co_await ctx.lock(win, 0);
}

Task<void> free_with_epoch(Context ctx, Communicator comm) {
    auto win = co_await ctx.win_create(comm, "w", {}, 8);
    co_await ctx.lock_all(win);
    co_await ctx.win_free(win);
}

Task<void> double_create(Context ctx, Communicator comm) {
    co_await ctx.win_create(comm, "w", {}, 8);
    co_await ctx.win_create(comm, "w", {}, 8);
}

Task<void> barrier_at(Context ctx, Communicator comm, SimDuration delay, SimTime* done) {
    co_await ctx.sleep(delay);
    auto req = ctx.ibarrier(comm, "b");
    co_await ctx.wait(req);
    *done = ctx.now();
}

Task<void> duplicate_ibarrier(Context ctx, Communicator comm) {
    (void)ctx.ibarrier(comm, "b");
    (void)ctx.ibarrier(comm, "b");
    co_return;
}

Task<void> poll_barrier(Context ctx, Communicator comm, int polls, std::vector<bool>* results) {
    auto req = ctx.ibarrier(comm, "b");
    for (int i = 0; i < polls; ++i) {
        results->push_back(co_await ctx.test(req));
        co_await ctx.sleep(from_seconds(1.0));
    }
}

Task<void> rget_probe(Context ctx, Communicator comm, Index count, std::vector<std::byte>* into,
                      std::vector<bool>* tests, SimTime* done) {
    auto win = co_await ctx.win_create(comm, "w", {}, 8);
    co_await ctx.lock(win, 0);
    const auto issued = ctx.now();
    auto req = ctx.rget(win, 0, 0, *into, 0, count);
    tests->push_back(co_await ctx.test(req));
    co_await ctx.wait(req);
    *done = ctx.now();
    tests->push_back(co_await ctx.test(req));
    co_await ctx.unlock(win, 0);
    co_await ctx.win_free(win);
    (void)issued;
}

Task<void> test_freed_request(Context ctx, Communicator comm) {
    auto req = ctx.ibarrier(comm, "b");
    co_await ctx.wait(req);
    ctx.request_free(req);
    (void)co_await ctx.test(req);
}

Task<void> a2a_rank(Context ctx, Communicator comm, AlltoallvArgs args, bool nonblocking,
                    SimTime* done) {
    if (nonblocking) {
        auto req = ctx.ialltoallv(comm, "x", std::move(args));
        co_await ctx.wait(req);
    } else {
        co_await ctx.alltoallv(comm, "x", std::move(args));
    }
    *done = ctx.now();
}

Communicator world(Runtime& rt, int n) {
    std::vector<int> ranks(static_cast<std::size_t>(n));
    std::iota(ranks.begin(), ranks.end(), 0);
    return rt.communicator(ranks);
}

} // namespace

TEST_CASE("win_create is collective and charges the creation latency once") {
    SUBCASE("simultaneous arrival") {
        Runtime rt(round_costs());
        auto comm = world(rt, 3);
        std::vector<SimTime> resumed(3);
        for (int r = 0; r < 3; ++r) {
            rt.spawn(r, StreamKind::Main, [&, r](Context c) {
                return create_at(c, comm, SimDuration::zero(), &resumed[static_cast<std::size_t>(r)]);
            });
        }
        rt.run();
        for (auto t : resumed) {
            CHECK(t == kTimeZero + from_seconds(0.1));
        }
    }
    SUBCASE("late arrival") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        std::vector<SimTime> resumed(2);
        rt.spawn(0, StreamKind::Main, [&](Context c) { return create_at(c, comm, {}, &resumed[0]); });
        rt.spawn(1, StreamKind::Main,
                 [&](Context c) { return create_at(c, comm, from_seconds(5.0), &resumed[1]); });
        rt.run();
        CHECK(resumed[0] == kTimeZero + from_seconds(5.1));
        CHECK(resumed[1] == kTimeZero + from_seconds(5.1));
    }
    SUBCASE("missing participant is reported as a deadlock") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        SimTime resumed{};
        rt.spawn(0, StreamKind::Main, [&](Context c) { return create_at(c, comm, {}, &resumed); });
        CHECK_THROWS_WITH_AS(rt.run(), doctest::Contains("win_create(w)"), DeadlockError);
    }
    SUBCASE("double create is a protocol error") {
        Runtime rt(round_costs());
        auto comm = world(rt, 1);
        rt.spawn(0, StreamKind::Main, [&](Context c) { return double_create(c, comm); });
        CHECK_THROWS_AS(rt.run(), ProtocolError);
    }
}

TEST_CASE("win_free waits for every participant") {
    SUBCASE("simultaneous") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        std::vector<SimTime> freed(2);
        for (int r = 0; r < 2; ++r) {
            rt.spawn(r, StreamKind::Main, [&, r](Context c) {
                return create_and_free(c, comm, {}, &freed[static_cast<std::size_t>(r)]);
            });
        }
        rt.run();
        CHECK(freed[0] == kTimeZero + from_seconds(0.2));
        CHECK(freed[1] == kTimeZero + from_seconds(0.2));
    }
    SUBCASE("late") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        std::vector<SimTime> freed(2);
        rt.spawn(0, StreamKind::Main, [&](Context c) { return create_and_free(c, comm, {}, &freed[0]); });
        rt.spawn(1, StreamKind::Main,
                 [&](Context c) { return create_and_free(c, comm, from_seconds(4.9), &freed[1]); });
        rt.run();
        CHECK(freed[0] == kTimeZero + from_seconds(5.1));
        CHECK(freed[1] == freed[0]);
    }
    SUBCASE("missing participant") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        SimTime freed{};
        SimTime created{};
        rt.spawn(0, StreamKind::Main, [&](Context c) { return create_and_free(c, comm, {}, &freed); });
        rt.spawn(1, StreamKind::Main, [&](Context c) { return create_at(c, comm, {}, &created); });
        CHECK_THROWS_WITH_AS(rt.run(), doctest::Contains("win_free(w)"), DeadlockError);
    }
}

TEST_CASE("lock/get/unlock timing and copy") {
    const auto source = iota_bytes(16, 100);
    SUBCASE("unlock completes at get completion") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        std::vector<std::byte> into(8 * 8);
        GetProbe probe;
        rt.spawn(0, StreamKind::Main, [&](Context c) { return exposer(c, comm, source); });
        rt.spawn(1, StreamKind::Main, [&](Context c) { return reader(c, comm, 8, &into, &probe); });
        rt.run();
        // create 0.1 s, lock 1 ms, then per_message 1 us + 8 elements at 1 ns each.
        CHECK(probe.locked == kTimeZero + from_seconds(0.101));
        CHECK(probe.unlocked == probe.locked + from_seconds(1e-6) + SimDuration{8});
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(element(into, i) == 101 + i);
        }
    }
    SUBCASE("zero-count get completes immediately") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        std::vector<std::byte> into;
        GetProbe probe;
        rt.spawn(0, StreamKind::Main, [&](Context c) { return exposer(c, comm, source); });
        rt.spawn(1, StreamKind::Main, [&](Context c) { return reader(c, comm, 0, &into, &probe); });
        rt.run();
        CHECK(probe.unlocked == probe.locked);
    }
    SUBCASE("lock_all charges one lock latency") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        std::vector<std::byte> into(4 * 8);
        GetProbe probe;
        rt.spawn(0, StreamKind::Main, [&](Context c) { return exposer(c, comm, source); });
        rt.spawn(1, StreamKind::Main,
                 [&](Context c) { return reader_lock_all(c, comm, 4, &into, &probe); });
        rt.run();
        CHECK(probe.locked == kTimeZero + from_seconds(0.101));
        CHECK(probe.unlocked == probe.locked + from_seconds(1e-6) + SimDuration{4});
        CHECK(element(into, 3) == 103);
    }
}

TEST_CASE("epoch discipline violations") {
    const auto source = iota_bytes(4, 0);
    SUBCASE("get without lock") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        std::vector<std::byte> into(8);
        rt.spawn(0, StreamKind::Main, [&](Context c) { return exposer(c, comm, source); });
        rt.spawn(1, StreamKind::Main, [&](Context c) { return get_without_lock(c, comm, &into); });
        CHECK_THROWS_WITH_AS(rt.run(), doctest::Contains("outside an access epoch"), ProtocolError);
    }
    SUBCASE("unlock without lock") {
        Runtime rt(round_costs());
        auto comm = world(rt, 1);
        rt.spawn(0, StreamKind::Main, [&](Context c) { return unlock_without_lock(c, comm); });
        CHECK_THROWS_WITH_AS(rt.run(), doctest::Contains("without a lock"), ProtocolError);
    }
    SUBCASE("nested lock") {
        Runtime rt(round_costs());
        auto comm = world(rt, 1);
        rt.spawn(0, StreamKind::Main, [&](Context c) { return nested_lock(c, comm); });
        CHECK_THROWS_WITH_AS(rt.run(), doctest::Contains("nested lock"), ProtocolError);
    }
    SUBCASE("free with open epoch") {
        Runtime rt(round_costs());
        auto comm = world(rt, 1);
        rt.spawn(0, StreamKind::Main, [&](Context c) { return free_with_epoch(c, comm); });
        CHECK_THROWS_WITH_AS(rt.run(), doctest::Contains("open access epoch"), ProtocolError);
    }
    SUBCASE("out of bounds read") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        std::vector<std::byte> into(16 * 8);
        GetProbe probe;
        rt.spawn(0, StreamKind::Main, [&](Context c) { return exposer(c, comm, source); });
        rt.spawn(1, StreamKind::Main, [&](Context c) { return reader(c, comm, 4, &into, &probe); });
        CHECK_THROWS_WITH_AS(rt.run(), doctest::Contains("out of bounds"), ProtocolError);
    }
}

TEST_CASE("rget, test and wait") {
    const auto source = iota_bytes(10, 7);
    Runtime rt(round_costs());
    auto comm = world(rt, 2);
    std::vector<std::byte> into(10 * 8);
    std::vector<bool> tests;
    SimTime done{};
    rt.spawn(0, StreamKind::Main, [&](Context c) { return exposer(c, comm, source); });
    rt.spawn(1, StreamKind::Main,
             [&](Context c) { return rget_probe(c, comm, 10, &into, &tests, &done); });
    rt.run();
    REQUIRE(tests.size() == 2);
    CHECK_FALSE(tests[0]); // pending right after issue
    CHECK(tests[1]);       // wait then test
    CHECK(done == kTimeZero + from_seconds(0.101) + from_seconds(1e-6) + SimDuration{10});
    CHECK(element(into, 0) == 7);
    CHECK(element(into, 9) == 16);
}

TEST_CASE("testing a freed request is a protocol error") {
    Runtime rt(round_costs());
    auto comm = world(rt, 1);
    rt.spawn(0, StreamKind::Main, [&](Context c) { return test_freed_request(c, comm); });
    CHECK_THROWS_WITH_AS(rt.run(), doctest::Contains("already freed"), ProtocolError);
}

TEST_CASE("ibarrier completes at the last arrival plus latency") {
    SUBCASE("staggered") {
        Runtime rt(round_costs());
        auto comm = world(rt, 3);
        std::vector<SimTime> done(3);
        const double arrive[] = {1.0, 2.0, 5.0};
        for (int r = 0; r < 3; ++r) {
            rt.spawn(r, StreamKind::Main, [&, r](Context c) {
                return barrier_at(c, comm, from_seconds(arrive[r]), &done[static_cast<std::size_t>(r)]);
            });
        }
        rt.run();
        for (auto t : done) {
            CHECK(t == kTimeZero + from_seconds(5.1));
        }
    }
    SUBCASE("single rank") {
        Runtime rt(round_costs());
        auto comm = world(rt, 1);
        SimTime done{};
        rt.spawn(0, StreamKind::Main, [&](Context c) { return barrier_at(c, comm, {}, &done); });
        rt.run();
        CHECK(done == kTimeZero + from_seconds(0.1));
    }
    SUBCASE("absent rank keeps the request pending") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        std::vector<bool> results;
        rt.spawn(0, StreamKind::Main, [&](Context c) { return poll_barrier(c, comm, 4, &results); });
        rt.run();
        CHECK(results == std::vector<bool>{false, false, false, false});
    }
    SUBCASE("duplicate call") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        rt.spawn(0, StreamKind::Main, [&](Context c) { return duplicate_ibarrier(c, comm); });
        CHECK_THROWS_WITH_AS(rt.run(), doctest::Contains("duplicate ibarrier"), ProtocolError);
    }
}

TEST_CASE("alltoallv") {
    SUBCASE("identity exchange leaves buffers unchanged") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        std::vector<std::vector<std::byte>> send{iota_bytes(3, 0), iota_bytes(3, 3)};
        std::vector<std::vector<std::byte>> recv(2, std::vector<std::byte>(3 * 8));
        std::vector<SimTime> done(2);
        for (int r = 0; r < 2; ++r) {
            const auto ur = static_cast<std::size_t>(r);
            AlltoallvArgs a;
            a.send = send[ur];
            a.recv = recv[ur];
            a.send_counts = r == 0 ? std::vector<Index>{3, 0} : std::vector<Index>{0, 3};
            a.recv_counts = a.send_counts;
            a.send_displs = {0, 0};
            a.recv_displs = {0, 0};
            rt.spawn(r, StreamKind::Main, [&, a, ur](Context c) { return a2a_rank(c, comm, a, false, &done[ur]); });
        }
        rt.run();
        CHECK(recv[0] == send[0]);
        CHECK(recv[1] == send[1]);
        // Self-copies carry no message cost: only the synchronization.
        CHECK(done[0] == kTimeZero + from_seconds(0.1));
    }
    SUBCASE("two sources to four drains") {
        Runtime rt(round_costs());
        auto comm = world(rt, 4);
        const auto src = block_partition(2, 8);
        const auto dst = block_partition(4, 8);
        std::vector<std::vector<std::byte>> send{iota_bytes(4, 0), iota_bytes(4, 4), {}, {}};
        std::vector<std::vector<std::byte>> recv(4, std::vector<std::byte>(2 * 8));
        std::vector<SimTime> done(4);
        for (int r = 0; r < 4; ++r) {
            const auto ur = static_cast<std::size_t>(r);
            AlltoallvArgs a;
            a.send = send[ur];
            a.recv = recv[ur];
            a.send_counts.assign(4, 0);
            a.send_displs.assign(4, 0);
            if (r < 2) {
                auto sp = compute_send_plan(src[ur], dst);
                a.send_counts = sp.counts;
                a.send_displs = sp.displs;
            }
            auto rp = compute_read_plan(dst[ur], src);
            a.recv_counts = {rp.counts[0], rp.counts[1], 0, 0};
            a.recv_displs = {rp.displs[0], rp.displs[1], 0, 0};
            rt.spawn(r, StreamKind::Main,
                     [&, a, ur](Context c) { return a2a_rank(c, comm, a, r % 2 == 1, &done[ur]); });
        }
        rt.run();
        for (std::size_t d = 0; d < 4; ++d) {
            CHECK(element(recv[d], 0) == 2 * d);
            CHECK(element(recv[d], 1) == 2 * d + 1);
            CHECK(done[d] == done[0]);
        }
    }
    SUBCASE("inconsistent plans") {
        Runtime rt(round_costs());
        auto comm = world(rt, 2);
        std::vector<std::byte> s0 = iota_bytes(2, 0), s1 = iota_bytes(2, 0);
        std::vector<std::byte> r0(16), r1(16);
        SimTime done{};
        AlltoallvArgs a0{s0, {1, 1}, {0, 1}, r0, {1, 1}, {0, 1}, 8};
        AlltoallvArgs a1{s1, {1, 1}, {0, 1}, r1, {2, 0}, {0, 0}, 8};
        rt.spawn(0, StreamKind::Main, [&](Context c) { return a2a_rank(c, comm, a0, false, &done); });
        rt.spawn(1, StreamKind::Main, [&](Context c) { return a2a_rank(c, comm, a1, false, &done); });
        CHECK_THROWS_WITH_AS(rt.run(), doctest::Contains("expects"), ProtocolError);
    }
}

TEST_CASE("identical inputs produce identical traces") {
    auto once = [] {
        const auto source = iota_bytes(16, 100);
        Runtime rt(round_costs(), RuntimeOptions{42});
        auto comm = world(rt, 2);
        std::vector<std::byte> into(8 * 8);
        GetProbe probe;
        rt.spawn(0, StreamKind::Main, [&](Context c) { return exposer(c, comm, source); });
        rt.spawn(1, StreamKind::Main, [&](Context c) { return reader(c, comm, 8, &into, &probe); });
        rt.run();
        // Per-stream clocks never run backwards.
        SimTime last{};
        for (const auto& e : rt.trace()) {
            CHECK(e.time >= last);
            last = e.time;
        }
        return rt.trace_hash();
    };
    CHECK(once() == once());
}
