#include "msim/runtime.hpp"

#include "msim/errors.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

namespace msim {
namespace {

std::string describe_window(const std::string& tag) { return "window '" + tag + "'"; }

template <class E>
[[noreturn]] void fail(const std::string& msg) {
    throw E(msg);
}

} // namespace

int Communicator::index_of(int world_rank) const noexcept {
    auto it = std::find(ranks.begin(), ranks.end(), world_rank);
    return it == ranks.end() ? -1 : static_cast<int>(it - ranks.begin());
}

// ---------------------------------------------------------------------------
// Runtime: event loop and streams

Runtime::Runtime(CostModel cost, RuntimeOptions options)
    : cost_(cost), options_(options), rng_(options.seed) {
    auto bad = cost_.violations();
    if (!bad.empty()) {
        throw ConfigError("invalid cost model: " + bad.front());
    }
}

Runtime::~Runtime() {
    // Frames may still be parked (after a failure); destroying the roots
    // unwinds every nested task.
    streams_.clear();
}

Communicator Runtime::communicator(std::vector<int> world_ranks) {
    Communicator c;
    c.id = static_cast<int>(comms_.size());
    c.ranks = std::move(world_ranks);
    comms_.push_back(c);
    return c;
}

StreamId Runtime::add_stream(int rank, StreamKind kind) {
    Stream s;
    s.rank = rank;
    s.kind = kind;
    s.clock = now_;
    streams_.push_back(std::move(s));
    return StreamId{static_cast<std::uint32_t>(streams_.size() - 1)};
}

void Runtime::launch(StreamId id, Task<void> task, SimTime at) {
    auto& s = stream(id);
    s.parked = task.handle();
    s.root = std::move(task);
    s.blocked_on = "start";
    schedule(at, [this, id] {
        record(id, EventKind::Start);
        resume(id);
    });
}

void Runtime::schedule(SimTime at, std::function<void()> action) {
    queue_.push(Event{at, seq_++, std::move(action)});
}

void Runtime::wake(StreamId id, SimTime at) {
    schedule(std::max(at, now_), [this, id] { resume(id); });
}

void Runtime::Park::await_suspend(std::coroutine_handle<> h) noexcept {
    rt->stream(id).parked = h;
}

Runtime::Park Runtime::park(StreamId id, std::string reason) {
    stream(id).blocked_on = std::move(reason);
    return Park{this, id};
}

void Runtime::resume(StreamId id) {
    auto& s = stream(id);
    if (s.finished || !s.parked) {
        return;
    }
    auto h = std::exchange(s.parked, {});
    s.blocked_on.clear();
    s.clock = now_;
    h.resume();

    auto& after = stream(id);
    if (after.root.done() && !after.finished) {
        after.finished = true;
        after.clock = now_;
        if (auto err = after.root.error()) {
            if (!failure_) {
                failure_ = err;
                failed_stream_ = id;
            }
            return;
        }
        record(id, EventKind::Finish);
        for (auto j : std::exchange(after.joiners, {})) {
            wake(j, now_);
        }
    }
}

void Runtime::run() {
    while (!queue_.empty() && !failure_) {
        if (++executed_ > options_.max_events) {
            throw Error("event limit of " + std::to_string(options_.max_events) + " exceeded");
        }
        // The queue exposes const references only; copy the action out
        // before popping so it may schedule further events.
        auto action = std::move(const_cast<Event&>(queue_.top()).action);
        now_ = queue_.top().at;
        queue_.pop();
        action();
    }

    if (failure_) {
        const auto& s = stream(*failed_stream_);
        const std::string where = "rank " + std::to_string(s.rank) + " (" +
                                  std::string(to_string(s.kind)) + "): ";
        try {
            std::rethrow_exception(failure_);
        } catch (const ProtocolError& e) {
            throw ProtocolError(where + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        } catch (const DeadlockError& e) {
            throw DeadlockError(where + e.what());
        }
    }

    std::ostringstream blocked;
    bool any = false;
    for (const auto& s : streams_) {
        if (!s.finished) {
            any = true;
            blocked << "\n  rank " << s.rank << " " << to_string(s.kind) << ": blocked in "
                    << (s.blocked_on.empty() ? "<unknown>" : s.blocked_on);
        }
    }
    if (any) {
        throw DeadlockError("deadlock at t=" + std::to_string(now_.time_since_epoch().count()) +
                            "ns; event queue empty with blocked streams:" + blocked.str());
    }
}

Runtime::Stream& Runtime::stream(StreamId id) {
    return streams_.at(static_cast<std::size_t>(id));
}

const Runtime::Stream& Runtime::stream(StreamId id) const {
    return streams_.at(static_cast<std::size_t>(id));
}

int Runtime::stream_rank(StreamId id) const { return stream(id).rank; }
StreamKind Runtime::stream_kind(StreamId id) const { return stream(id).kind; }
bool Runtime::stream_finished(StreamId id) const { return stream(id).finished; }
SimTime Runtime::stream_clock(StreamId id) const { return stream(id).clock; }

bool Runtime::window_freed(WindowId id) const {
    return windows_.at(static_cast<std::size_t>(id)).freed;
}

void Runtime::record(StreamId id, EventKind kind, std::string detail, int peer,
                     std::int64_t count, SimDuration duration, bool flag) {
    const auto& s = stream(id);
    trace_.push_back(TraceEvent{now_, s.rank, s.kind, kind, peer, count, duration, flag,
                                std::move(detail)});
}

Runtime::Window& Runtime::window(WindowId id, const char* op) {
    const auto idx = static_cast<std::size_t>(id);
    if (idx >= windows_.size()) {
        fail<ProtocolError>(std::string(op) + ": unknown window");
    }
    auto& w = windows_[idx];
    if (!w.created) {
        fail<ProtocolError>(std::string(op) + ": " + describe_window(w.tag) +
                            " used before its creation completed");
    }
    if (w.freed) {
        fail<ProtocolError>(std::string(op) + ": " + describe_window(w.tag) + " already freed");
    }
    return w;
}

Runtime::Request& Runtime::request(RequestId id, const char* op) {
    const auto idx = static_cast<std::size_t>(id);
    if (idx >= requests_.size()) {
        fail<ProtocolError>(std::string(op) + ": unknown request");
    }
    auto& r = requests_[idx];
    if (r.released) {
        fail<ProtocolError>(std::string(op) + ": request already freed");
    }
    return r;
}

// ---------------------------------------------------------------------------
// Requests and transfers

RequestId Runtime::new_request(EventKind kind, int owner) {
    Request r;
    r.kind = kind;
    r.owner = owner;
    requests_.push_back(std::move(r));
    return RequestId{static_cast<std::uint32_t>(requests_.size() - 1)};
}

void Runtime::set_request_done(RequestId id, SimTime at) {
    auto& r = requests_[static_cast<std::size_t>(id)];
    r.done_at = at;
    schedule(at, [this, id] {
        auto& req = requests_[static_cast<std::size_t>(id)];
        for (auto t : req.transfers) {
            apply(t);
        }
        for (auto w : std::exchange(req.waiters, {})) {
            wake(w, now_);
        }
    });
}

bool Runtime::request_ready(Request& r) {
    if (!r.done_at || *r.done_at > now_) {
        return false;
    }
    for (auto t : r.transfers) {
        apply(t);
    }
    return true;
}

void Runtime::apply(std::size_t idx) {
    auto& t = transfers_[idx];
    if (t.applied) {
        return;
    }
    t.applied = true;
    if (!t.dest.empty()) {
        std::memcpy(t.dest.data(), t.source.data(), t.dest.size());
    }
}

// ---------------------------------------------------------------------------
// Collectives

Runtime::Collective& Runtime::arrive(CollectiveKind kind, const Communicator& comm,
                                     const std::string& tag, StreamId who, Arrival arrival,
                                     const char* what) {
    const int me = comm.index_of(stream(who).rank);
    if (me < 0) {
        fail<ProtocolError>(std::string(what) + " '" + tag + "': rank " +
                            std::to_string(stream(who).rank) + " is not in the communicator");
    }
    auto key = std::make_tuple(comm.id, static_cast<int>(kind), tag);
    auto [it, inserted] = collectives_.try_emplace(std::move(key));
    auto& c = it->second;
    if (inserted) {
        c.kind = kind;
        c.comm = comm;
        c.tag = tag;
    }
    if (c.arrivals.contains(me)) {
        fail<ProtocolError>(std::string("duplicate ") + what + " '" + tag + "' by rank " +
                            std::to_string(stream(who).rank));
    }
    arrival.stream = who;
    arrival.at = now_;
    c.arrivals.emplace(me, std::move(arrival));
    return c;
}

bool Runtime::complete(const Collective& c) const {
    return static_cast<int>(c.arrivals.size()) == c.comm.size();
}

std::vector<std::size_t> Runtime::finish_alltoallv(Collective& c) {
    const int n = c.comm.size();
    std::size_t width = 0;
    for (const auto& [idx, a] : c.arrivals) {
        if (width == 0) {
            width = a.a2a.element_width;
        } else if (width != a.a2a.element_width) {
            fail<ProtocolError>("alltoallv '" + c.tag + "': element width differs across ranks");
        }
    }

    SimTime last{};
    for (const auto& [idx, a] : c.arrivals) {
        last = std::max(last, a.at);
    }

    SimDuration slowest = SimDuration::zero();
    for (int s = 0; s < n; ++s) {
        const auto& sa = c.arrivals.at(s).a2a;
        std::int64_t messages = 0;
        Index volume_out = 0;
        Index volume_in = 0;
        for (int d = 0; d < n; ++d) {
            const auto& da = c.arrivals.at(d).a2a;
            const Index sent = sa.send_counts[static_cast<std::size_t>(d)];
            const Index expected = da.recv_counts[static_cast<std::size_t>(s)];
            if (sent != expected) {
                fail<ProtocolError>("alltoallv '" + c.tag + "': rank " + std::to_string(s) +
                                    " sends " + std::to_string(sent) + " elements to rank " +
                                    std::to_string(d) + " which expects " +
                                    std::to_string(expected));
            }
            if (d != s) {
                const Index got = sa.recv_counts[static_cast<std::size_t>(d)];
                messages += (sent > 0) + (got > 0);
                volume_out += sent;
                volume_in += got;
            }
        }
        const auto cost = cost_.per_message_latency * messages +
                          cost_.volume_time(std::max(volume_out, volume_in));
        slowest = std::max(slowest, cost);
    }
    const SimTime done = last + cost_.barrier_latency + slowest;
    c.done_at = done;

    // Every pairwise block becomes one transfer applied at completion.
    std::vector<std::size_t> moves;
    for (int s = 0; s < n; ++s) {
        const auto& sa = c.arrivals.at(s).a2a;
        for (int d = 0; d < n; ++d) {
            const auto& da = c.arrivals.at(d).a2a;
            const auto count = static_cast<std::size_t>(sa.send_counts[static_cast<std::size_t>(d)]);
            if (count == 0) {
                continue;
            }
            const auto src_off = static_cast<std::size_t>(sa.send_displs[static_cast<std::size_t>(d)]);
            const auto dst_off = static_cast<std::size_t>(da.recv_displs[static_cast<std::size_t>(s)]);
            transfers_.push_back(Transfer{done, sa.send.subspan(src_off * width, count * width),
                                          da.recv.subspan(dst_off * width, count * width)});
            moves.push_back(transfers_.size() - 1);
        }
    }
    schedule(done, [this, moves] {
        for (auto m : moves) {
            apply(m);
        }
    });
    return moves;
}

namespace {

void check_a2a_bounds(const AlltoallvArgs& a, int n, const std::string& tag) {
    auto bad = [&](const std::string& why) {
        throw ProtocolError("alltoallv '" + tag + "': " + why);
    };
    if (a.element_width == 0) {
        bad("element width must be positive");
    }
    const auto un = static_cast<std::size_t>(n);
    if (a.send_counts.size() != un || a.send_displs.size() < un || a.recv_counts.size() != un ||
        a.recv_displs.size() < un) {
        bad("count/displacement arrays must have one entry per rank");
    }
    const auto send_elems = static_cast<Index>(a.send.size() / a.element_width);
    const auto recv_elems = static_cast<Index>(a.recv.size() / a.element_width);
    for (std::size_t i = 0; i < un; ++i) {
        if (a.send_counts[i] < 0 || a.recv_counts[i] < 0 || a.send_displs[i] < 0 ||
            a.recv_displs[i] < 0) {
            bad("negative count or displacement");
        }
        if (a.send_counts[i] > 0 && a.send_displs[i] + a.send_counts[i] > send_elems) {
            bad("send block for rank " + std::to_string(i) + " exceeds the send buffer");
        }
        if (a.recv_counts[i] > 0 && a.recv_displs[i] + a.recv_counts[i] > recv_elems) {
            bad("receive block from rank " + std::to_string(i) + " exceeds the receive buffer");
        }
    }
}

} // namespace

// ---------------------------------------------------------------------------
// One-sided transfers

std::size_t Runtime::issue_get(StreamId who, WindowId win, int target, Index remote_offset,
                               std::span<std::byte> local, Index local_offset, Index count,
                               EventKind kind) {
    const char* op = kind == EventKind::Rget ? "rget" : "get";
    auto& w = window(win, op);
    const int origin = stream(who).rank;
    if (target < 0 || target >= w.comm.size()) {
        fail<ProtocolError>(std::string(op) + ": target " + std::to_string(target) +
                            " outside " + describe_window(w.tag));
    }
    auto ep = w.epochs.find(origin);
    if (ep == w.epochs.end() || (!ep->second.all && !ep->second.targets.contains(target))) {
        fail<ProtocolError>(std::string(op) + " from rank " + std::to_string(origin) +
                            " to target " + std::to_string(target) + " outside an access epoch on " +
                            describe_window(w.tag));
    }
    if (count < 0 || remote_offset < 0 || local_offset < 0) {
        fail<ProtocolError>(std::string(op) + ": negative offset or count");
    }
    const auto width = w.width;
    const auto remote = w.exposed[static_cast<std::size_t>(target)];
    const auto remote_elems = static_cast<Index>(remote.size() / width);
    const auto local_elems = static_cast<Index>(local.size() / width);
    if (count > 0 && (remote_offset + count > remote_elems || local_offset + count > local_elems)) {
        fail<ProtocolError>(std::string(op) + ": access of " + std::to_string(count) +
                            " elements out of bounds (remote " + std::to_string(remote_offset) + "/" +
                            std::to_string(remote_elems) + ", local " + std::to_string(local_offset) +
                            "/" + std::to_string(local_elems) + ")");
    }

    const auto bytes = static_cast<std::size_t>(count) * width;
    Transfer t;
    t.done_at = count == 0 ? now_ : now_ + cost_.message_time(count);
    if (count > 0) {
        t.source = remote.subspan(static_cast<std::size_t>(remote_offset) * width, bytes);
        t.dest = local.subspan(static_cast<std::size_t>(local_offset) * width, bytes);
    }
    transfers_.push_back(t);
    const auto idx = transfers_.size() - 1;
    w.transfers.push_back(idx);
    ep->second.by_target[target].push_back(idx);
    if (count > 0) {
        schedule(t.done_at, [this, idx] { apply(idx); });
    } else {
        apply(idx);
    }
    record(who, kind, "rdisp=" + std::to_string(remote_offset) + " ldisp=" + std::to_string(local_offset),
           target, count);
    return idx;
}

// ---------------------------------------------------------------------------
// Context

int Context::rank() const { return rt_->stream_rank(id_); }
StreamKind Context::stream() const { return rt_->stream_kind(id_); }
SimTime Context::now() const { return rt_->now(); }
const CostModel& Context::cost() const { return rt_->cost(); }

void Context::mark(EventKind kind, std::string detail) { rt_->record(id_, kind, std::move(detail)); }

Task<void> Context::sleep(SimDuration d) {
    if (d > SimDuration::zero()) {
        rt_->wake(id_, rt_->now() + d);
        co_await rt_->park(id_, "sleep");
    }
}

Task<void> Context::compute(SimDuration d, std::string detail) {
    rt_->record(id_, EventKind::Compute, std::move(detail), -1, 0, d);
    co_await sleep(d);
}

Task<WindowId> Context::win_create(const Communicator& comm, std::string tag,
                                   std::span<const std::byte> exposed, std::size_t element_width) {
    auto& rt = *rt_;
    if (element_width == 0) {
        throw ProtocolError("win_create '" + tag + "': element width must be positive");
    }
    Runtime::Arrival a;
    a.exposed = exposed;
    a.width = element_width;
    rt.record(id_, EventKind::WinCreate, "tag=" + tag, -1,
              static_cast<std::int64_t>(exposed.size() / element_width));
    auto& c = rt.arrive(Runtime::CollectiveKind::WinCreate, comm, tag, id_, std::move(a), "win_create");
    if (!c.window) {
        Runtime::Window w;
        w.comm = comm;
        w.tag = tag;
        w.width = element_width;
        w.exposed.resize(static_cast<std::size_t>(comm.size()));
        rt.windows_.push_back(std::move(w));
        c.window = WindowId{static_cast<std::uint32_t>(rt.windows_.size() - 1)};
    }
    const WindowId id = *c.window;
    if (rt.complete(c)) {
        auto& w = rt.windows_[static_cast<std::size_t>(id)];
        SimTime last{};
        for (const auto& [idx, arr] : c.arrivals) {
            if (arr.width != element_width) {
                throw ProtocolError("win_create '" + tag + "': element width differs across ranks");
            }
            w.exposed[static_cast<std::size_t>(idx)] = arr.exposed;
            last = std::max(last, arr.at);
        }
        w.created = true;
        const SimTime done = last + rt.cost().window_create_latency;
        c.done_at = done;
        for (const auto& [idx, arr] : c.arrivals) {
            rt.wake(arr.stream, done);
        }
    }
    co_await rt.park(id_, "win_create(" + tag + ")");
    co_return id;
}

Task<void> Context::win_free(WindowId win) {
    auto& rt = *rt_;
    auto& w = rt.window(win, "win_free");
    const int me = rank();
    if (auto ep = w.epochs.find(me); ep != w.epochs.end()) {
        throw ProtocolError("win_free of " + describe_window(w.tag) + " with an open access epoch");
    }
    const std::string tag = w.tag;
    const Communicator comm = w.comm;
    rt.record(id_, EventKind::WinFree, "tag=" + tag);
    auto& c = rt.arrive(Runtime::CollectiveKind::WinFree, comm, tag, id_, {}, "win_free");
    if (rt.complete(c)) {
        SimTime last{};
        for (const auto& [idx, arr] : c.arrivals) {
            last = std::max(last, arr.at);
        }
        auto& fw = rt.windows_[static_cast<std::size_t>(win)];
        for (auto t : fw.transfers) {
            last = std::max(last, rt.transfers_[t].done_at);
        }
        const SimTime done = last + rt.cost().window_free_latency;
        c.done_at = done;
        rt.schedule(done, [&rt, win] {
            auto& target = rt.windows_[static_cast<std::size_t>(win)];
            for (auto t : target.transfers) {
                rt.apply(t);
            }
            target.freed = true;
        });
        for (const auto& [idx, arr] : c.arrivals) {
            rt.wake(arr.stream, done);
        }
    }
    co_await rt.park(id_, "win_free(" + tag + ")");
}

Task<void> Context::lock(WindowId win, int target, LockAssert assert) {
    auto& rt = *rt_;
    auto& w = rt.window(win, "lock");
    const int me = rank();
    if (target < 0 || target >= w.comm.size()) {
        throw ProtocolError("lock: target " + std::to_string(target) + " outside " +
                            describe_window(w.tag));
    }
    auto& ep = w.epochs[me];
    if (ep.all) {
        throw ProtocolError("lock of target " + std::to_string(target) +
                            " while holding lock_all on " + describe_window(w.tag));
    }
    if (ep.targets.contains(target)) {
        throw ProtocolError("nested lock of target " + std::to_string(target) + " on " +
                            describe_window(w.tag));
    }
    ep.targets.insert(target);
    rt.record(id_, EventKind::Lock, assert == LockAssert::NoCheck ? "shared nocheck" : "shared",
              target);
    co_await sleep(rt.cost().lock_latency);
}

Task<void> Context::unlock(WindowId win, int target) {
    auto& rt = *rt_;
    auto& w = rt.window(win, "unlock");
    const int me = rank();
    auto ep = w.epochs.find(me);
    if (ep == w.epochs.end() || ep->second.all || !ep->second.targets.contains(target)) {
        throw ProtocolError("unlock of target " + std::to_string(target) + " without a lock on " +
                            describe_window(w.tag));
    }
    SimTime done = rt.now();
    std::vector<std::size_t> pending;
    if (auto bt = ep->second.by_target.find(target); bt != ep->second.by_target.end()) {
        pending = std::move(bt->second);
        ep->second.by_target.erase(bt);
    }
    for (auto t : pending) {
        done = std::max(done, rt.transfers_[t].done_at);
    }
    ep->second.targets.erase(target);
    if (ep->second.targets.empty() && ep->second.by_target.empty()) {
        w.epochs.erase(ep);
    }
    rt.record(id_, EventKind::Unlock, {}, target, 0, done - rt.now());
    if (done > rt.now()) {
        rt.wake(id_, done);
        co_await rt.park(id_, "unlock(" + std::to_string(target) + ")");
    }
    for (auto t : pending) {
        rt.apply(t);
    }
}

Task<void> Context::lock_all(WindowId win, LockAssert assert) {
    auto& rt = *rt_;
    auto& w = rt.window(win, "lock_all");
    auto& ep = w.epochs[rank()];
    if (ep.all || !ep.targets.empty()) {
        throw ProtocolError("lock_all on " + describe_window(w.tag) +
                            " while an access epoch is already open");
    }
    ep.all = true;
    rt.record(id_, EventKind::LockAll, assert == LockAssert::NoCheck ? "nocheck" : "");
    co_await sleep(rt.cost().lock_latency);
}

Task<void> Context::unlock_all(WindowId win) {
    auto& rt = *rt_;
    auto& w = rt.window(win, "unlock_all");
    auto ep = w.epochs.find(rank());
    if (ep == w.epochs.end() || !ep->second.all) {
        throw ProtocolError("unlock_all without lock_all on " + describe_window(w.tag));
    }
    SimTime done = rt.now();
    std::vector<std::size_t> pending;
    for (auto& [target, list] : ep->second.by_target) {
        for (auto t : list) {
            done = std::max(done, rt.transfers_[t].done_at);
            pending.push_back(t);
        }
    }
    w.epochs.erase(ep);
    rt.record(id_, EventKind::UnlockAll, {}, -1, 0, done - rt.now());
    if (done > rt.now()) {
        rt.wake(id_, done);
        co_await rt.park(id_, "unlock_all");
    }
    for (auto t : pending) {
        rt.apply(t);
    }
}

void Context::get(WindowId win, int target, Index remote_offset, std::span<std::byte> local,
                  Index local_offset, Index count) {
    rt_->issue_get(id_, win, target, remote_offset, local, local_offset, count, EventKind::Get);
}

RequestId Context::rget(WindowId win, int target, Index remote_offset, std::span<std::byte> local,
                        Index local_offset, Index count) {
    auto& rt = *rt_;
    const auto t = rt.issue_get(id_, win, target, remote_offset, local, local_offset, count,
                                EventKind::Rget);
    const auto id = rt.new_request(EventKind::Rget, rank());
    auto& r = rt.requests_[static_cast<std::size_t>(id)];
    r.transfers.push_back(t);
    rt.set_request_done(id, rt.transfers_[t].done_at);
    return id;
}

Task<bool> Context::test(RequestId req) {
    auto& rt = *rt_;
    auto& r = rt.request(req, "test");
    const bool ready = rt.request_ready(r);
    rt.record(id_, EventKind::Test, std::string("req=") + std::string(to_string(r.kind)), -1, 0,
              SimDuration::zero(), ready);
    co_await sleep(rt.cost().test_cost);
    co_return ready;
}

Task<bool> Context::testall(std::span<const RequestId> reqs) {
    auto& rt = *rt_;
    bool ready = true;
    for (auto id : reqs) {
        auto& r = rt.request(id, "testall");
        ready = rt.request_ready(r) && ready;
    }
    rt.record(id_, EventKind::Testall, {}, -1, static_cast<std::int64_t>(reqs.size()),
              SimDuration::zero(), ready);
    co_await sleep(rt.cost().test_cost);
    co_return ready;
}

Task<void> Context::wait(RequestId req) {
    auto& rt = *rt_;
    auto& r = rt.request(req, "wait");
    const auto kind = r.kind;
    rt.record(id_, EventKind::Wait, std::string("req=") + std::string(to_string(kind)));
    if (!rt.request_ready(r)) {
        r.waiters.push_back(id_);
        co_await rt.park(id_, "wait(" + std::string(to_string(kind)) + ")");
        rt.request_ready(rt.requests_[static_cast<std::size_t>(req)]);
    }
}

Task<void> Context::waitall(std::span<const RequestId> reqs) {
    for (auto id : reqs) {
        co_await wait(id);
    }
}

void Context::request_free(RequestId req) { rt_->request(req, "request_free").released = true; }

RequestId Context::ibarrier(const Communicator& comm, std::string tag) {
    auto& rt = *rt_;
    const auto id = rt.new_request(EventKind::Ibarrier, rank());
    Runtime::Arrival a;
    a.request = id;
    auto& c = rt.arrive(Runtime::CollectiveKind::Ibarrier, comm, tag, id_, std::move(a), "ibarrier");
    rt.record(id_, EventKind::Ibarrier, "tag=" + tag);
    if (rt.complete(c)) {
        SimTime last{};
        for (const auto& [idx, arr] : c.arrivals) {
            last = std::max(last, arr.at);
        }
        const SimTime done = last + rt.cost().barrier_latency;
        c.done_at = done;
        for (const auto& [idx, arr] : c.arrivals) {
            rt.set_request_done(*arr.request, done);
        }
    }
    return id;
}

Task<void> Context::barrier(const Communicator& comm, std::string tag) {
    auto& rt = *rt_;
    const auto id = rt.new_request(EventKind::Barrier, rank());
    Runtime::Arrival a;
    a.request = id;
    auto& c = rt.arrive(Runtime::CollectiveKind::Ibarrier, comm, tag, id_, std::move(a), "barrier");
    rt.record(id_, EventKind::Barrier, "tag=" + tag);
    if (rt.complete(c)) {
        SimTime last{};
        for (const auto& [idx, arr] : c.arrivals) {
            last = std::max(last, arr.at);
        }
        const SimTime done = last + rt.cost().barrier_latency;
        c.done_at = done;
        for (const auto& [idx, arr] : c.arrivals) {
            rt.set_request_done(*arr.request, done);
        }
    }
    auto& r = rt.requests_[static_cast<std::size_t>(id)];
    if (!rt.request_ready(r)) {
        r.waiters.push_back(id_);
        co_await rt.park(id_, "barrier(" + tag + ")");
    }
    rt.requests_[static_cast<std::size_t>(id)].released = true;
}

Task<void> Context::alltoallv(const Communicator& comm, std::string tag, AlltoallvArgs args) {
    auto& rt = *rt_;
    check_a2a_bounds(args, comm.size(), tag);
    const auto id = rt.new_request(EventKind::Alltoallv, rank());
    Runtime::Arrival a;
    a.request = id;
    a.a2a = std::move(args);
    rt.record(id_, EventKind::Alltoallv, "tag=" + tag);
    auto& c = rt.arrive(Runtime::CollectiveKind::Alltoallv, comm, tag, id_, std::move(a), "alltoallv");
    if (rt.complete(c)) {
        const auto moves = rt.finish_alltoallv(c);
        for (const auto& [idx, arr] : c.arrivals) {
            rt.requests_[static_cast<std::size_t>(*arr.request)].transfers = moves;
            rt.set_request_done(*arr.request, *c.done_at);
        }
    }
    auto& r = rt.requests_[static_cast<std::size_t>(id)];
    if (!rt.request_ready(r)) {
        r.waiters.push_back(id_);
        co_await rt.park(id_, "alltoallv(" + tag + ")");
    }
    rt.requests_[static_cast<std::size_t>(id)].released = true;
}

RequestId Context::ialltoallv(const Communicator& comm, std::string tag, AlltoallvArgs args) {
    auto& rt = *rt_;
    check_a2a_bounds(args, comm.size(), tag);
    const auto id = rt.new_request(EventKind::Ialltoallv, rank());
    Runtime::Arrival a;
    a.request = id;
    a.a2a = std::move(args);
    rt.record(id_, EventKind::Ialltoallv, "tag=" + tag);
    auto& c = rt.arrive(Runtime::CollectiveKind::Alltoallv, comm, tag, id_, std::move(a), "ialltoallv");
    if (rt.complete(c)) {
        const auto moves = rt.finish_alltoallv(c);
        for (const auto& [idx, arr] : c.arrivals) {
            rt.requests_[static_cast<std::size_t>(*arr.request)].transfers = moves;
            rt.set_request_done(*arr.request, *c.done_at);
        }
    }
    return id;
}

bool Context::finished(StreamId other) const { return rt_->stream_finished(other); }

Task<void> Context::join(StreamId other) {
    auto& rt = *rt_;
    rt.record(id_, EventKind::Join);
    if (!rt.stream_finished(other)) {
        rt.stream(other).joiners.push_back(id_);
        co_await rt.park(id_, "join");
    }
}

} // namespace msim
